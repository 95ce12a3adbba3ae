#include "quadinv/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "quadinv/errors.hpp"
#include "quadinv/special.hpp"

namespace quadinv {

Grid::Grid(double x_min, double x_max, std::size_t n) : x_min_(x_min), x_max_(x_max), n_(n) {
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
        throw UsageError("Grid: require finite x_max > x_min");
    if (n < 16 || (n & (n - 1)) != 0) throw UsageError("Grid: n must be a power of two >= 16");
    dx_ = (x_max - x_min) / static_cast<double>(n);
}

std::vector<double> Grid::points() const {
    std::vector<double> p(n_);
    for (std::size_t i = 0; i < n_; ++i) p[i] = x(i);
    return p;
}

WaveFunction::WaveFunction(Grid g, CVector s) : grid(g), samples(std::move(s)) {
    if (samples.size() != grid.size()) throw UsageError("WaveFunction: sample count mismatch");
}

WaveFunction WaveFunction::sample(const Grid& g, const std::function<cplx(double)>& f) {
    CVector s(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) s[i] = f(g.x(i));
    return {g, std::move(s)};
}

WaveFunction WaveFunction::zero(const Grid& g) { return {g, CVector(g.size())}; }

double max_abs(const CVector& v) {
    double m = 0.0;
    for (const cplx& z : v) m = std::max(m, std::abs(z));
    return m;
}

bool WaveFunction::boundary_decays(double ratio) const {
    const double m = max_abs(samples);
    if (m == 0.0) return true;
    const std::size_t n = samples.size();
    for (std::size_t i : {std::size_t{0}, std::size_t{1}, n - 2, n - 1}) {
        if (std::abs(samples[i]) >= ratio * m) return false;
    }
    return true;
}

namespace {

struct PlanPair {
    fftw_plan forward;
    fftw_plan backward;
};

// FFTW planning is not thread-safe; execution on new arrays is.
const PlanPair& plans_for(std::size_t n) {
    static std::mutex mtx;
    static std::map<std::size_t, PlanPair> cache;
    std::lock_guard lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    fftw_complex* buf = fftw_alloc_complex(n);
    const int ni = static_cast<int>(n);
    PlanPair p{fftw_plan_dft_1d(ni, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED),
               fftw_plan_dft_1d(ni, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED)};
    fftw_free(buf);
    if (!p.forward || !p.backward) throw NumericalError("FFTW planning failed");
    return cache.emplace(n, p).first->second;
}

CVector spectral_derivative(const Grid& g, const CVector& f, int m) {
    const std::size_t n = g.size();
    const PlanPair& p = plans_for(n);
    CVector work(f);
    auto* w = reinterpret_cast<fftw_complex*>(work.data());
    fftw_execute_dft(p.forward, w, w);
    const double k0 = 2.0 * std::numbers::pi / g.span();
    for (std::size_t j = 0; j < n; ++j) {
        double k;
        if (j < n / 2) k = k0 * static_cast<double>(j);
        else if (j > n / 2) k = -k0 * static_cast<double>(n - j);
        else k = (m % 2 == 1) ? 0.0 : k0 * static_cast<double>(n / 2);
        cplx factor = 1.0;
        for (int q = 0; q < m; ++q) factor *= cplx(0.0, k);
        work[j] *= factor / static_cast<double>(n);
    }
    fftw_execute_dft(p.backward, w, w);
    return work;
}

CVector stencil_derivative(const Grid& g, const CVector& f, int m, int hw) {
    const int n = static_cast<int>(g.size());
    const int width = 2 * hw + 1;
    if (width > n) throw UsageError("derivative: stencil wider than grid");
    // Weight tables per shift, shift = start offset of the stencil.
    std::map<int, std::vector<double>> tables;
    auto weights = [&](int start) -> const std::vector<double>& {
        auto it = tables.find(start);
        if (it != tables.end()) return it->second;
        std::vector<double> offs(static_cast<std::size_t>(width));
        for (int k = 0; k < width; ++k) offs[static_cast<std::size_t>(k)] = start + k;
        return tables.emplace(start, fornberg_weights(m, offs)).first->second;
    };
    const double scale = std::pow(g.dx(), -m);
    CVector out(f.size());
    for (int i = 0; i < n; ++i) {
        const int start = std::clamp(i - hw, 0, n - width) - i;
        const std::vector<double>& w = weights(start);
        cplx s = 0.0;
        for (int k = 0; k < width; ++k) s += w[static_cast<std::size_t>(k)] * f[static_cast<std::size_t>(i + start + k)];
        out[static_cast<std::size_t>(i)] = s * scale;
    }
    return out;
}

void check_same_grid(const WaveFunction& a, const WaveFunction& b) {
    if (!(a.grid == b.grid)) throw UsageError("wavefunctions live on different grids");
}

void note_decay(const WaveFunction& in, WaveFunction& out) {
    out.warnings = in.warnings;
    if (!in.boundary_decays())
        out.warnings.emplace_back(
            "boundary decay violated: periodic differentiation may be inaccurate");
}

} // namespace

std::vector<double> fornberg_weights(int m, const std::vector<double>& x) {
    const int n = static_cast<int>(x.size()) - 1;
    if (m < 0 || n < m) throw UsageError("fornberg_weights: too few points");
    std::vector<std::vector<double>> c(x.size(), std::vector<double>(static_cast<std::size_t>(m) + 1, 0.0));
    double c1 = 1.0, c4 = x[0];
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[static_cast<std::size_t>(i)];
        for (int j = 0; j < i; ++j) {
            const double c3 = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k > 0; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k > 0; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) w[i] = c[i][static_cast<std::size_t>(m)];
    return w;
}

CVector derivative(const Grid& g, const CVector& f, int m, DerivativeScheme scheme, int hw) {
    if (f.size() != g.size()) throw UsageError("derivative: sample count mismatch");
    if (m < 1 || m > 2) throw UsageError("derivative: order must be 1 or 2");
    if (scheme == DerivativeScheme::spectral) return spectral_derivative(g, f, m);
    if (hw < 1) throw UsageError("derivative: stencil half width must be positive");
    return stencil_derivative(g, f, m, hw);
}

WaveFunction apply_x(const WaveFunction& wf) {
    WaveFunction out = wf;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] *= wf.grid.x(i);
    return out;
}

WaveFunction apply_p(const WaveFunction& wf, DerivativeScheme scheme) {
    WaveFunction out(wf.grid, derivative(wf.grid, wf.samples, 1, scheme));
    for (cplx& z : out.samples) z *= cplx(0.0, -1.0);
    if (scheme == DerivativeScheme::spectral) note_decay(wf, out);
    else out.warnings = wf.warnings;
    return out;
}

WaveFunction apply_linear_invariant(double A, double B, double C, const WaveFunction& wf,
                                    DerivativeScheme scheme) {
    WaveFunction out = apply_p(wf, scheme);
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = A * out.samples[i] + (B * wf.grid.x(i) + C) * wf.samples[i];
    return out;
}

WaveFunction apply_hamiltonian(const CoefficientSet& h, double t, const WaveFunction& wf,
                               DerivativeScheme scheme) {
    const Grid& g = wf.grid;
    const CVector d1 = derivative(g, wf.samples, 1, scheme);
    const CVector d2 = derivative(g, wf.samples, 2, scheme);
    const double a = h.a(t), b = h.b(t), c = h.c(t), d = h.d(t);
    const cplx I(0.0, 1.0);
    WaveFunction out(g, CVector(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.x(i);
        // p x f = -i (f + x f'), x p f = -i x f'
        out.samples[i] = -a * d2[i] + b * x * x * wf.samples[i] -
                         I * c * (wf.samples[i] + x * d1[i]) - I * d * x * d1[i];
    }
    if (scheme == DerivativeScheme::spectral) note_decay(wf, out);
    else out.warnings = wf.warnings;
    return out;
}

void LadderData::validate() const {
    if (!(kappa > 0.0)) throw ModeError("ladder form requires kappa > 0");
    if (!(omega0 > 0.0)) throw ModeError("ladder form requires C0 > 0 (omega0 > 0)");
    if (a_t == 0.0) throw DomainError("ladder form requires a(t) != 0");
}

double LadderData::epsilon() const { return std::sqrt(0.5 * omega0) / kappa; }

double LadderData::chirp() const { return (kappap - cpd * kappa) / (4.0 * a_t * kappa); }

WaveFunction apply_quadratic_invariant(const LadderData& ld, double lam, double c0,
                                       const WaveFunction& wf) {
    if (!(ld.kappa > 0.0)) throw DomainError("quadratic invariant requires kappa > 0");
    const double g = (ld.cpd * ld.kappa - ld.kappap) / (2.0 * ld.a_t);
    auto Q = [&](const WaveFunction& f) { return apply_linear_invariant(ld.kappa, g, 0.0, f); };
    WaveFunction out = Q(Q(wf));
    const double w = c0 / (ld.kappa * ld.kappa);
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const double x = wf.grid.x(i);
        out.samples[i] = lam * (out.samples[i] + w * x * x * wf.samples[i]);
    }
    return out;
}

WaveFunction ladder(const LadderData& ld, const WaveFunction& wf, LadderDirection dir) {
    ld.validate();
    const double sw = std::sqrt(ld.omega0);
    const double re = sw / (2.0 * ld.kappa);
    const double im = (ld.kappap - ld.cpd * ld.kappa) / (2.0 * ld.a_t * sw);
    const double dcoef = ld.kappa / sw;
    const double sign = dir == LadderDirection::lower ? 1.0 : -1.0;
    const cplx xcoef(re, -sign * im);
    WaveFunction out(wf.grid, derivative(wf.grid, wf.samples, 1));
    note_decay(wf, out);
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = xcoef * wf.grid.x(i) * wf.samples[i] + sign * dcoef * out.samples[i];
    return out;
}

WaveFunction hermite_mode(int n, const LadderData& ld, const Grid& g) {
    if (n < 0 || n > hermite_mode_max) throw UsageError("hermite_mode: index out of range");
    ld.validate();
    const double eps = ld.epsilon();
    const double chirp = ld.chirp();
    const double norm = std::sqrt(eps);
    WaveFunction out = WaveFunction::zero(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.x(i);
        const double h = hermite_functions(n, eps * x).back();
        out.samples[i] = norm * h * std::polar(1.0, chirp * x * x);
    }
    if (!out.boundary_decays())
        out.warnings.emplace_back("hermite_mode: grid too narrow for the mode's decay");
    return out;
}

std::vector<WaveFunction> hermite_modes(int count, const LadderData& ld, const Grid& g) {
    if (count < 1 || count - 1 > hermite_mode_max)
        throw UsageError("hermite_modes: count out of range");
    ld.validate();
    const double eps = ld.epsilon();
    const double chirp = ld.chirp();
    const double norm = std::sqrt(eps);
    std::vector<WaveFunction> out(static_cast<std::size_t>(count), WaveFunction::zero(g));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.x(i);
        const std::vector<double> h = hermite_functions(count - 1, eps * x);
        const cplx ph = norm * std::polar(1.0, chirp * x * x);
        for (int n = 0; n < count; ++n) out[static_cast<std::size_t>(n)].samples[i] = h[static_cast<std::size_t>(n)] * ph;
    }
    for (WaveFunction& w : out) {
        if (!w.boundary_decays())
            w.warnings.emplace_back("hermite_mode: grid too narrow for the mode's decay");
    }
    return out;
}

cplx inner_product(const WaveFunction& a, const WaveFunction& b) {
    check_same_grid(a, b);
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) s += std::conj(a.samples[i]) * b.samples[i];
    return s * a.grid.dx();
}

double l2_norm(const WaveFunction& wf) { return std::sqrt(std::real(inner_product(wf, wf))); }

double l2_distance(const WaveFunction& a, const WaveFunction& b) { return l2_norm(a - b); }

WaveFunction operator+(const WaveFunction& a, const WaveFunction& b) {
    check_same_grid(a, b);
    WaveFunction out = a;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += b.samples[i];
    return out;
}

WaveFunction operator-(const WaveFunction& a, const WaveFunction& b) {
    check_same_grid(a, b);
    WaveFunction out = a;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] -= b.samples[i];
    return out;
}

WaveFunction operator*(cplx s, const WaveFunction& a) {
    WaveFunction out = a;
    for (cplx& z : out.samples) z *= s;
    return out;
}

} // namespace quadinv
