#include "quadinv/cauchy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "quadinv/errors.hpp"
#include "quadinv/invariants.hpp"
#include "quadinv/special.hpp"

namespace quadinv {

double kernel_phase_resolution(const KernelParameters& p, const Grid& y_grid) {
    const double m = std::max({std::abs(p.alpha), std::abs(p.beta), std::abs(p.gamma)});
    return m * y_grid.span() * y_grid.dx();
}

WaveFunction evolve_by_kernel(const KernelParameters& p, const WaveFunction& phi0,
                              const std::optional<Grid>& out_grid) {
    const Grid& yg = phi0.grid;
    const Grid xg = out_grid.value_or(yg);
    if (p.identity) {
        if (!(xg == yg)) throw UsageError("evolve_by_kernel: identity step needs the input grid");
        return phi0;
    }
    const double res = kernel_phase_resolution(p, yg);
    if (!(res < std::numbers::pi / 4.0)) {
        throw ResolutionError("evolve_by_kernel: kernel phase under-resolved (" +
                              std::to_string(res) +
                              " >= pi/4); use a finer or narrower y-grid");
    }
    const std::size_t ny = yg.size();
    // exp(i gamma y^2) phi(y) dy, shared by every output point.
    CVector w(ny);
    for (std::size_t j = 0; j < ny; ++j) {
        const double y = yg.x(j);
        w[j] = std::polar(yg.dx(), p.gamma * y * y) * phi0.samples[j];
    }
    const cplx pre = eval_kernel(p, 0.0, 0.0);
    WaveFunction out = WaveFunction::zero(xg);
    for (std::size_t i = 0; i < xg.size(); ++i) {
        const double x = xg.x(i);
        // exp(i beta x y_j) by rotation from y_0.
        const cplx step = std::polar(1.0, p.beta * x * yg.dx());
        cplx rot = std::polar(1.0, p.beta * x * yg.x(0));
        cplx s = 0.0;
        for (std::size_t j = 0; j < ny; ++j) {
            s += rot * w[j];
            rot *= step;
            if ((j & 63) == 63) rot = std::polar(1.0, p.beta * x * yg.x(j + 1));
        }
        out.samples[i] = pre * std::polar(1.0, p.alpha * x * x) * s;
    }
    out.warnings = phi0.warnings;
    if (!out.boundary_decays())
        out.warnings.emplace_back("evolve_by_kernel: result does not decay at the grid edges");
    return out;
}

ExpansionState::ExpansionState(const CoefficientSet& h, ErmakovSolution k1, ErmakovSolution k,
                               double gamma0, const OdeOptions& ode)
    : coeffs_(std::make_shared<const CoefficientSet>(h)), k1_(std::move(k1)), k_(std::move(k)) {
    if (!same_coefficients(h, k1_.coeffs()) || !same_coefficients(h, k_.coeffs()))
        throw UsageError("ExpansionState: solutions belong to other coefficients");
    if (k1_.c0() != 0.0) throw UsageError("ExpansionState: k1 must be homogeneous (C0 = 0)");
    if (!(k_.c0() > 0.0)) throw ModeError("ExpansionState: expansion needs C0 > 0");
    if (k1_.kappa(0.0) == 0.0) throw UsageError("ExpansionState: k1(0) must be nonzero");

    const double t_end = std::min(k1_.t_end(), k_.t_end());
    const double sc0 = std::sqrt(c0());
    const double inv0 = ermakov_invariant(0.0);
    delta_ = std::pow(c0(), 0.25) / std::sqrt(inv0);

    auto coeffs = coeffs_;
    ErmakovSolution a1 = k1_, a2 = k_;
    auto rhs = [coeffs, a1, a2, sc0](double t, const double*, double* dy) {
        const double u = a1.kappa(t), v = a2.kappa(t), a = coeffs->a(t);
        dy[0] = -a / (u * u);
        dy[1] = 2.0 * sc0 * a / (v * v);
        dy[2] = coeffs->c(t) - coeffs->d(t);
    };
    const double y0[3] = {gamma0, phi_from_tangent(0.0), 0.0};
    try {
        phases_ = std::make_shared<const DenseTrajectory>(integrate_dense(3, rhs, 0.0, y0, t_end, ode));
    } catch (const IntegrationError& e) {
        throw SingularityError("ExpansionState: k1 vanishes (kernel caustic)", e.where());
    }
    xi_ = xi_at(0.0);
}

double ExpansionState::phi(double t) const { return phases_->value(t, 1); }
double ExpansionState::gamma(double t) const { return phases_->value(t, 0); }
double ExpansionState::lambda(double t) const { return std::exp(phases_->value(t, 2)); }

double ExpansionState::ermakov_invariant(double t) const {
    return quadinv::ermakov_invariant(*coeffs_, k1_, k_, t);
}

double ExpansionState::delta_at(double t) const {
    return std::pow(c0(), 0.25) / std::sqrt(ermakov_invariant(t));
}

double ExpansionState::xi_at(double t) const {
    const double d = delta_at(t);
    const double u = k1_.kappa(t), v = k_.kappa(t);
    const double wa = wronskian(k1_, k_, t) / (2.0 * coeffs_->a(t));
    return gamma(t) + d * d / (2.0 * std::sqrt(c0())) * wa * v / u;
}

double ExpansionState::phi_from_tangent(double t) const {
    const double u = k1_.kappa(t), v = k_.kappa(t);
    const double wa = wronskian(k1_, k_, t) / (2.0 * coeffs_->a(t));
    // tan phi = (k / k1) (W / 2a) / sqrt(C0)
    return std::atan2(wa, std::sqrt(c0()) * u / v);
}

double ExpansionState::phi_rate(double t) const {
    const double v = k_.kappa(t);
    return 2.0 * std::sqrt(c0()) * coeffs_->a(t) / (v * v);
}

LadderData ExpansionState::ladder_data(double t) const {
    const KappaState s = k_.at(t);
    LadderData ld{s.kappa, s.kappa_prime, coeffs_->c(t) + coeffs_->d(t), coeffs_->a(t),
                  2.0 * std::sqrt(c0())};
    ld.validate();
    return ld;
}

KernelInitialData ExpansionState::kernel_initial_data() const {
    const KernelParameters p = kernel_parameters(0.0);
    return {p.alpha, p.beta, p.gamma, p.mu};
}

KernelParameters ExpansionState::kernel_parameters(double t) const {
    const CoefficientSet& h = *coeffs_;
    const KappaState s = k1_.at(t);
    if (s.kappa == 0.0) throw SingularityError("expansion kernel: k1 vanishes", t);
    KernelParameters p;
    p.t = t;
    p.kind = KernelKind::general;
    p.lambda = lambda(t);
    p.mu = s.kappa * p.lambda;
    p.alpha = (s.kappa_prime / s.kappa - h.c(t) - h.d(t)) / (4.0 * h.a(t));
    p.beta = 1.0 / s.kappa;
    p.gamma = gamma(t);
    const KappaState s0 = k1_.at(0.0);
    p.init = KernelInitialData{(s0.kappa_prime / s0.kappa - h.c(0.0) - h.d(0.0)) / (4.0 * h.a(0.0)),
                               1.0 / s0.kappa, gamma(0.0), s0.kappa};
    return p;
}

ExpansionCoefficients::ExpansionCoefficients(const ExpansionState& st, const WaveFunction& chi,
                                             int count)
    : st_(st) {
    if (count < 1 || count > expansion_n_max + 1)
        throw UsageError("expansion: order out of range (n_max = " +
                         std::to_string(expansion_n_max) + ")");
    const double d = st.delta(), xi = st.xi_const();
    const Grid& g = chi.grid;
    proj_.assign(static_cast<std::size_t>(count), 0.0);
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double y = g.x(j);
        const std::vector<double> hn = hermite_functions(count - 1, d * y);
        const cplx w = std::polar(std::sqrt(d) * g.dx(), xi * y * y) * chi.samples[j];
        for (int n = 0; n < count; ++n) proj_[static_cast<std::size_t>(n)] += hn[static_cast<std::size_t>(n)] * w;
    }
}

cplx ExpansionCoefficients::projection(int n) const {
    if (n < 0 || n >= count()) throw UsageError("expansion: index out of range");
    return proj_[static_cast<std::size_t>(n)];
}

namespace {
cplx mode_phase(int n, double phi, double lam) {
    static const cplx I(0.0, 1.0);
    cplx in = 1.0;
    for (int k = 0; k < n % 4; ++k) in *= I;
    return in * std::polar(1.0 / std::sqrt(lam), -(n + 0.5) * phi);
}
} // namespace

cplx ExpansionCoefficients::at(int n, double t) const {
    return mode_phase(n, st_.phi(t), st_.lambda(t)) * projection(n);
}

std::vector<cplx> ExpansionCoefficients::all(double t) const {
    std::vector<cplx> c(proj_.size());
    for (int n = 0; n < count(); ++n) c[static_cast<std::size_t>(n)] = at(n, t);
    return c;
}

cplx expansion_coefficient(const ExpansionState& st, const WaveFunction& chi, int n, double t) {
    if (n < 0 || n > expansion_n_max) throw UsageError("expansion: index exceeds n_max");
    return ExpansionCoefficients(st, chi, n + 1).at(n, t);
}

namespace {
bool flag_truncation(const std::vector<cplx>& c) {
    double m = 0.0;
    for (const cplx& z : c) m = std::max(m, std::abs(z));
    return m > 0.0 && std::abs(c.back()) / m > truncation_threshold;
}

ExpansionResult assemble(const std::vector<cplx>& c, const std::vector<WaveFunction>& modes,
                         const Grid& g) {
    ExpansionResult r{WaveFunction::zero(g), c, flag_truncation(c)};
    for (std::size_t n = 0; n < c.size(); ++n) {
        for (std::size_t i = 0; i < g.size(); ++i) r.psi.samples[i] += c[n] * modes[n].samples[i];
    }
    if (r.truncated) {
        r.psi.warnings.emplace_back("expansion truncated: |c_{N-1}| / max|c_n| exceeds " +
                                    std::to_string(truncation_threshold));
    }
    return r;
}
} // namespace

ExpansionResult eigenfunction_expansion(const ExpansionState& st, const WaveFunction& chi,
                                        double t, int N, const std::optional<Grid>& out_grid) {
    if (N < 1 || N > expansion_n_max) throw UsageError("expansion: N must lie in [1, n_max]");
    const Grid g = out_grid.value_or(chi.grid);
    const ExpansionCoefficients coef(st, chi, N);
    const std::vector<cplx> c = coef.all(t);
    return assemble(c, hermite_modes(N, st.ladder_data(t), g), g);
}

ErmakovSolution matching_kappa(const CoefficientSet& h, const ErmakovSolution& k1, double c0,
                               double gamma0, const OdeOptions& ode) {
    if (!(c0 > 0.0)) throw ModeError("matching_kappa: needs C0 > 0");
    const KappaState s = k1.at(0.0);
    if (s.kappa == 0.0) throw UsageError("matching_kappa: k1(0) must be nonzero");
    const double A = 2.0 * h.a(0.0), sum = h.c(0.0) + h.d(0.0);
    const double u = 0.5 * (sum - 2.0 * A * gamma0 + s.kappa_prime / s.kappa); // k'(0) / k(0)
    const double w = (s.kappa * u - s.kappa_prime) / A;
    if (!(std::abs(w) < 1.0))
        throw DomainError("matching_kappa: no positive solution (|w| >= 1 for this gamma(0))");
    const double k0 = std::pow(c0 * s.kappa * s.kappa / (1.0 - w * w), 0.25);
    return solve_ermakov(h, c0, k0, k0 * u, k1.t_end(), ode);
}

ExpansionResult expansion_in_wavefunctions(const CoefficientSet& h, const ErmakovSolution& k1,
                                           double c0, const WaveFunction& chi, double t, int N,
                                           double gamma0) {
    if (N < 1 || N > expansion_n_max) throw UsageError("expansion: N must lie in [1, n_max]");
    const ExpansionState st(h, k1, matching_kappa(h, k1, c0, gamma0), gamma0);
    const Grid& g = chi.grid;
    const std::vector<WaveFunction> at0 = hermite_modes(N, st.ladder_data(0.0), g);
    const std::vector<WaveFunction> att = hermite_modes(N, st.ladder_data(t), g);
    const double phi0 = st.phi(0.0), phit = st.phi(t), damp = 1.0 / std::sqrt(st.lambda(t));
    std::vector<cplx> c(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) {
        const double q = n + 0.5;
        // <psi_n(., 0), chi> with psi_n(., 0) = e^{-i q phi(0)} Psi_n(., 0)
        const cplx overlap = std::polar(1.0, q * phi0) * inner_product(at0[static_cast<std::size_t>(n)], chi);
        const cplx coef = mode_phase(n, phi0, 1.0) * overlap;
        // psi_n(x, t) = damp e^{-i q phi(t)} Psi_n(x, t)
        c[static_cast<std::size_t>(n)] = coef * damp * std::polar(1.0, -q * phit);
    }
    return assemble(c, att, g);
}

ExpansionResult cauchy_expansion(const CoefficientSet& h, const ErmakovSolution& k,
                                 const WaveFunction& phi0, double t, int N) {
    if (N < 1 || N > expansion_n_max) throw UsageError("expansion: N must lie in [1, n_max]");
    if (!same_coefficients(h, k.coeffs()))
        throw UsageError("cauchy_expansion: k belongs to other coefficients");
    if (!(k.c0() > 0.0)) throw ModeError("cauchy_expansion: needs C0 > 0");
    if (t < 0.0 || t > k.t_end()) throw DomainError("cauchy_expansion: time outside k's interval");
    const double sc0 = std::sqrt(k.c0());
    double theta = 0.0, qcd = 0.0;
    if (t > 0.0) {
        auto coeffs = k.coeffs_ptr();
        auto rhs = [coeffs, k, sc0](double s, const double*, double* dy) {
            const double v = k.kappa(s);
            dy[0] = 2.0 * sc0 * coeffs->a(s) / (v * v);
            dy[1] = coeffs->c(s) - coeffs->d(s);
        };
        const double y0[2] = {0.0, 0.0};
        const DenseTrajectory traj = integrate_dense(2, rhs, 0.0, y0, t);
        theta = traj.value(t, 0);
        qcd = traj.value(t, 1);
    }
    const LadderData ld0{k.kappa(0.0), k.kappa_prime(0.0), h.c(0.0) + h.d(0.0), h.a(0.0), 2.0 * sc0};
    const KappaState s = k.at(t);
    const LadderData ldt{s.kappa, s.kappa_prime, h.c(t) + h.d(t), h.a(t), 2.0 * sc0};
    const Grid& g = phi0.grid;
    const std::vector<WaveFunction> at0 = hermite_modes(N, ld0, g);
    const std::vector<WaveFunction> att = hermite_modes(N, ldt, g);
    std::vector<cplx> c(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) {
        const auto i = static_cast<std::size_t>(n);
        c[i] = std::polar(std::exp(-0.5 * qcd), -(n + 0.5) * theta) * inner_product(at0[i], phi0);
    }
    return assemble(c, att, g);
}

WaveFunction special_solution(const ExpansionState& st, int m, double t, const Grid& g) {
    WaveFunction psi = hermite_mode(m, st.ladder_data(t), g);
    const cplx f = std::polar(1.0 / std::sqrt(st.lambda(t)), -(m + 0.5) * st.phi(t));
    for (cplx& z : psi.samples) z *= f;
    return psi;
}

WaveFunction special_initial_data(const ExpansionState& st, int m, const Grid& g) {
    if (m < 0 || m > expansion_n_max) throw UsageError("special_initial_data: index out of range");
    const double d = st.delta(), xi = st.xi_const();
    return WaveFunction::sample(g, [&](double y) {
        return std::sqrt(d) * hermite_functions(m, d * y).back() * std::polar(1.0, -xi * y * y);
    });
}

cplx kpsi_overlap(const ExpansionState& st, int n, double y, double t) {
    if (n < 0 || n > expansion_n_max) throw UsageError("kpsi_overlap: index out of range");
    const CoefficientSet& h = st.coeffs();
    const double c0 = st.c0();
    const double inv = st.ermakov_invariant(t);
    const double u = st.k1().kappa(t), v = st.k().kappa(t);
    const double W = wronskian(st.k1(), st.k(), t);
    const double r = std::sqrt(std::sqrt(c0) / inv);
    double fact = 1.0;
    for (int k = 2; k <= n; ++k) fact *= k;
    const cplx pre = mode_phase(n, st.phi(t), st.lambda(t)) /
                     std::sqrt(std::sqrt(std::numbers::pi) * std::ldexp(fact, n));
    const double chirp = st.gamma(t) + v * W / (4.0 * h.a(t) * u * inv);
    return pre * std::sqrt(r) * std::polar(1.0, chirp * y * y) * std::exp(-0.5 * r * r * y * y) *
           hermite(n, std::pow(c0, 0.25) * y / std::sqrt(inv));
}

cplx kpsi_overlap_quadrature(const ExpansionState& st, int n, double y, double t, const Grid& g) {
    const WaveFunction mode = hermite_mode(n, st.ladder_data(t), g);
    const KernelParameters p = st.kernel_parameters(t);
    const CVector k = sample_kernel(p, g, y);
    cplx s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += std::conj(mode.samples[i]) * k[i];
    return s * g.dx();
}

} // namespace quadinv
