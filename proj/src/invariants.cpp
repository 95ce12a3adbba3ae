#include "quadinv/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "quadinv/errors.hpp"

namespace quadinv {

namespace {

double scaled(double residual, std::initializer_list<double> terms) {
    double m = 0.0;
    for (double v : terms) m = std::max(m, std::abs(v));
    return m == 0.0 ? std::abs(residual) : std::abs(residual) / m;
}

std::vector<double> merged_nodes(const std::vector<double>& a, const std::vector<double>& b,
                                 double t_end) {
    std::set<double> s;
    for (double t : a) if (t <= t_end) s.insert(t);
    for (double t : b) if (t <= t_end) s.insert(t);
    return {s.begin(), s.end()};
}

// kappa = sqrt(S) from S, S', S''.
KappaState sqrt_state(double S, double Sp, double Spp) {
    const double k = std::sqrt(S);
    const double kp = Sp / (2.0 * k);
    return {k, kp, (Spp - 2.0 * kp * kp) / (2.0 * k)};
}

void require_independent(double w, double k1, double k1p, double k2, double k2p) {
    if (!(std::abs(w) > 1e-10 * (std::abs(k1) * std::abs(k2p) + std::abs(k1p) * std::abs(k2))))
        throw UsageError("solutions are not linearly independent (Wronskian too small)");
}

// Rejects a nonpositive radicand anywhere on a sweep of the domain.
void scan_radicand(const std::function<double(double)>& S, const std::vector<double>& nodes,
                   double t_end) {
    std::vector<double> ts = nodes;
    constexpr int sweep = 1000;
    for (int k = 0; k <= sweep; ++k) ts.push_back(t_end * k / sweep);
    for (double t : ts) {
        const double v = S(t);
        if (!(v > 0.0))
            throw DomainError("nonpositive radicand in auxiliary superposition at t = " +
                              std::to_string(t));
    }
}

} // namespace

LinearInvariant::LinearInvariant(CharacteristicSolution mu, double c0_const)
    : mu_(std::move(mu)), c0_(c0_const) {}

LinearInvariant linear_from_mu(const CoefficientSet& h, const CharacteristicSolution& mu,
                               double c0_const) {
    if (!same_coefficients(h, mu.coeffs()))
        throw UsageError("linear_from_mu: solution belongs to other coefficients");
    return LinearInvariant(mu, c0_const);
}

double LinearInvariant::A(double t) const { return mu_.mu(t); }

double LinearInvariant::B(double t) const {
    const CoefficientSet& h = mu_.coeffs();
    return (2.0 * h.c(t) * mu_.mu(t) - mu_.mu_prime(t)) / (2.0 * h.a(t));
}

double LinearInvariant::C(double t) const { return c0_ * mu_.lambda(t); }

double LinearInvariant::dA(double t) const { return mu_.mu_prime(t); }

double LinearInvariant::dB(double t) const {
    const CoefficientSet& h = mu_.coeffs();
    const double a = h.a(t), c = h.c(t);
    const double m = mu_.mu(t), mp = mu_.mu_prime(t), mpp = mu_.mu_second(t);
    const double num = 2.0 * c * m - mp;
    const double dnum = 2.0 * h.dc(t) * m + 2.0 * c * mp - mpp;
    return dnum / (2.0 * a) - num * h.da(t) / (2.0 * a * a);
}

double LinearInvariant::dC(double t) const {
    const CoefficientSet& h = mu_.coeffs();
    return (h.c(t) - h.d(t)) * C(t);
}

std::array<double, 3> LinearInvariant::residuals(double t) const {
    const CoefficientSet& h = mu_.coeffs();
    const double a = h.a(t), b = h.b(t), c = h.c(t), d = h.d(t);
    const double A_ = A(t), B_ = B(t), C_ = C(t);
    const double dA_ = dA(t), dB_ = dB(t), dC_ = dC(t);
    return {scaled(dA_ - 2.0 * c * A_ + 2.0 * a * B_, {dA_, 2.0 * c * A_, 2.0 * a * B_}),
            scaled(dB_ - 2.0 * b * A_ + 2.0 * d * B_, {dB_, 2.0 * b * A_, 2.0 * d * B_}),
            scaled(dC_ - (c - d) * C_, {dC_, (c - d) * C_})};
}

double LinearInvariant::second_order_residual_A(double t) const {
    const auto [tau, sigma] = tau_sigma(mu_.coeffs(), t);
    const double a2 = mu_.mu_second_interpolated(t), a1 = dA(t), a0 = A(t);
    return scaled(a2 - tau * a1 + 4.0 * sigma * a0, {a2, tau * a1, 4.0 * sigma * a0});
}

double LinearInvariant::second_order_residual_B(double t) const {
    const CoefficientSet& h = mu_.coeffs();
    const double b = h.b(t), d = h.d(t);
    if (b == 0.0 || d == 0.0) throw DomainError("second-order B form needs b != 0 and d != 0");
    const double step = 5e-3 * std::max(1.0, mu_.t_end());
    if (t < 2.0 * step || t > mu_.t_end() - 2.0 * step)
        throw DomainError("second-order B form: t too close to the ends of the solution");
    const double b2 =
        (-dB(t + 2 * step) + 8 * dB(t + step) - 8 * dB(t - step) + dB(t - 2 * step)) / (12.0 * step);
    const double tau_b = h.db(t) / b + 2.0 * h.c(t) - 2.0 * d;
    const double sigma_b = h.a(t) * b - h.c(t) * d - 0.5 * (d * h.db(t) / b - h.dd(t));
    const double b1 = dB(t), b0 = B(t);
    return scaled(b2 - tau_b * b1 + 4.0 * sigma_b * b0, {b2, tau_b * b1, 4.0 * sigma_b * b0});
}

WaveFunction LinearInvariant::apply(double t, const WaveFunction& wf,
                                    DerivativeScheme scheme) const {
    return apply_linear_invariant(A(t), B(t), C(t), wf, scheme);
}

double eigenrelation_residual(const GeneralKernel& k, double t, double y, const Grid& g) {
    const KernelParameters p = k.parameters(t);
    const LinearInvariant P(k.direct(), 0.0);
    const WaveFunction K(g, sample_kernel(p, g, y));
    const WaveFunction PK = P.apply(t, K, DerivativeScheme::stencil);
    const double ev = p.init->beta * p.init->mu * p.lambda * y;
    const std::size_t edge = default_stencil_half_width;
    double r = 0.0;
    for (std::size_t i = edge; i + edge < g.size(); ++i)
        r = std::max(r, std::abs(PK.samples[i] - ev * K.samples[i]));
    return r / (max_abs(K.samples) * std::max(1.0, std::abs(ev)));
}

QuadraticInvariant::QuadraticInvariant(ErmakovSolution kappa)
    : kappa_(std::move(kappa)),
      paths_(std::make_shared<const DenseTrajectory>(
          solve_path_integrals(kappa_.coeffs(), kappa_.t_end()))) {}

QuadraticInvariant quadratic_from_kappa(const CoefficientSet& h, const ErmakovSolution& k) {
    if (!same_coefficients(h, k.coeffs()))
        throw UsageError("quadratic_from_kappa: solution belongs to other coefficients");
    for (double t : k.nodes()) {
        if (!(k.kappa(t) > 0.0))
            throw DomainError("quadratic_from_kappa: kappa must stay positive (t = " +
                              std::to_string(t) + ")");
    }
    return QuadraticInvariant(k);
}

double QuadraticInvariant::lambda(double t) const { return std::exp(paths_->value(t, 0)); }

namespace {
struct QuadParts {
    double k, kp, kpp, g, dg;
};
// g = (k' - (c + d) k) / (2a) and its derivative.
QuadParts quad_parts(const CoefficientSet& h, const KappaState& s, double t) {
    const double a = h.a(t), cpd = h.c(t) + h.d(t), dcpd = h.dc(t) + h.dd(t);
    const double g = (s.kappa_prime - cpd * s.kappa) / (2.0 * a);
    const double dg = (s.kappa_second - dcpd * s.kappa - cpd * s.kappa_prime) / (2.0 * a) -
                      g * h.da(t) / a;
    return {s.kappa, s.kappa_prime, s.kappa_second, g, dg};
}
} // namespace

double QuadraticInvariant::Aq(double t) const {
    const double k = kappa_.kappa(t);
    return k * k * lambda(t);
}

double QuadraticInvariant::Bq(double t) const {
    const QuadParts q = quad_parts(kappa_.coeffs(), kappa_.at(t), t);
    return (q.g * q.g + c0() / (q.k * q.k)) * lambda(t);
}

double QuadraticInvariant::Cq(double t) const {
    const QuadParts q = quad_parts(kappa_.coeffs(), kappa_.at(t), t);
    return -q.k * q.g * lambda(t);
}

std::array<double, 3> QuadraticInvariant::residuals(double t) const {
    const CoefficientSet& h = kappa_.coeffs();
    const QuadParts q = quad_parts(h, kappa_.at(t), t);
    const double lam = lambda(t);
    const double a = h.a(t), b = h.b(t), c = h.c(t), d = h.d(t), r = c - d;
    const double C0 = c0();
    const double A_ = q.k * q.k * lam;
    const double B_ = (q.g * q.g + C0 / (q.k * q.k)) * lam;
    const double C_ = -q.k * q.g * lam;
    const double dA_ = (2.0 * q.k * q.kp + r * q.k * q.k) * lam;
    const double dB_ = (2.0 * q.g * q.dg - 2.0 * C0 * q.kp / (q.k * q.k * q.k)) * lam + r * B_;
    const double dC_ = -(q.kp * q.g + q.k * q.dg) * lam + r * C_;
    // Scales include the pieces of each derivative, which matter when a coefficient vanishes.
    const double dB1 = 2.0 * q.g * q.dg * lam, dB2 = 2.0 * C0 * q.kp / (q.k * q.k * q.k) * lam;
    return {scaled(dA_ + 4.0 * a * C_ - (3.0 * c + d) * A_,
                   {dA_, 2.0 * q.k * q.kp * lam, 4.0 * a * C_, (3.0 * c + d) * A_}),
            scaled(dB_ - 4.0 * b * C_ + (c + 3.0 * d) * B_,
                   {dB_, dB1, dB2, 4.0 * b * C_, (c + 3.0 * d) * B_}),
            scaled(dC_ + 2.0 * (a * B_ - b * A_) - r * C_,
                   {dC_, q.kp * q.g * lam, q.k * q.dg * lam, 2.0 * a * B_, 2.0 * b * A_, r * C_})};
}

LadderData QuadraticInvariant::ladder_data(double t) const {
    if (!(c0() > 0.0))
        throw ModeError("ladder form needs C0 > 0; C0 <= 0 is the repulsive case");
    const CoefficientSet& h = kappa_.coeffs();
    const KappaState s = kappa_.at(t);
    LadderData ld{s.kappa, s.kappa_prime, h.c(t) + h.d(t), h.a(t), 2.0 * std::sqrt(c0())};
    ld.validate();
    return ld;
}

WaveFunction QuadraticInvariant::apply(double t, const WaveFunction& wf) const {
    const CoefficientSet& h = kappa_.coeffs();
    const KappaState s = kappa_.at(t);
    const LadderData ld{s.kappa, s.kappa_prime, h.c(t) + h.d(t), h.a(t),
                        c0() > 0.0 ? 2.0 * std::sqrt(c0()) : 0.0};
    return apply_quadratic_invariant(ld, lambda(t), c0(), wf);
}

ErmakovSolution pinney(const CoefficientSet& h, const ErmakovSolution& k1,
                       const ErmakovSolution& k2, double C1, double C2, double C3) {
    if (!same_coefficients(h, k1.coeffs()) || !same_coefficients(h, k2.coeffs()))
        throw UsageError("pinney: solutions belong to other coefficients");
    if (k1.c0() != 0.0 || k2.c0() != 0.0)
        throw UsageError("pinney: both solutions must be homogeneous (C0 = 0)");
    const KappaState a0 = k1.at(0.0), b0 = k2.at(0.0);
    const double w0 = wronskian(a0.kappa, a0.kappa_prime, b0.kappa, b0.kappa_prime);
    require_independent(w0, a0.kappa, a0.kappa_prime, b0.kappa, b0.kappa_prime);
    const double wa = w0 / (2.0 * h.a(0.0));
    const double c0 = (C1 * C2 - C3 * C3) * wa * wa;
    const double t_end = std::min(k1.t_end(), k2.t_end());

    auto eval = [k1, k2, C1, C2, C3](double t) {
        const KappaState u = k1.at(t), v = k2.at(t);
        const double S = C1 * u.kappa * u.kappa + C2 * v.kappa * v.kappa +
                         2.0 * C3 * u.kappa * v.kappa;
        if (!(S > 0.0))
            throw DomainError("pinney: nonpositive radicand at t = " + std::to_string(t));
        const double Sp = 2.0 * (C1 * u.kappa * u.kappa_prime + C2 * v.kappa * v.kappa_prime +
                                 C3 * (u.kappa_prime * v.kappa + u.kappa * v.kappa_prime));
        const double Spp =
            2.0 * (C1 * (u.kappa_prime * u.kappa_prime + u.kappa * u.kappa_second) +
                   C2 * (v.kappa_prime * v.kappa_prime + v.kappa * v.kappa_second) +
                   C3 * (u.kappa_second * v.kappa + 2.0 * u.kappa_prime * v.kappa_prime +
                         u.kappa * v.kappa_second));
        return sqrt_state(S, Sp, Spp);
    };
    auto nodes = merged_nodes(k1.nodes(), k2.nodes(), t_end);
    scan_radicand(
        [&](double t) {
            const double u = k1.kappa(t), v = k2.kappa(t);
            return C1 * u * u + C2 * v * v + 2.0 * C3 * u * v;
        },
        nodes, t_end);
    return ErmakovSolution(k1.coeffs_ptr(), c0, t_end, eval, std::move(nodes));
}

ErmakovSolution decompose_quadratic(const CoefficientSet& h, const CharacteristicSolution& mu1,
                                    const CharacteristicSolution& mu2, double C1, double C2,
                                    double C3) {
    if (!same_coefficients(h, mu1.coeffs()) || !same_coefficients(h, mu2.coeffs()))
        throw UsageError("decompose_quadratic: solutions belong to other coefficients");
    const double m1 = mu1.mu(0.0), m1p = mu1.mu_prime(0.0);
    const double m2 = mu2.mu(0.0), m2p = mu2.mu_prime(0.0);
    const double w0 = wronskian(m1, m1p, m2, m2p);
    require_independent(w0, m1, m1p, m2, m2p);
    const double wa = w0 / (2.0 * h.a(0.0));
    const double c0 = (C1 * C2 - C3 * C3) * wa * wa;
    const double t_end = std::min(mu1.t_end(), mu2.t_end());
    auto coeffs = std::make_shared<const CoefficientSet>(h);

    auto eval = [coeffs, mu1, mu2, C1, C2, C3](double t) {
        const double u = mu1.mu(t), up = mu1.mu_prime(t), upp = mu1.mu_second(t);
        const double v = mu2.mu(t), vp = mu2.mu_prime(t), vpp = mu2.mu_second(t);
        const double S = C1 * u * u + C2 * v * v + 2.0 * C3 * u * v;
        if (!(S > 0.0))
            throw DomainError("decompose_quadratic: nonpositive radicand at t = " +
                              std::to_string(t));
        const double Sp = 2.0 * (C1 * u * up + C2 * v * vp + C3 * (up * v + u * vp));
        const double Spp = 2.0 * (C1 * (up * up + u * upp) + C2 * (vp * vp + v * vpp) +
                                  C3 * (upp * v + 2.0 * up * vp + u * vpp));
        const KappaState m = sqrt_state(S, Sp, Spp);
        // kappa = m exp(-int (c - d))
        const CoefficientSet& hh = *coeffs;
        const double e = std::exp(-mu1.quad_cd(t));
        const double r = hh.c(t) - hh.d(t), dr = hh.dc(t) - hh.dd(t);
        return KappaState{m.kappa * e, (m.kappa_prime - r * m.kappa) * e,
                          (m.kappa_second - dr * m.kappa - 2.0 * r * m.kappa_prime +
                           r * r * m.kappa) * e};
    };
    auto nodes = merged_nodes(mu1.nodes(), mu2.nodes(), t_end);
    scan_radicand(
        [&](double t) {
            const double u = mu1.mu(t), v = mu2.mu(t);
            return C1 * u * u + C2 * v * v + 2.0 * C3 * u * v;
        },
        nodes, t_end);
    return ErmakovSolution(coeffs, c0, t_end, eval, std::move(nodes));
}

ErmakovSolution general_superposition(const CoefficientSet& h, const ErmakovSolution& e1,
                                      const ErmakovSolution& e2, double D1, double D2) {
    if (!same_coefficients(h, e1.coeffs()) || !same_coefficients(h, e2.coeffs()))
        throw UsageError("general_superposition: solutions belong to other coefficients");
    const KappaState u = e1.at(0.0), v = e2.at(0.0);
    const double w = wronskian(u.kappa, u.kappa_prime, v.kappa, v.kappa_prime) / (2.0 * h.a(0.0));
    const double a1 = e1.c0(), a2 = e2.c0();
    double bracket = w * w;
    if (a1 != 0.0) bracket += a1 * v.kappa * v.kappa / (u.kappa * u.kappa);
    if (a2 != 0.0) bracket += a2 * u.kappa * u.kappa / (v.kappa * v.kappa);
    const double c0 = a1 * D1 * D1 + a2 * D2 * D2 + D1 * D2 * bracket;
    const double t_end = std::min(e1.t_end(), e2.t_end());

    auto eval = [e1, e2, D1, D2](double t) {
        const KappaState p = e1.at(t), q = e2.at(t);
        const double S = D1 * p.kappa * p.kappa + D2 * q.kappa * q.kappa;
        if (!(S > 0.0))
            throw DomainError("general_superposition: nonpositive radicand at t = " +
                              std::to_string(t));
        const double Sp = 2.0 * (D1 * p.kappa * p.kappa_prime + D2 * q.kappa * q.kappa_prime);
        const double Spp = 2.0 * (D1 * (p.kappa_prime * p.kappa_prime + p.kappa * p.kappa_second) +
                                  D2 * (q.kappa_prime * q.kappa_prime + q.kappa * q.kappa_second));
        return sqrt_state(S, Sp, Spp);
    };
    auto nodes = merged_nodes(e1.nodes(), e2.nodes(), t_end);
    scan_radicand(
        [&](double t) {
            const double p = e1.kappa(t), q = e2.kappa(t);
            return D1 * p * p + D2 * q * q;
        },
        nodes, t_end);
    return ErmakovSolution(e1.coeffs_ptr(), c0, t_end, eval, std::move(nodes));
}

double ermakov_invariant(const CoefficientSet& h, const ErmakovSolution& k_homog,
                         const ErmakovSolution& k, double t) {
    const KappaState u = k_homog.at(t), v = k.at(t);
    if (!(v.kappa > 0.0)) throw DomainError("ermakov_invariant: kappa must be positive");
    const double w = wronskian(u.kappa, u.kappa_prime, v.kappa, v.kappa_prime) / (2.0 * h.a(t));
    const double r = u.kappa / v.kappa;
    return k.c0() * r * r + w * w;
}

namespace {
// Five-point derivative of f at t, with the stencil shifted to stay in [0, t_end].
double fd_derivative(const std::function<double(double)>& f, double t, double t_end) {
    const double step = 1e-3 * std::max(1.0, t_end);
    std::vector<double> offs{-2, -1, 0, 1, 2};
    double shift = 0.0;
    if (t - 2.0 * step < 0.0) shift = std::ceil((2.0 * step - t) / step);
    if (t + 2.0 * step > t_end) shift = -std::ceil((t + 2.0 * step - t_end) / step);
    for (double& o : offs) o += shift;
    const std::vector<double> w = fornberg_weights(1, offs);
    double s = 0.0;
    for (std::size_t i = 0; i < offs.size(); ++i) s += w[i] * f(t + offs[i] * step);
    return s / step;
}
} // namespace

WronskianResiduals wronskian_identities(const CoefficientSet& h, const ErmakovSolution& k1,
                                      const ErmakovSolution& k2, double t) {
    const double t_end = std::min(k1.t_end(), k2.t_end());
    const double c1 = k1.c0(), c2 = k2.c0();
    auto wa = [&](double s) { return wronskian(k1, k2, s) / (2.0 * h.a(s)); };
    auto ratio_w = [&](double s) { return k2.kappa(s) / k1.kappa(s) * wa(s); };
    const double u = k1.kappa(t), v = k2.kappa(t), a = h.a(t), W = wa(t);
    const double r = v / u;
    WronskianResiduals out{};
    out.abel = fd_derivative(wa, t, t_end) / (2.0 * a) + c1 * v / (u * u * u) - c2 * u / (v * v * v);
    out.another = fd_derivative(ratio_w, t, t_end) -
                  (2.0 * a / (u * u)) * (W * W - c1 * r * r + c2 / (r * r));
    out.constant = W * W + c1 * r * r + c2 / (r * r);
    return out;
}

} // namespace quadinv
