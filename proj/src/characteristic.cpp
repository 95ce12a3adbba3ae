#include "quadinv/characteristic.hpp"

#include <cmath>

#include "quadinv/errors.hpp"

namespace quadinv {

namespace {
enum Slot { MU = 0, MUP = 1, QCD = 2, QCPD = 3, QG = 4 };
}

CharacteristicSolution solve_characteristic(const CoefficientSet& h, double mu0, double mup0,
                                            double t_end, const CharacteristicOptions& opt) {
    h.require_time(t_end);
    if (t_end < 0.0) throw DomainError("solve_characteristic: negative end time");
    if (mu0 == 0.0 && mup0 == 0.0)
        throw UsageError("solve_characteristic: trivial initial data (0, 0)");

    auto coeffs = std::make_shared<const CoefficientSet>(h);
    const bool track = opt.track_gamma0;
    const std::size_t dim = track ? 5 : 4;

    auto rhs = [coeffs, track](double t, const double* y, double* dy) {
        const CoefficientSet& c = *coeffs;
        const auto [tau, sigma] = tau_sigma_unchecked(c, t);
        dy[MU] = y[MUP];
        dy[MUP] = tau * y[MUP] - 4.0 * sigma * y[MU];
        dy[QCD] = c.c(t) - c.d(t);
        dy[QCPD] = c.c(t) + c.d(t);
        if (track) {
            const double lam = std::exp(y[QCD]);
            dy[QG] = c.a(t) * sigma * lam * lam / (y[MUP] * y[MUP]);
        }
    };

    double last_t = 0.0, last_mup = mup0;
    auto guard = [&](double t, const double* y) {
        last_t = t;
        last_mup = y[MUP];
        if (track && std::abs(y[MUP]) < mu_prime_floor)
            throw SingularityError("characteristic solution: mu' vanishes", t);
    };

    const double y0[5] = {mu0, mup0, 0.0, 0.0, 0.0};
    if (track && std::abs(mup0) < mu_prime_floor)
        throw SingularityError("characteristic solution: mu' vanishes", 0.0);

    CharacteristicSolution out;
    out.coeffs_ = coeffs;
    out.track_gamma0_ = track;
    try {
        out.traj_ = std::make_shared<const DenseTrajectory>(
            integrate_dense(dim, rhs, 0.0, y0, std::min(t_end, h.t_max()), opt.ode, guard));
    } catch (const IntegrationError& e) {
        // A collapsing step near a zero of mu' is the phase-integral singularity.
        if (track && std::abs(last_mup) < 1e-3 * std::abs(mup0))
            throw SingularityError("characteristic solution: mu' vanishes", last_t);
        throw;
    }
    return out;
}

CharacteristicSolution solve_green_characteristic(const CoefficientSet& h, double t_end,
                                                  const OdeOptions& ode) {
    CharacteristicOptions opt;
    opt.track_gamma0 = true;
    opt.ode = ode;
    return solve_characteristic(h, 0.0, 2.0 * h.a(0.0), t_end, opt);
}

double CharacteristicSolution::mu(double t) const { return traj_->value(t, MU); }
double CharacteristicSolution::mu_prime(double t) const { return traj_->value(t, MUP); }
double CharacteristicSolution::quad_cd(double t) const { return traj_->value(t, QCD); }
double CharacteristicSolution::quad_cpd(double t) const { return traj_->value(t, QCPD); }
double CharacteristicSolution::lambda(double t) const { return std::exp(quad_cd(t)); }

double CharacteristicSolution::mu_second(double t) const {
    const auto [tau, sigma] = tau_sigma_unchecked(*coeffs_, t);
    return tau * mu_prime(t) - 4.0 * sigma * mu(t);
}

double CharacteristicSolution::mu_second_interpolated(double t) const {
    return traj_->derivative(t, MUP);
}

double CharacteristicSolution::quad_gamma0(double t) const {
    if (!track_gamma0_)
        throw UsageError("CharacteristicSolution: phase integral was not tracked");
    return traj_->value(t, QG);
}

ErmakovSolution::ErmakovSolution(std::shared_ptr<const CoefficientSet> h, double c0,
                                 double t_end, Evaluator eval, std::vector<double> nodes)
    : coeffs_(std::move(h)), c0_(c0), t_end_(t_end), eval_(std::move(eval)),
      nodes_(std::move(nodes)) {}

KappaState ErmakovSolution::at(double t) const {
    const double tol = 1e-12 * std::max(1.0, t_end_);
    if (t < -tol || t > t_end_ + tol)
        throw DomainError("ErmakovSolution: time outside solution interval");
    return eval_(t);
}

double aux_omega(const CoefficientSet& h, double t) {
    const double a = h.a(t), s = h.c(t) + h.d(t);
    return 4.0 * a * h.b(t) + (h.da(t) / a - s) * s - h.dc(t) - h.dd(t);
}

double aux_second_derivative(const CoefficientSet& h, double c0, double t, double k, double kp) {
    const double a = h.a(t);
    const double source = c0 == 0.0 ? 0.0 : c0 * 4.0 * a * a / (k * k * k);
    return (h.da(t) / a) * kp - aux_omega(h, t) * k + source;
}

double aux_residual(const CoefficientSet& h, double c0, double t, const KappaState& s) {
    return s.kappa_second - aux_second_derivative(h, c0, t, s.kappa, s.kappa_prime);
}

ErmakovSolution solve_ermakov(const CoefficientSet& h, double c0, double k0, double kp0,
                              double t_end, const OdeOptions& ode) {
    h.require_time(t_end);
    if (t_end < 0.0) throw DomainError("solve_ermakov: negative end time");
    if (!std::isfinite(c0) || !std::isfinite(k0) || !std::isfinite(kp0))
        throw UsageError("solve_ermakov: non-finite input");
    const bool homogeneous = c0 == 0.0;
    if (homogeneous) {
        if (k0 == 0.0 && kp0 == 0.0) throw UsageError("solve_ermakov: trivial initial data");
    } else if (!(k0 > kappa_floor)) {
        throw DomainError("solve_ermakov: kappa(0) must be positive");
    }

    auto coeffs = std::make_shared<const CoefficientSet>(h);
    auto rhs = [coeffs, c0](double t, const double* y, double* dy) {
        dy[0] = y[1];
        dy[1] = aux_second_derivative(*coeffs, c0, t, y[0], y[1]);
    };
    double last_k = k0;
    auto guard = [homogeneous, &last_k](double t, const double* y) {
        last_k = y[0];
        if (!homogeneous && y[0] <= kappa_floor)
            throw SingularityError("auxiliary solution: kappa reached the positivity floor", t);
    };
    const double y0[2] = {k0, kp0};
    std::shared_ptr<const DenseTrajectory> traj;
    try {
        traj = std::make_shared<const DenseTrajectory>(
            integrate_dense(2, rhs, 0.0, y0, std::min(t_end, h.t_max()), ode, guard));
    } catch (const IntegrationError& e) {
        // Collapse towards kappa = 0 (C0 < 0) stalls the step size before the floor is met.
        if (!homogeneous && last_k < 1e-2 * k0)
            throw SingularityError("auxiliary solution: kappa collapses towards zero", e.where());
        throw;
    }

    auto eval = [coeffs, traj, c0](double t) {
        const double k = traj->value(t, 0), kp = traj->value(t, 1);
        return KappaState{k, kp, aux_second_derivative(*coeffs, c0, t, k, kp)};
    };
    return ErmakovSolution(coeffs, c0, traj->t_end(), eval, traj->nodes());
}

ErmakovSolution kappa_from_mu(const CharacteristicSolution& mu) {
    auto coeffs = std::make_shared<const CoefficientSet>(mu.coeffs());
    auto eval = [mu, coeffs](double t) {
        const CoefficientSet& h = *coeffs;
        const double e = std::exp(-mu.quad_cd(t));
        const double r = h.c(t) - h.d(t), dr = h.dc(t) - h.dd(t);
        const double m = mu.mu(t), mp = mu.mu_prime(t), mpp = mu.mu_second(t);
        return KappaState{m * e, (mp - r * m) * e, (mpp - dr * m - 2.0 * r * mp + r * r * m) * e};
    };
    return ErmakovSolution(coeffs, 0.0, mu.t_end(), eval, mu.nodes());
}

DenseTrajectory solve_path_integrals(const CoefficientSet& h, double t_end,
                                     const OdeOptions& ode) {
    h.require_time(t_end);
    auto coeffs = std::make_shared<const CoefficientSet>(h);
    const double y0[2] = {0.0, 0.0};
    return integrate_dense(
        2,
        [coeffs](double t, const double*, double* dy) {
            dy[0] = coeffs->c(t) - coeffs->d(t);
            dy[1] = coeffs->c(t) + coeffs->d(t);
        },
        0.0, y0, std::max(0.0, std::min(t_end, h.t_max())), ode);
}

double wronskian(double f, double fp, double g, double gp) { return f * gp - fp * g; }

bool same_coefficients(const CoefficientSet& a, const CoefficientSet& b) {
    if (&a == &b) return true;
    if (a.name() != b.name() || a.t_max() != b.t_max()) return false;
    for (int k = 0; k <= 4; ++k) {
        const double t = a.t_max() * k / 4.0;
        if (a.a(t) != b.a(t) || a.b(t) != b.b(t) || a.c(t) != b.c(t) || a.d(t) != b.d(t))
            return false;
    }
    return true;
}

namespace {
void require_common(const CoefficientSet& a, double ta, const CoefficientSet& b, double tb,
                    double t) {
    if (!same_coefficients(a, b))
        throw UsageError("wronskian: solutions belong to different coefficient sets");
    const double tol = 1e-12 * std::max(1.0, std::max(ta, tb));
    if (t < -tol || t > std::min(ta, tb) + tol)
        throw UsageError("wronskian: time outside the common solution interval");
}
} // namespace

double wronskian(const CharacteristicSolution& s1, const CharacteristicSolution& s2, double t) {
    require_common(s1.coeffs(), s1.t_end(), s2.coeffs(), s2.t_end(), t);
    return wronskian(s1.mu(t), s1.mu_prime(t), s2.mu(t), s2.mu_prime(t));
}

double wronskian(const ErmakovSolution& s1, const ErmakovSolution& s2, double t) {
    require_common(s1.coeffs(), s1.t_end(), s2.coeffs(), s2.t_end(), t);
    const KappaState a = s1.at(t), b = s2.at(t);
    return wronskian(a.kappa, a.kappa_prime, b.kappa, b.kappa_prime);
}

} // namespace quadinv
