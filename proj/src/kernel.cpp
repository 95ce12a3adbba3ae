#include "quadinv/kernel.hpp"

#include <cmath>
#include <numbers>

#include "quadinv/errors.hpp"

namespace quadinv {

GreenKernel::GreenKernel(const CoefficientSet& h, double t_end, const OdeOptions& ode)
    : mu0_(solve_green_characteristic(h, t_end, ode)) {}

KernelParameters GreenKernel::parameters(double t) const {
    const CoefficientSet& h = mu0_.coeffs();
    h.require_time(t);
    KernelParameters p;
    p.t = t;
    p.kind = KernelKind::green;
    if (t < kernel_t_min) {
        p.identity = true;
        return p;
    }
    const double m = mu0_.mu(t), mp = mu0_.mu_prime(t);
    if (m == 0.0 || std::signbit(m) != std::signbit(h.a(0.0)))
        throw SingularityError("Green function: caustic (mu0 vanishes)", t);
    if (std::abs(mp) < mu_prime_floor)
        throw SingularityError("Green function: mu0' vanishes", t);
    const double a = h.a(t), c = h.c(t);
    const double lam = mu0_.lambda(t);
    p.mu = m;
    p.lambda = lam;
    p.alpha = mp / (4.0 * a * m) - c / (2.0 * a);
    p.beta = -lam / m;
    p.gamma = a * lam * lam / (m * mp) + h.c(0.0) / (2.0 * h.a(0.0)) - 4.0 * mu0_.quad_gamma0(t);
    return p;
}

KernelFamily GreenKernel::family() const {
    return [self = *this](double t) { return self.parameters(t); };
}

GeneralKernel::GeneralKernel(const CoefficientSet& h, const KernelInitialData& init,
                             double t_end, const OdeOptions& ode)
    : green_(h, t_end, ode),
      direct_([&] {
          if (init.mu == 0.0) throw UsageError("general kernel: mu(0) must be nonzero");
          CharacteristicOptions opt;
          opt.ode = ode;
          const double mup0 = (4.0 * h.a(0.0) * init.alpha + 2.0 * h.c(0.0)) * init.mu;
          return solve_characteristic(h, init.mu, mup0, t_end, opt);
      }()),
      init_(init) {}

KernelParameters GeneralKernel::parameters(double t) const {
    const CoefficientSet& h = direct_.coeffs();
    h.require_time(t);
    KernelParameters p;
    p.t = t;
    p.kind = KernelKind::general;
    p.init = init_;
    if (t < kernel_t_min) {
        p.mu = init_.mu;
        p.alpha = init_.alpha;
        p.beta = init_.beta;
        p.gamma = init_.gamma;
        p.lambda = 1.0;
        return p;
    }
    const KernelParameters g = green_.parameters(t);
    const double s = init_.alpha + g.gamma;
    if (std::abs(s) <= 1e-14 * (std::abs(init_.alpha) + std::abs(g.gamma)))
        throw SingularityError("general kernel: alpha(0) + gamma0 vanishes", t);
    // Evaluation stops at the first zero of mu (caustic), located on the direct route.
    const double dm = direct_.mu(t);
    if (std::abs(dm) <= 1e-8 * std::abs(init_.mu) || std::signbit(dm) != std::signbit(init_.mu))
        throw SingularityError("general kernel: caustic (mu vanishes)", t);
    p.lambda = g.lambda;
    p.mu = 2.0 * init_.mu * g.mu * s;
    p.alpha = g.alpha - g.beta * g.beta / (4.0 * s);
    p.beta = -init_.beta * g.beta / (2.0 * s);
    p.gamma = init_.gamma - init_.beta * init_.beta / (4.0 * s);
    if (p.mu == 0.0) throw SingularityError("general kernel: mu vanishes", t);
    return p;
}

KernelFamily GeneralKernel::family() const {
    return [self = *this](double t) { return self.parameters(t); };
}

KernelParameters green_parameters(const CoefficientSet& h, double t) {
    h.require_time(t);
    if (t < kernel_t_min) {
        KernelParameters p;
        p.t = t;
        p.identity = true;
        return p;
    }
    return GreenKernel(h, t).parameters(t);
}

KernelParameters general_kernel_parameters(const CoefficientSet& h, double alpha0, double beta0,
                                           double gamma0, double mu0, double t) {
    h.require_time(t);
    const double t_end = std::max(t, kernel_t_min);
    return GeneralKernel(h, {alpha0, beta0, gamma0, mu0}, t_end).parameters(t);
}

namespace {
cplx prefactor(const KernelParameters& p) {
    if (p.identity) throw SingularityError("kernel evaluated at t = 0 (delta function)", p.t);
    if (p.mu == 0.0) throw SingularityError("kernel prefactor: mu = 0", p.t);
    const cplx arg = p.kind == KernelKind::green ? cplx(0.0, 2.0 * std::numbers::pi * p.mu)
                                                 : cplx(2.0 * std::numbers::pi * p.mu, 0.0);
    return 1.0 / std::sqrt(arg);
}
} // namespace

cplx eval_kernel(const KernelParameters& p, double x, double y) {
    return prefactor(p) * std::polar(1.0, p.alpha * x * x + p.beta * x * y + p.gamma * y * y);
}

CVector sample_kernel(const KernelParameters& p, const Grid& g, double y) {
    const cplx pre = prefactor(p);
    CVector out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.x(i);
        out[i] = pre * std::polar(1.0, p.alpha * x * x + p.beta * x * y + p.gamma * y * y);
    }
    return out;
}

double schrodinger_residual(const CoefficientSet& h, const std::function<CVector(double)>& field,
                            const Grid& g, double t, double dt) {
    if (!(dt > 0.0)) throw UsageError("schrodinger_residual: dt must be positive");
    const CVector f0 = field(t);
    const double scale = max_abs(f0);
    if (scale == 0.0) return 0.0;
    const CVector fm2 = field(t - 2.0 * dt), fm1 = field(t - dt);
    const CVector fp1 = field(t + dt), fp2 = field(t + 2.0 * dt);
    const WaveFunction hf =
        apply_hamiltonian(h, t, WaveFunction(g, f0), DerivativeScheme::stencil);
    const std::size_t hw = default_stencil_half_width;
    const cplx I(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t i = hw; i + hw < g.size(); ++i) {
        const cplx dfdt = (fm2[i] - 8.0 * fm1[i] + 8.0 * fp1[i] - fp2[i]) / (12.0 * dt);
        worst = std::max(worst, std::abs(I * dfdt - hf.samples[i]));
    }
    return worst / scale;
}

double schrodinger_residual(const CoefficientSet& h, const KernelFamily& family, const Grid& g,
                            double t, double dt, double y) {
    return schrodinger_residual(
        h, [&](double s) { return sample_kernel(family(s), g, y); }, g, t, dt);
}

} // namespace quadinv
