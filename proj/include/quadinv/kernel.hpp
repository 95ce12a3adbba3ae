#pragma once

#include <functional>
#include <optional>

#include "quadinv/characteristic.hpp"
#include "quadinv/grid.hpp"

namespace quadinv {

// Below this time the Green function is treated as the identity.
inline constexpr double kernel_t_min = 1e-6;

enum class KernelKind { green, general };

struct KernelInitialData {
    double alpha;
    double beta;
    double gamma;
    double mu;
};

// K(x, y, t) = (2 pi mu)^{-1/2} exp(i (alpha x^2 + beta x y + gamma y^2)); for the Green
// function the prefactor is (2 pi i mu)^{-1/2}.
struct KernelParameters {
    double t = 0.0;
    double mu = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double lambda = 1.0;
    KernelKind kind = KernelKind::green;
    std::optional<KernelInitialData> init;
    // Green function below kernel_t_min: acts as the identity.
    bool identity = false;
};

using KernelFamily = std::function<KernelParameters(double)>;

// Green function parameters for 0 < t <= t_end, all from one characteristic solution.
class GreenKernel {
public:
    GreenKernel(const CoefficientSet& h, double t_end, const OdeOptions& ode = {});
    KernelParameters parameters(double t) const;
    KernelFamily family() const;
    const CharacteristicSolution& characteristic() const noexcept { return mu0_; }

private:
    CharacteristicSolution mu0_;
};

// Kernel with prescribed initial data, built from the Green characteristic solution,
// with mu also integrated directly as a cross-check.
class GeneralKernel {
public:
    GeneralKernel(const CoefficientSet& h, const KernelInitialData& init, double t_end,
                  const OdeOptions& ode = {});
    KernelParameters parameters(double t) const;
    KernelFamily family() const;
    double mu_direct(double t) const { return direct_.mu(t); }
    const CharacteristicSolution& direct() const noexcept { return direct_; }
    const CharacteristicSolution& green() const noexcept { return green_.characteristic(); }
    const KernelInitialData& init() const noexcept { return init_; }

private:
    GreenKernel green_;
    CharacteristicSolution direct_;
    KernelInitialData init_;
};

KernelParameters green_parameters(const CoefficientSet& h, double t);
KernelParameters general_kernel_parameters(const CoefficientSet& h, double alpha0, double beta0,
                                           double gamma0, double mu0, double t);

cplx eval_kernel(const KernelParameters& p, double x, double y);

// Kernel sampled in x on the grid at fixed y.
CVector sample_kernel(const KernelParameters& p, const Grid& g, double y);

// max over interior points of |i dK/dt - H K| / max|K| for K sampled in x at fixed y.
// The time derivative uses the five-point centred difference with step dt;
// spatial derivatives use the finite-difference stencil.
double schrodinger_residual(const CoefficientSet& h, const KernelFamily& family, const Grid& g,
                            double t, double dt, double y = 0.0);

// Same, for an arbitrary time-dependent field on the grid.
double schrodinger_residual(const CoefficientSet& h, const std::function<CVector(double)>& field,
                            const Grid& g, double t, double dt);

} // namespace quadinv
