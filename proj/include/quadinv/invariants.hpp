#pragma once

#include <array>

#include "quadinv/characteristic.hpp"
#include "quadinv/grid.hpp"
#include "quadinv/kernel.hpp"

namespace quadinv {

// P = A p + B x + C with A = mu, B = (2 c mu - mu') / (2a), C = C0 lambda.
class LinearInvariant {
public:
    LinearInvariant(CharacteristicSolution mu, double c0_const);

    double A(double t) const;
    double B(double t) const;
    double C(double t) const;
    double dA(double t) const;
    // Uses the derivative of the dense interpolant of mu', not the ODE itself.
    double dB(double t) const;
    double dC(double t) const;

    // Residuals of A' = 2cA - 2aB, B' = 2bA - 2dB, C' = (c - d) C, each divided by
    // the largest term in its equation.
    std::array<double, 3> residuals(double t) const;

    // A'' - tau A' + 4 sigma A, scaled by its largest term.
    double second_order_residual_A(double t) const;
    // B'' - (b'/b + 2c - 2d) B' + 4(ab - cd - (d b'/b - d')/2) B, scaled; B'' by a
    // five-point difference of dB. DomainError unless b(t) != 0, d(t) != 0
    // and t lies a few difference steps inside the interval.
    double second_order_residual_B(double t) const;

    WaveFunction apply(double t, const WaveFunction& wf,
                       DerivativeScheme scheme = DerivativeScheme::spectral) const;

    const CharacteristicSolution& source() const noexcept { return mu_; }
    double c0_const() const noexcept { return c0_; }

private:
    CharacteristicSolution mu_;
    double c0_;
};

LinearInvariant linear_from_mu(const CoefficientSet& h, const CharacteristicSolution& mu,
                               double c0_const);

// P(t) K = beta(0) mu(0) lambda(t) y K for the general kernel, with P built from the
// kernel's own mu and C = 0. Returns the largest deviation over interior grid points,
// relative to max|K| max(1, |beta(0) mu(0) lambda y|). Stencil derivatives.
double eigenrelation_residual(const GeneralKernel& k, double t, double y, const Grid& g);

// E = A p^2 + B x^2 + C (p x + x p) built from an auxiliary solution kappa.
class QuadraticInvariant {
public:
    explicit QuadraticInvariant(ErmakovSolution kappa);

    double Aq(double t) const;
    double Bq(double t) const;
    double Cq(double t) const;
    double lambda(double t) const;
    double c0() const noexcept { return kappa_.c0(); }

    // Residuals of the first-order system for (A, B, C), scaled as for LinearInvariant.
    std::array<double, 3> residuals(double t) const;

    // Ladder data at t; ModeError when C0 <= 0.
    LadderData ladder_data(double t) const;
    // Operator-level action, valid for any sign of C0.
    WaveFunction apply(double t, const WaveFunction& wf) const;

    const ErmakovSolution& kappa_source() const noexcept { return kappa_; }

private:
    ErmakovSolution kappa_;
    std::shared_ptr<const DenseTrajectory> paths_;
};

QuadraticInvariant quadratic_from_kappa(const CoefficientSet& h, const ErmakovSolution& k);

// kappa = sqrt(C1 k1^2 + C2 k2^2 + 2 C3 k1 k2) from homogeneous k1, k2.
ErmakovSolution pinney(const CoefficientSet& h, const ErmakovSolution& k1,
                       const ErmakovSolution& k2, double C1, double C2, double C3);

// kappa^2 = (C1 mu1^2 + C2 mu2^2 + 2 C3 mu1 mu2) exp(-2 int (c - d)).
ErmakovSolution decompose_quadratic(const CoefficientSet& h, const CharacteristicSolution& mu1,
                                    const CharacteristicSolution& mu2, double C1, double C2,
                                    double C3);

// kappa^2 = D1 k1^2 + D2 k2^2 for two auxiliary solutions with their own C0.
ErmakovSolution general_superposition(const CoefficientSet& h, const ErmakovSolution& e1,
                                      const ErmakovSolution& e2, double D1, double D2);

// C0 (k1 / k)^2 + ((k1 k' - k1' k) / (2a))^2.
double ermakov_invariant(const CoefficientSet& h, const ErmakovSolution& k_homog,
                         const ErmakovSolution& k, double t);

// Left-hand sides of the Wronskian identities for two auxiliary solutions
// (k1, C0_1) and (k2, C0_2), at time t.
struct WronskianResiduals {
    double abel;     // (1/2a) d/dt[W/2a] + C0_1 k2/k1^3 - C0_2 k1/k2^3
    double another;  // d/dt[(k2/k1)(W/2a)] - (2a/k1^2)[(W/2a)^2 - C0_1 (k2/k1)^2 + C0_2 (k1/k2)^2]
    double constant; // (W/2a)^2 + C0_1 (k2/k1)^2 + C0_2 (k1/k2)^2
};
WronskianResiduals wronskian_identities(const CoefficientSet& h, const ErmakovSolution& k1,
                                      const ErmakovSolution& k2, double t);

} // namespace quadinv
