#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "quadinv/coeffs.hpp"
#include "quadinv/ode.hpp"

namespace quadinv {

inline constexpr double kappa_floor = 1e-8;
inline constexpr double mu_prime_floor = 1e-10;

struct CharacteristicOptions {
    // Accumulate the integral of a sigma lambda^2 / mu'^2 (Green seed only).
    bool track_gamma0 = false;
    OdeOptions ode{};
};

// Dense solution of mu'' - tau mu' + 4 sigma mu = 0 with the path integrals
// of (c - d), (c + d) and, optionally, the Green-function phase integral.
class CharacteristicSolution {
public:
    double mu(double t) const;
    double mu_prime(double t) const;
    // From the ODE right-hand side.
    double mu_second(double t) const;
    // Derivative of the dense interpolant of mu'.
    double mu_second_interpolated(double t) const;
    double quad_cd(double t) const;
    double quad_cpd(double t) const;
    double quad_gamma0(double t) const;
    double lambda(double t) const;

    bool tracks_gamma0() const noexcept { return track_gamma0_; }
    double t_end() const noexcept { return traj_->t_end(); }
    std::vector<double> nodes() const { return traj_->nodes(); }
    const CoefficientSet& coeffs() const noexcept { return *coeffs_; }
    const DenseTrajectory& trajectory() const noexcept { return *traj_; }

private:
    friend CharacteristicSolution solve_characteristic(const CoefficientSet&, double, double,
                                                       double, const CharacteristicOptions&);
    std::shared_ptr<const CoefficientSet> coeffs_;
    std::shared_ptr<const DenseTrajectory> traj_;
    bool track_gamma0_ = false;
};

CharacteristicSolution solve_characteristic(const CoefficientSet& h, double mu0, double mup0,
                                            double t_end, const CharacteristicOptions& opt = {});

// Seed (0, 2a(0)) with the phase integral tracked.
CharacteristicSolution solve_green_characteristic(const CoefficientSet& h, double t_end,
                                                  const OdeOptions& ode = {});

struct KappaState {
    double kappa;
    double kappa_prime;
    double kappa_second;
};

// A solution of the auxiliary equation
//   k'' - (a'/a) k' + [4ab + (a'/a - c - d)(c + d) - c' - d'] k = C0 (2a)^2 / k^3.
// Either integrated directly or composed from other solutions; composite
// sources supply k'' by the chain rule rather than from the equation.
class ErmakovSolution {
public:
    using Evaluator = std::function<KappaState(double)>;

    ErmakovSolution(std::shared_ptr<const CoefficientSet> h, double c0, double t_end,
                    Evaluator eval, std::vector<double> nodes);

    double c0() const noexcept { return c0_; }
    KappaState at(double t) const;
    double kappa(double t) const { return at(t).kappa; }
    double kappa_prime(double t) const { return at(t).kappa_prime; }
    double t_end() const noexcept { return t_end_; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const CoefficientSet& coeffs() const noexcept { return *coeffs_; }
    const std::shared_ptr<const CoefficientSet>& coeffs_ptr() const noexcept { return coeffs_; }

private:
    std::shared_ptr<const CoefficientSet> coeffs_;
    double c0_;
    double t_end_;
    Evaluator eval_;
    std::vector<double> nodes_;
};

// Components [int_0^t (c - d), int_0^t (c + d)].
DenseTrajectory solve_path_integrals(const CoefficientSet& h, double t_end,
                                     const OdeOptions& ode = {});

// Homogeneous solutions (C0 = 0) are solutions of a linear equation and may
// change sign; the positivity floor applies only when C0 != 0.
ErmakovSolution solve_ermakov(const CoefficientSet& h, double c0, double k0, double kp0,
                              double t_end, const OdeOptions& ode = {});

// kappa = mu exp(-int (c - d)), a homogeneous auxiliary solution.
ErmakovSolution kappa_from_mu(const CharacteristicSolution& mu);

// Linear coefficient of the auxiliary equation.
double aux_omega(const CoefficientSet& h, double t);
// kappa'' implied by the auxiliary equation.
double aux_second_derivative(const CoefficientSet& h, double c0, double t, double k, double kp);
// Residual of the auxiliary equation for a given state.
double aux_residual(const CoefficientSet& h, double c0, double t, const KappaState& s);

double wronskian(double f, double fp, double g, double gp);
double wronskian(const CharacteristicSolution& s1, const CharacteristicSolution& s2, double t);
double wronskian(const ErmakovSolution& s1, const ErmakovSolution& s2, double t);

// True when both solutions were built from the same coefficient set.
bool same_coefficients(const CoefficientSet& a, const CoefficientSet& b);

} // namespace quadinv
