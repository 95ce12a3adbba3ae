#pragma once

#include <optional>
#include <vector>

#include "quadinv/characteristic.hpp"
#include "quadinv/grid.hpp"
#include "quadinv/kernel.hpp"

namespace quadinv {

// psi(x, t) = int K(x, y, t) phi(y) dy by the trapezoid rule on phi's grid, sampled on
// out_grid (defaults to phi's grid). The Green function below kernel_t_min returns phi.
// Throws ResolutionError when max(|alpha|, |beta|, |gamma|) * span * dx >= pi/4.
WaveFunction evolve_by_kernel(const KernelParameters& p, const WaveFunction& phi0,
                              const std::optional<Grid>& out_grid = std::nullopt);

// The per-cell phase measure used by the resolution check.
double kernel_phase_resolution(const KernelParameters& p, const Grid& y_grid);

inline constexpr int expansion_default_order = 48;
inline constexpr int expansion_n_max = 64;
inline constexpr double truncation_threshold = 1e-6;

// Constants and phases of the eigenfunction expansion, built from a homogeneous
// auxiliary solution k1 (normalised so that the kernel has beta(0) k1(0) = 1) and an
// auxiliary solution k with C0 > 0.
class ExpansionState {
public:
    ExpansionState(const CoefficientSet& h, ErmakovSolution k1, ErmakovSolution k,
                   double gamma0 = 0.0, const OdeOptions& ode = {});

    double c0() const noexcept { return k_.c0(); }
    double delta() const noexcept { return delta_; }
    double xi_const() const noexcept { return xi_; }
    double t_end() const noexcept { return phases_->t_end(); }

    // Integrated phase and gamma.
    double phi(double t) const;
    double gamma(double t) const;
    double lambda(double t) const;
    // C0 (k1/k)^2 + (W/2a)^2 at t.
    double ermakov_invariant(double t) const;
    // delta and xi re-evaluated from the solutions at time t.
    double delta_at(double t) const;
    double xi_at(double t) const;
    // arctan of the tangent formula at t (principal branch).
    double phi_from_tangent(double t) const;
    double phi_rate(double t) const;

    LadderData ladder_data(double t) const;
    // Kernel of the expansion: mu = k1 lambda, beta = 1 / k1, gamma from the ODE.
    KernelParameters kernel_parameters(double t) const;
    KernelInitialData kernel_initial_data() const;

    const CoefficientSet& coeffs() const noexcept { return *coeffs_; }
    const ErmakovSolution& k1() const noexcept { return k1_; }
    const ErmakovSolution& k() const noexcept { return k_; }

private:
    std::shared_ptr<const CoefficientSet> coeffs_;
    ErmakovSolution k1_, k_;
    std::shared_ptr<const DenseTrajectory> phases_; // [gamma, phi, int (c - d)]
    double delta_ = 0.0, xi_ = 0.0;
};

// Expansion coefficients c_n(t) with the t-independent projections cached.
class ExpansionCoefficients {
public:
    ExpansionCoefficients(const ExpansionState& st, const WaveFunction& chi, int count);

    int count() const noexcept { return static_cast<int>(proj_.size()); }
    // int exp(i xi y^2) sqrt(delta) h_n(delta y) chi(y) dy
    cplx projection(int n) const;
    cplx at(int n, double t) const;
    std::vector<cplx> all(double t) const;

private:
    ExpansionState st_;
    std::vector<cplx> proj_;
};

cplx expansion_coefficient(const ExpansionState& st, const WaveFunction& chi, int n, double t);

struct ExpansionResult {
    WaveFunction psi;
    std::vector<cplx> coefficients;
    bool truncated = false;
};

ExpansionResult eigenfunction_expansion(const ExpansionState& st, const WaveFunction& chi,
                                        double t, int N = expansion_default_order,
                                        const std::optional<Grid>& out_grid = std::nullopt);

// Auxiliary solution whose initial data make the expansion basis at t = 0 coincide with
// the modes Psi_n(., 0): C0^{1/4} / k(0) = delta and the chirp of Psi_n(., 0) is -xi.
ErmakovSolution matching_kappa(const CoefficientSet& h, const ErmakovSolution& k1, double c0,
                               double gamma0 = 0.0, const OdeOptions& ode = {});

// Sum of i^n e^{-i(n+1/2) phi(0)} psi_n(x, t) <psi_n(., 0), chi>, with
// psi_n = e^{(1/2) int (d - c)} e^{-i(n+1/2) phi} Psi_n; k from matching_kappa.
ExpansionResult expansion_in_wavefunctions(const CoefficientSet& h, const ErmakovSolution& k1,
                                           double c0, const WaveFunction& chi, double t,
                                           int N = expansion_default_order,
                                           double gamma0 = 0.0);

// Cauchy problem psi(x, 0) = phi0 solved in the basis of special solutions built from k
// alone: psi = sum <Psi_n(., 0), phi0> e^{(1/2) int (d - c)} e^{-i(n+1/2) theta} Psi_n(., t),
// theta = int_0^t 2 sqrt(C0) a / k^2.
ExpansionResult cauchy_expansion(const CoefficientSet& h, const ErmakovSolution& k,
                                 const WaveFunction& phi0, double t,
                                 int N = expansion_default_order);

// psi_m(x, t) = e^{(1/2) int (d - c)} e^{-i(m+1/2) phi(t)} Psi_m(x, t).
WaveFunction special_solution(const ExpansionState& st, int m, double t, const Grid& g);
// chi_m(y) = exp(-i xi y^2) exp(-delta^2 y^2 / 2) H_m(delta y), scaled to unit norm.
WaveFunction special_initial_data(const ExpansionState& st, int m, const Grid& g);

// Closed form of int conj(Psi_n(x, t)) K(x, y, t) dx for the expansion kernel.
cplx kpsi_overlap(const ExpansionState& st, int n, double y, double t);
// The same integral by trapezoid quadrature in x on g.
cplx kpsi_overlap_quadrature(const ExpansionState& st, int n, double y, double t, const Grid& g);

} // namespace quadinv
