#pragma once

#include <vector>

#include "quadinv/coeffs.hpp"
#include "quadinv/grid.hpp"

namespace quadinv {

struct OracleConfig {
    double dt = 1e-3;
    int scheme_order = 2;
    int banded_half_width = 2;
    // Edge modulus relative to max|psi| above which the run is refused.
    double edge_tolerance = 1e-8;
};

// Crank-Nicolson evolution of i psi_t = H psi from t_start to t_end with fourth-order
// central differences and Dirichlet ends. Steps are shortened uniformly so that
// t_end is hit exactly. Coefficients are frozen at each half step.
WaveFunction evolve_oracle(const CoefficientSet& h, const WaveFunction& psi0, double t_end,
                           const OracleConfig& cfg = {}, double t_start = 0.0);

// States at each of the non-decreasing times, evolved continuously from t_start. Only
// psi0 must meet the strict decay check; later states are held to edge_tolerance.
std::vector<WaveFunction> evolve_oracle_series(const CoefficientSet& h, const WaveFunction& psi0,
                                               const std::vector<double>& times,
                                               const OracleConfig& cfg = {}, double t_start = 0.0);

} // namespace quadinv
