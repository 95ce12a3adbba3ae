#pragma once

#include <vector>

namespace quadinv {

inline constexpr int hermite_max_degree = 64;

// Physicists' Hermite polynomial H_n(x) by the three-term recurrence; n <= 64.
double hermite(int n, double x);

// Orthonormal Hermite function h_n(x) = H_n(x) e^{-x^2/2} / sqrt(2^n n! sqrt(pi)),
// evaluated by the normalised recurrence (no overflow for large n).
double hermite_function(int n, double x);
// h_0(x) ... h_nmax(x).
std::vector<double> hermite_functions(int nmax, double x);

struct GaussTransform {
    double lhs; // quadrature of int exp(-lam^2 (x - y)^2) H_n(a y) dy
    double rhs; // closed form
};

// Requires lam^2 > a_scale^2 (DomainError otherwise).
GaussTransform gauss_transform(int n, double lam, double a_scale, double x);

} // namespace quadinv
