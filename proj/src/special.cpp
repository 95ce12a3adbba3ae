#include "quadinv/special.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

#include "quadinv/errors.hpp"

namespace quadinv {

double hermite(int n, double x) {
    if (n < 0 || n > hermite_max_degree) throw UsageError("hermite: degree out of range");
    if (n == 0) return 1.0;
    double hm = 1.0, h = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        const double hp = 2.0 * x * h - 2.0 * k * hm;
        hm = h;
        h = hp;
    }
    return h;
}

std::vector<double> hermite_functions(int nmax, double x) {
    if (nmax < 0) throw UsageError("hermite_functions: negative degree");
    std::vector<double> h(static_cast<std::size_t>(nmax) + 1);
    h[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
    if (nmax >= 1) h[1] = std::numbers::sqrt2 * x * h[0];
    for (int k = 1; k < nmax; ++k) {
        h[k + 1] = std::sqrt(2.0 / (k + 1)) * x * h[k] - std::sqrt(double(k) / (k + 1)) * h[k - 1];
    }
    return h;
}

double hermite_function(int n, double x) { return hermite_functions(n, x).back(); }

namespace {

using Rule = boost::math::quadrature::gauss<double, 30>;

template <class F>
double panel(const F& f, double a, double b) {
    return Rule::integrate(f, a, b);
}

// Composite Gauss-Legendre with recursive panel bisection.
template <class F>
double adaptive(const F& f, double a, double b, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double left = panel(f, a, m), right = panel(f, m, b);
    if (depth >= 40 || std::abs(left + right - whole) <= tol) return left + right;
    return adaptive(f, a, m, left, 0.5 * tol, depth + 1) +
           adaptive(f, m, b, right, 0.5 * tol, depth + 1);
}

} // namespace

GaussTransform gauss_transform(int n, double lam, double a_scale, double x) {
    if (n < 0 || n > hermite_max_degree) throw UsageError("gauss_transform: degree out of range");
    if (!(lam > 0.0)) throw DomainError("gauss_transform: lam must be positive");
    const double disc = lam * lam - a_scale * a_scale;
    if (!(disc > 0.0)) throw DomainError("gauss_transform: requires lam^2 > a^2");

    const double root = std::sqrt(disc);
    const double rhs = std::sqrt(std::numbers::pi) / std::pow(lam, n + 1) * std::pow(root, n) *
                       hermite(n, lam * a_scale * x / root);

    // The Gaussian weight is below e^{-100} outside |y - x| <= 10 / lam; the
    // polynomial factor cannot recover that for the degrees allowed here.
    auto f = [&](double y) {
        const double u = lam * (x - y);
        return std::exp(-u * u) * hermite(n, a_scale * y);
    };
    const double lo = x - 10.0 / lam, hi = x + 10.0 / lam;
    constexpr int panels = 8;
    double scale = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double a = lo + (hi - lo) * k / panels, b = lo + (hi - lo) * (k + 1) / panels;
        scale += Rule::integrate([&](double y) { return std::abs(f(y)); }, a, b);
    }
    const double tol = 1e-12 * scale;
    double lhs = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double a = lo + (hi - lo) * k / panels, b = lo + (hi - lo) * (k + 1) / panels;
        lhs += adaptive(f, a, b, panel(f, a, b), tol / panels, 0);
    }
    return {lhs, rhs};
}

} // namespace quadinv
