#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "quadinv/grid.hpp"

namespace testutil {

using quadinv::cplx;

// pi^{-1/4} w^{-1/2} exp(-(x - x0)^2 / (2 w^2) + i k x)
inline quadinv::WaveFunction gaussian(const quadinv::Grid& g, double x0 = 0.0, double w = 1.0,
                                      double k = 0.0) {
    return quadinv::WaveFunction::sample(g, [=](double x) {
        const double u = (x - x0) / w;
        return std::pow(std::numbers::pi, -0.25) / std::sqrt(w) * std::exp(-0.5 * u * u) *
               std::polar(1.0, k * x);
    });
}

// Closed-form free evolution of the unit Gaussian under H = p^2 / 2.
inline quadinv::WaveFunction free_gaussian(const quadinv::Grid& g, double t) {
    return quadinv::WaveFunction::sample(g, [=](double x) {
        const cplx z(1.0, t);
        return std::pow(std::numbers::pi, -0.25) / std::sqrt(z) * std::exp(-x * x / (2.0 * z));
    });
}

// Classical fixed-step RK4 for a scalar second-order ODE y'' = f(t, y, y').
inline std::pair<double, double> rk4_second_order(
    const std::function<double(double, double, double)>& f, double y0, double yp0, double t1,
    int steps) {
    double t = 0.0, y = y0, v = yp0;
    const double h = t1 / steps;
    for (int i = 0; i < steps; ++i) {
        const double k1y = v, k1v = f(t, y, v);
        const double k2y = v + 0.5 * h * k1v, k2v = f(t + 0.5 * h, y + 0.5 * h * k1y, k2y);
        const double k3y = v + 0.5 * h * k2v, k3v = f(t + 0.5 * h, y + 0.5 * h * k2y, k3y);
        const double k4y = v + h * k3v, k4v = f(t + h, y + h * k3y, k4y);
        y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        t += h;
    }
    return {y, v};
}

// Five-point centred derivative.
inline double fd(const std::function<double(double)>& f, double t, double h = 1e-3) {
    return (f(t - 2 * h) - 8 * f(t - h) + 8 * f(t + h) - f(t + 2 * h)) / (12 * h);
}

inline double rel(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

} // namespace testutil
