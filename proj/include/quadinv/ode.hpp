#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace quadinv {

using OdeRhs = std::function<void(double t, const double* y, double* dydt)>;
// Called after every accepted step; may throw to abort the integration.
using StepObserver = std::function<void(double t, const double* y)>;

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    std::size_t max_steps = 500000;
};

// Piecewise degree-7 interpolant produced by the 8(5,3) Dormand-Prince pair.
class DenseTrajectory {
public:
    DenseTrajectory() = default;

    std::size_t dimension() const noexcept { return dim_; }
    double t_begin() const noexcept { return t_begin_; }
    double t_end() const noexcept { return t_end_; }

    double value(double t, std::size_t i) const;
    double derivative(double t, std::size_t i) const;
    void state(double t, double* y) const;

    // Accepted step boundaries, including both end points.
    std::vector<double> nodes() const;
    std::size_t step_count() const noexcept { return segments_.size(); }

private:
    friend DenseTrajectory integrate_dense(std::size_t, const OdeRhs&, double, const double*,
                                           double, const OdeOptions&, const StepObserver&);
    struct Segment {
        double t0;
        double h;
        std::vector<double> r; // 8 blocks of dim_ coefficients
    };
    const Segment& locate(double t) const;

    std::size_t dim_ = 0;
    double t_begin_ = 0.0;
    double t_end_ = 0.0;
    std::vector<double> y_begin_;
    std::vector<Segment> segments_;
};

// Integrates y' = f(t, y) forward from t0 to t1 with dense output.
// Throws IntegrationError on step-size underflow or step-count exhaustion.
DenseTrajectory integrate_dense(std::size_t dim, const OdeRhs& f, double t0, const double* y0,
                                double t1, const OdeOptions& opt = {},
                                const StepObserver& on_step = {});

} // namespace quadinv
