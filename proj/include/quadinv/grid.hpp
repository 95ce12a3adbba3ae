#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "quadinv/coeffs.hpp"

namespace quadinv {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

// Uniform periodic grid x_i = x_min + i dx, i < n, dx = (x_max - x_min) / n.
class Grid {
public:
    Grid(double x_min, double x_max, std::size_t n);

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    std::size_t size() const noexcept { return n_; }
    double dx() const noexcept { return dx_; }
    double x(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * dx_; }
    double span() const noexcept { return x_max_ - x_min_; }
    std::vector<double> points() const;

    bool operator==(const Grid& o) const noexcept {
        return x_min_ == o.x_min_ && x_max_ == o.x_max_ && n_ == o.n_;
    }

private:
    double x_min_, x_max_;
    std::size_t n_;
    double dx_;
};

inline constexpr double boundary_decay_ratio = 1e-10;

struct WaveFunction {
    Grid grid;
    CVector samples;
    std::vector<std::string> warnings;

    WaveFunction(Grid g, CVector s);
    static WaveFunction sample(const Grid& g, const std::function<cplx(double)>& f);
    static WaveFunction zero(const Grid& g);

    // |samples| at the outer two points on each side below ratio * max|samples|.
    bool boundary_decays(double ratio = boundary_decay_ratio) const;
};

enum class DerivativeScheme {
    // Fourier differentiation of the periodic extension (decaying states).
    spectral,
    // Centered finite differences, shifted near the edges (non-decaying fields).
    stencil,
};

inline constexpr int default_stencil_half_width = 6;

// Weights for the m-th derivative at 0 from samples at the given offsets (units of dx).
std::vector<double> fornberg_weights(int m, const std::vector<double>& offsets);

// m-th spatial derivative (m = 1 or 2) of samples on g.
CVector derivative(const Grid& g, const CVector& f, int m,
                   DerivativeScheme scheme = DerivativeScheme::spectral,
                   int half_width = default_stencil_half_width);

WaveFunction apply_x(const WaveFunction& wf);
WaveFunction apply_p(const WaveFunction& wf, DerivativeScheme scheme = DerivativeScheme::spectral);

// A p + B x + C.
WaveFunction apply_linear_invariant(double A, double B, double C, const WaveFunction& wf,
                                    DerivativeScheme scheme = DerivativeScheme::spectral);

// H(t) = a p^2 + b x^2 + c p x + d x p.
WaveFunction apply_hamiltonian(const CoefficientSet& h, double t, const WaveFunction& wf,
                               DerivativeScheme scheme = DerivativeScheme::spectral);

struct LadderData {
    double kappa;
    double kappap;
    double cpd;   // c(t) + d(t)
    double a_t;   // a(t)
    double omega0;

    // Throws ModeError unless kappa > 0 and omega0 > 0.
    void validate() const;
    double epsilon() const; // sqrt(omega0 / 2) / kappa
    // (kappa' - (c + d) kappa) / (4 a kappa), the chirp of the eigenmodes.
    double chirp() const;
};

// [(kappa p + ((c+d) kappa - kappa') / (2a) x)^2 + (C0 / kappa^2) x^2] lam.
WaveFunction apply_quadratic_invariant(const LadderData& ld, double lam, double c0,
                                       const WaveFunction& wf);

enum class LadderDirection { lower, raise };
WaveFunction ladder(const LadderData& ld, const WaveFunction& wf, LadderDirection dir);

inline constexpr int hermite_mode_max = 64;
// Psi_n with positive real normalisation constant.
WaveFunction hermite_mode(int n, const LadderData& ld, const Grid& g);
// Psi_0 ... Psi_{count-1}, sharing one recurrence per grid point.
std::vector<WaveFunction> hermite_modes(int count, const LadderData& ld, const Grid& g);

cplx inner_product(const WaveFunction& a, const WaveFunction& b);
double l2_norm(const WaveFunction& wf);
double l2_distance(const WaveFunction& a, const WaveFunction& b);
// Maximum modulus over the whole grid.
double max_abs(const CVector& v);

WaveFunction operator+(const WaveFunction& a, const WaveFunction& b);
WaveFunction operator-(const WaveFunction& a, const WaveFunction& b);
WaveFunction operator*(cplx s, const WaveFunction& a);

} // namespace quadinv
