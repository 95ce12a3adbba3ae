#include "quadinv/oracle.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <cmath>
#include <vector>

#include "quadinv/errors.hpp"

namespace quadinv {

namespace {

// Pentadiagonal rows of the discrete H(t): H psi_i = sum_{k=-2..2} row_i[k] psi_{i+k}.
struct Band {
    std::size_t n;
    std::vector<cplx> v; // 5 entries per row, offset k stored at index k + 2

    cplx& at(std::size_t i, int k) { return v[5 * i + static_cast<std::size_t>(k + 2)]; }
    cplx at(std::size_t i, int k) const { return v[5 * i + static_cast<std::size_t>(k + 2)]; }
};

Band discrete_hamiltonian(const CoefficientSet& h, double t, const Grid& g) {
    const std::size_t n = g.size();
    const double dx = g.dx();
    const double a = h.a(t), b = h.b(t), c = h.c(t), d = h.d(t);
    static constexpr double D1[5] = {1.0, -8.0, 0.0, 8.0, -1.0};      // / 12 dx
    static constexpr double D2[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};  // / 12 dx^2
    const cplx I(0.0, 1.0);
    Band H{n, std::vector<cplx>(5 * n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = g.x(i);
        for (int k = -2; k <= 2; ++k) {
            const double xk = x + k * dx;
            const double d1 = D1[k + 2] / (12.0 * dx);
            const double d2 = D2[k + 2] / (12.0 * dx * dx);
            // a p^2 = -a D2; c p x = -i c D1 (x .); d x p = -i d x D1
            cplx e = -a * d2 - I * c * d1 * xk - I * d * x * d1;
            if (k == 0) e += b * x * x;
            H.at(i, k) = e;
        }
    }
    return H;
}

void check_config(const OracleConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw UsageError("oracle: dt must be positive");
    if (cfg.scheme_order != 2) throw UsageError("oracle: only the second-order scheme exists");
    if (cfg.banded_half_width != 2) throw UsageError("oracle: half width is fixed at 2");
}

WaveFunction advance(const CoefficientSet& h, const WaveFunction& psi0, double t_start,
                     double t_end, const OracleConfig& cfg) {
    const Grid& g = psi0.grid;
    const std::size_t n = g.size();
    const auto steps = static_cast<std::size_t>(std::ceil((t_end - t_start) / cfg.dt - 1e-9));
    WaveFunction psi = psi0;
    if (steps == 0) return psi;
    const double dt = (t_end - t_start) / static_cast<double>(steps);

    const lapack_int N = static_cast<lapack_int>(n), KL = 2, KU = 2;
    const lapack_int LDAB = 2 * KL + KU + 1;
    std::vector<lapack_complex_double> ab(static_cast<std::size_t>(LDAB) * n);
    std::vector<lapack_int> ipiv(n);
    CVector rhs(n);
    const cplx half(0.0, 0.5 * dt);

    for (std::size_t s = 0; s < steps; ++s) {
        const double tm = t_start + (static_cast<double>(s) + 0.5) * dt;
        const Band H = discrete_hamiltonian(h, tm, g);
        // rhs = (I - i dt/2 H) psi, Dirichlet: samples outside the grid are zero.
        for (std::size_t i = 0; i < n; ++i) {
            cplx acc = psi.samples[i];
            for (int k = -2; k <= 2; ++k) {
                const auto j = static_cast<std::ptrdiff_t>(i) + k;
                if (j < 0 || j >= static_cast<std::ptrdiff_t>(n)) continue;
                acc -= half * H.at(i, k) * psi.samples[static_cast<std::size_t>(j)];
            }
            rhs[i] = acc;
        }
        // LAPACK band storage (column major): AB(KL + KU + i - j, j) = A(i, j).
        std::fill(ab.begin(), ab.end(), lapack_complex_double{0.0, 0.0});
        for (std::size_t i = 0; i < n; ++i) {
            for (int k = -2; k <= 2; ++k) {
                const auto j = static_cast<std::ptrdiff_t>(i) + k;
                if (j < 0 || j >= static_cast<std::ptrdiff_t>(n)) continue;
                cplx e = half * H.at(i, k);
                if (k == 0) e += 1.0;
                const std::size_t row = static_cast<std::size_t>(KL + KU) + i - static_cast<std::size_t>(j);
                ab[static_cast<std::size_t>(j) * static_cast<std::size_t>(LDAB) + row] = e;
            }
        }
        const lapack_int info =
            LAPACKE_zgbsv(LAPACK_COL_MAJOR, N, KL, KU, 1, ab.data(), LDAB, ipiv.data(),
                          reinterpret_cast<lapack_complex_double*>(rhs.data()), N);
        if (info != 0)
            throw NumericalError("oracle: banded solve failed (info = " + std::to_string(info) + ")");
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(rhs[i].real()) || !std::isfinite(rhs[i].imag()))
                throw NumericalError("oracle: non-finite state");
        }
        psi.samples = rhs;
    }
    if (!psi.boundary_decays(cfg.edge_tolerance))
        throw ResolutionError("oracle: wave reached the grid edges; widen the grid");
    return psi;
}

} // namespace

WaveFunction evolve_oracle(const CoefficientSet& h, const WaveFunction& psi0, double t_end,
                           const OracleConfig& cfg, double t_start) {
    check_config(cfg);
    h.require_time(t_start);
    h.require_time(t_end);
    if (t_end < t_start) throw UsageError("oracle: t_end precedes t_start");
    if (!psi0.boundary_decays())
        throw ResolutionError("oracle: initial state does not decay at the grid edges");
    return advance(h, psi0, t_start, t_end, cfg);
}

std::vector<WaveFunction> evolve_oracle_series(const CoefficientSet& h, const WaveFunction& psi0,
                                               const std::vector<double>& times,
                                               const OracleConfig& cfg, double t_start) {
    check_config(cfg);
    h.require_time(t_start);
    if (!psi0.boundary_decays())
        throw ResolutionError("oracle: initial state does not decay at the grid edges");
    std::vector<WaveFunction> out;
    out.reserve(times.size());
    WaveFunction psi = psi0;
    double t_prev = t_start;
    for (double t : times) {
        h.require_time(t);
        if (t < t_prev) throw UsageError("oracle: output times must not decrease");
        psi = advance(h, psi, t_prev, t, cfg);
        t_prev = t;
        out.push_back(psi);
    }
    return out;
}

} // namespace quadinv
