#include "doctest.h"

#include <cmath>
#include <numbers>

#include "quadinv/cauchy.hpp"
#include "quadinv/errors.hpp"
#include "quadinv/invariants.hpp"
#include "quadinv/oracle.hpp"
#include "test_util.hpp"

using namespace quadinv;
using std::numbers::pi;

namespace {

const Grid g(-12, 12, 512);
const Grid fine(-12, 12, 2048);

ExpansionState make_state(PresetId id, double t_end = 1.4) {
    const auto h = make_preset(id);
    return ExpansionState(h, solve_ermakov(h, 0.0, 1.0, 0.0, t_end), solve_ermakov(h, 1.0, 1.0, 0.0, t_end));
}

WaveFunction oracle(const CoefficientSet& h, const WaveFunction& psi0, double t, double dt = 5e-4) {
    OracleConfig cfg;
    cfg.dt = dt;
    return evolve_oracle(h, psi0, t, cfg);
}

} // namespace

TEST_CASE("Green kernel quadrature") {
    const auto fr = make_preset(PresetId::free);
    const WaveFunction psi = evolve_by_kernel(GreenKernel(fr, 1.0).parameters(1.0), testutil::gaussian(fine), g);
    CHECK(l2_distance(psi, testutil::free_gaussian(g, 1.0)) < 1e-8);

    const auto sho = make_preset(PresetId::sho);
    const auto sho_long = make_preset(PresetId::sho, 7.0);
    CHECK_THROWS_AS(GreenKernel(sho_long, 2 * pi - 0.01).parameters(2 * pi - 0.01), SingularityError);
    const KernelParameters p = GreenKernel(sho, 1.0).parameters(1.0);
    CHECK_THROWS_AS(evolve_by_kernel(p, testutil::gaussian(g)), ResolutionError);
    CHECK(kernel_phase_resolution(p, fine) < pi / 4);
    const WaveFunction k1 = evolve_by_kernel(p, testutil::gaussian(fine), g);
    CHECK(l2_distance(k1, oracle(sho, testutil::gaussian(g), 1.0)) < 1e-4);
}

TEST_CASE("linear invariant acting on a kernel solution") {
    const auto sho = make_preset(PresetId::sho);
    const GeneralKernel k(sho, {0.0, 1.0, 0.0, 1.0}, 1.0);
    const LinearInvariant P(k.direct(), 0.0);
    const WaveFunction chi = testutil::gaussian(fine, 0.3, 1.0, 0.2);
    const WaveFunction ychi = apply_x(chi);
    for (double t : {0.3, 0.8}) {
        const KernelParameters p = k.parameters(t);
        const WaveFunction psi = evolve_by_kernel(p, chi, g);
        const WaveFunction lhs = P.apply(t, psi);
        const WaveFunction rhs = cplx(P.source().lambda(t)) * evolve_by_kernel(p, ychi, g);
        CHECK(l2_distance(lhs, rhs) < 1e-5);
    }
}

TEST_CASE("expansion coefficients") {
    for (PresetId id : {PresetId::sho, PresetId::parametric, PresetId::skew}) {
        CAPTURE(preset_name(id));
        const ExpansionState st = make_state(id);
        for (int m = 0; m <= 5; ++m) {
            const ExpansionCoefficients c(st, special_initial_data(st, m, g), 12);
            const double cm = std::abs(c.at(m, 0.7));
            CHECK(cm > 0.1);
            for (int n = 0; n < 12; ++n)
                if (n != m) CHECK(std::abs(c.at(n, 0.7)) < 1e-9 * std::max(1.0, cm));
        }
    }
    const ExpansionState st = make_state(PresetId::skew);
    const ExpansionCoefficients c(st, testutil::gaussian(g, 0.4, 0.9, 0.5), 16);
    for (double t : {0.5, 1.3})
        for (int n : {0, 3, 7})
            CHECK(std::abs(c.at(n, t)) / std::abs(c.at(n, 0.0)) == doctest::Approx(std::exp(-0.1 * t)).epsilon(1e-9));
    CHECK(c.at(3, 1.0) == expansion_coefficient(st, testutil::gaussian(g, 0.4, 0.9, 0.5), 3, 1.0));
    CHECK_THROWS_AS(expansion_coefficient(st, testutil::gaussian(g), expansion_n_max + 1, 0.5), UsageError);
}

TEST_CASE("Parseval against the oracle norm") {
    for (PresetId id : {PresetId::sho, PresetId::parametric}) {
        CAPTURE(preset_name(id));
        const auto h = make_preset(id);
        const ExpansionState st = make_state(id);
        const WaveFunction chi = testutil::gaussian(g, 0.5, 1.0, 0.3);
        const ExpansionResult r0 = eigenfunction_expansion(st, chi, 0.0, 48);
        const ExpansionResult r1 = eigenfunction_expansion(st, chi, 1.0, 48);
        double s = 0.0;
        for (const cplx& z : r1.coefficients) s += std::norm(z);
        const double n2 = std::pow(l2_norm(oracle(h, r0.psi, 1.0, 1e-3)), 2);
        CHECK(std::abs(s - n2) < 1e-6 * n2);
    }
}

TEST_CASE("eigenfunction expansion") {
    const auto sho = make_preset(PresetId::sho);
    const ExpansionState st = make_state(PresetId::sho);
    const WaveFunction ground = testutil::gaussian(g);
    for (double t : {0.5, 1.0, 1.3}) {
        const ExpansionResult r = eigenfunction_expansion(st, ground, t);
        CHECK_FALSE(r.truncated);
        CHECK(l2_distance(r.psi, cplx(std::polar(1.0, -0.5 * t)) * ground) < 1e-6);
    }

    for (PresetId id : {PresetId::parametric, PresetId::skew}) {
        CAPTURE(preset_name(id));
        const ExpansionState s = make_state(id);
        const QuadraticInvariant E(s.k());
        for (int m : {0, 2, 5}) {
            const WaveFunction chi = special_initial_data(s, m, g);
            for (double t : {0.4, 1.2}) {
                const WaveFunction pm = special_solution(s, m, t, g);
                // The expansion carries the factor i^m onto the single surviving mode.
                cplx im = 1.0;
                for (int j = 0; j < m; ++j) im *= cplx(0.0, 1.0);
                CHECK(l2_distance(eigenfunction_expansion(s, chi, t, 16).psi, im * pm) < 1e-6 * l2_norm(pm));
                const double w = 2.0 * std::sqrt(s.c0()) * E.lambda(t) * (m + 0.5);
                CHECK(l2_distance(E.apply(t, pm), cplx(w) * pm) < 1e-5 * w * l2_norm(pm));
            }
        }
    }
}

TEST_CASE("three routes agree on the parametric preset") {
    const auto h = make_preset(PresetId::parametric);
    const ExpansionState st = make_state(PresetId::parametric);
    const WaveFunction chi = testutil::gaussian(fine);
    const WaveFunction start = evolve_by_kernel(st.kernel_parameters(0.0), chi, g);
    const WaveFunction by_kernel = evolve_by_kernel(st.kernel_parameters(1.0), chi, g);
    const ExpansionResult by_exp = eigenfunction_expansion(st, testutil::gaussian(g), 1.0, 48);
    const WaveFunction by_oracle = oracle(h, start, 1.0);
    MESSAGE("kernel-expansion " << l2_distance(by_kernel, by_exp.psi) << ", kernel-oracle "
                                << l2_distance(by_kernel, by_oracle));
    CHECK(l2_distance(by_kernel, by_exp.psi) < 1e-4);
    CHECK(l2_distance(by_kernel, by_oracle) < 1e-4);
    CHECK(l2_distance(by_exp.psi, by_oracle) < 1e-4);
    CHECK(l2_distance(start, eigenfunction_expansion(st, testutil::gaussian(g), 0.0).psi) < 1e-6);
}

TEST_CASE("expansion in wavefunctions") {
    const auto sho = make_preset(PresetId::sho);
    const ErmakovSolution k1 = solve_ermakov(sho, 0.0, 1.0, 0.0, 1.4);
    const WaveFunction chi = testutil::gaussian(g, 0.5, 1.1, 0.3);
    const ExpansionState st(sho, k1, matching_kappa(sho, k1, 1.0), 0.0);

    const WaveFunction at0 = expansion_in_wavefunctions(sho, k1, 1.0, chi, 0.0).psi;
    CHECK(l2_distance(at0, evolve_by_kernel(st.kernel_parameters(0.0), testutil::gaussian(fine, 0.5, 1.1, 0.3), g)) < 1e-6);
    CHECK(l2_distance(expansion_in_wavefunctions(sho, k1, 1.0, chi, 0.7).psi,
                      eigenfunction_expansion(st, chi, 0.7).psi) < 1e-8);

    // The special solutions at t = 0 are complete on their own.
    const ErmakovSolution k = solve_ermakov(sho, 1.0, 1.0, 0.0, 1.4);
    CHECK(l2_distance(cauchy_expansion(sho, k, chi, 0.0).psi, chi) < 1e-6);

    const int m = 2;
    const WaveFunction pm0 = special_solution(st, m, 0.0, g);
    const WaveFunction out = expansion_in_wavefunctions(sho, k1, 1.0, pm0, 1.3).psi;
    const cplx ph = -std::polar(1.0, -(m + 0.5) * st.phi(0.0)); // i^2 e^{-i(m+1/2)phi(0)}
    CHECK(l2_distance(out, ph * special_solution(st, m, 1.3, g)) < 1e-6);
}

TEST_CASE("kernel-mode overlap") {
    const ExpansionState sho = make_state(PresetId::sho);
    CHECK(std::abs(kpsi_overlap(sho, 0, 0.0, 0.5) - kpsi_overlap_quadrature(sho, 0, 0.0, 0.5, fine)) < 1e-7);
    CHECK(std::abs(kpsi_overlap(sho, 3, 0.0, 0.5)) < 1e-14);
    CHECK(std::abs(kpsi_overlap(sho, 4, 0.8, 0.9)) == doctest::Approx(std::abs(kpsi_overlap(sho, 4, -0.8, 0.9))).epsilon(1e-12));
    for (PresetId id : {PresetId::sho, PresetId::parametric}) {
        CAPTURE(preset_name(id));
        const ExpansionState st = make_state(id);
        for (double t : {0.3, 0.8, 1.2})
            for (double y : {-2.0, -0.7, 0.0, 0.6, 1.9})
                for (int n = 0; n <= 6; ++n) {
                    const cplx a = kpsi_overlap(st, n, y, t);
                    const cplx b = kpsi_overlap_quadrature(st, n, y, t, fine);
                    CHECK(std::abs(a - b) < 1e-6 * std::max(1.0, std::abs(a)));
                }
    }
}

TEST_CASE("expansion state invariants") {
    for (PresetId id : {PresetId::sho, PresetId::parametric, PresetId::caldirola_kanai, PresetId::skew}) {
        CAPTURE(preset_name(id));
        const ExpansionState st = make_state(id);
        const auto& h = st.coeffs();
        const double g0 = st.xi_const();
        for (int i = 1; i <= 40; ++i) {
            const double t = 1.35 * i / 40;
            const double kk = st.k().kappa(t);
            const double rate = 2.0 * std::sqrt(st.c0()) * h.a(t) / (kk * kk);
            CHECK(std::abs(testutil::fd([&](double s) { return st.phi(s); }, t) - rate) < 1e-7 * std::max(1.0, rate));
            CHECK(std::abs(st.phi_rate(t) - rate) < 1e-12 * std::max(1.0, rate));
            CHECK(std::abs(st.xi_at(t) - g0) < 1e-8 * std::max(1.0, std::abs(g0)));
            const double u = st.k1().kappa(t);
            const double w = (u * st.k().kappa_prime(t) - st.k1().kappa_prime(t) * kk) / (2.0 * h.a(t));
            const double val = st.gamma(t) + st.delta() * st.delta() / (2.0 * std::sqrt(st.c0())) * (kk / u) * w;
            CHECK(std::abs(val - g0) < 1e-8 * std::max(1.0, std::abs(g0)));
        }
        for (double t : {0.3, 0.8, 1.3}) CHECK(std::abs(st.delta_at(t) / st.delta() - 1.0) < 1e-8);
        CHECK(std::abs(std::tan(st.phi_from_tangent(0.0)) - std::tan(st.phi(0.0))) < 1e-10);
    }
}

TEST_CASE("spectral decomposition of the expansion") {
    const ExpansionState st = make_state(PresetId::parametric);
    const WaveFunction chi = testutil::gaussian(g, 0.3, 1.0, 0.2);
    const double t = 0.9;
    const ExpansionResult r = eigenfunction_expansion(st, chi, t, 32);
    const QuadraticInvariant E(st.k());
    const std::vector<WaveFunction> modes = hermite_modes(32, st.ladder_data(t), g);
    WaveFunction sum(g, CVector(g.size()));
    const double w = 2.0 * std::sqrt(st.c0()) * E.lambda(t);
    for (int n = 0; n < 32; ++n)
        sum = sum + cplx(w * (n + 0.5)) * r.coefficients[static_cast<std::size_t>(n)] * modes[static_cast<std::size_t>(n)];
    CHECK(l2_distance(E.apply(t, r.psi), sum) < 1e-5);
}

TEST_CASE("expansion guards") {
    const ExpansionState st = make_state(PresetId::sho);
    const WaveFunction wide = testutil::gaussian(g, 4.0, 0.3, 3.0);
    CHECK(eigenfunction_expansion(st, wide, 0.5, 4).truncated);
    CHECK_THROWS_AS(eigenfunction_expansion(st, wide, 0.5, expansion_n_max + 1), UsageError);
    CHECK_THROWS_AS(eigenfunction_expansion(st, wide, 0.5, 0), UsageError);
    const auto sho = make_preset(PresetId::sho);
    CHECK_THROWS_AS(cauchy_expansion(sho, solve_ermakov(sho, 0.0, 1.0, 0.0, 1.0), wide, 0.5), ModeError);
    CHECK_THROWS_AS(cauchy_expansion(sho, solve_ermakov(sho, 1.0, 1.0, 0.0, 1.0), wide, 1.5), DomainError);
    const WaveFunction edge = testutil::gaussian(g, 11.0, 1.0, 0.0);
    const WaveFunction edge_fine = testutil::gaussian(fine, 11.0, 1.0, 0.0);
    CHECK_FALSE(evolve_by_kernel(GreenKernel(sho, 0.5).parameters(0.5), edge_fine, g).warnings.empty());
}

TEST_CASE("Cauchy expansion against the oracle") {
    for (PresetId id : all_presets()) {
        CAPTURE(preset_name(id));
        const auto h = make_preset(id);
        const WaveFunction phi = testutil::gaussian(g, 0.4, 1.0, 0.3);
        const ErmakovSolution k = solve_ermakov(h, 1.0, 1.0, 0.0, 1.0);
        CHECK(l2_distance(cauchy_expansion(h, k, phi, 1.0).psi, oracle(h, phi, 1.0)) < 1e-4);
    }
}
