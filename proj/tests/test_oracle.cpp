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

double second_moment(const WaveFunction& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.samples.size(); ++i) s += f.grid.x(i) * f.grid.x(i) * std::norm(f.samples[i]);
    return s * f.grid.dx();
}

WaveFunction run(const CoefficientSet& h, const WaveFunction& psi0, double t, double dt) {
    OracleConfig cfg;
    cfg.dt = dt;
    return evolve_oracle(h, psi0, t, cfg);
}

} // namespace

TEST_CASE("free Gaussian spreads") {
    // At n = 512 the fourth-order stencil leaves about 2e-6 in the moment; n = 1024 is used here.
    const auto fr = make_preset(PresetId::free);
    const Grid g2(-12, 12, 1024);
    const WaveFunction psi = run(fr, testutil::gaussian(g2), 1.0, 1e-3);
    CHECK(std::abs(2.0 * second_moment(psi) - 2.0) < 1e-6);
    CHECK(l2_distance(psi, testutil::free_gaussian(g2, 1.0)) < 1e-5);
}

TEST_CASE("oscillator ground state returns with phase -1") {
    const auto sho = make_preset(PresetId::sho, 7.0);
    const WaveFunction psi0 = testutil::gaussian(g);
    const WaveFunction psi = run(sho, psi0, 2 * pi, 1e-3);
    CHECK(l2_distance(psi, cplx(-1.0) * psi0) < 1e-5);
}

TEST_CASE("second order in time") {
    const auto sho = make_preset(PresetId::sho);
    const WaveFunction psi0 = testutil::gaussian(g, 0.5, 0.8, 0.4);
    const WaveFunction a = run(sho, psi0, 1.0, 4e-3);
    const WaveFunction b = run(sho, psi0, 1.0, 2e-3);
    const WaveFunction c = run(sho, psi0, 1.0, 1e-3);
    const double ratio = l2_distance(a, b) / l2_distance(b, c);
    MESSAGE("self-convergence ratio " << ratio);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("norm is conserved when c = d and damped otherwise") {
    for (PresetId id : {PresetId::free, PresetId::sho, PresetId::parametric, PresetId::caldirola_kanai}) {
        CAPTURE(preset_name(id));
        const Grid wide(-16, 16, 1024);
        const WaveFunction psi = run(make_preset(id), testutil::gaussian(wide, 0.3, 1.0, 0.5), 1.5, 1e-3);
        CHECK(std::abs(l2_norm(psi) - 1.0) < 1e-10);
    }
    // The skew Hamiltonian is not Hermitian: d/dt ||psi||^2 = (d - c) ||psi||^2.
    const WaveFunction psi = run(make_preset(PresetId::skew), testutil::gaussian(g), 1.0, 1e-3);
    CHECK(l2_norm(psi) == doctest::Approx(std::exp(-0.1)).epsilon(1e-6));
}

TEST_CASE("oracle honours the skew ordering") {
    // The identity pairing <chi, lambda psi> is conserved only if px and xp are kept apart.
    const auto h = make_preset(PresetId::skew);
    const WaveFunction psi0 = testutil::gaussian(g, 0.0, 1.0, 0.0);
    const WaveFunction chi0 = testutil::gaussian(g, 0.5, 1.2, 0.3);
    const cplx p0 = inner_product(chi0, psi0);
    for (double t : {0.5, 1.0}) {
        const cplx pt = inner_product(run(h, chi0, t, 1e-3), run(h, psi0, t, 1e-3)) * lambda_factor(h, t);
        CHECK(std::abs(pt - p0) < 1e-6 * std::abs(p0));
    }
}

TEST_CASE("oracle agrees with the Green kernel") {
    for (PresetId id : all_presets()) {
        CAPTURE(preset_name(id));
        const auto h = make_preset(id);
        const Grid fine(-12, 12, 2048);
        const WaveFunction ker = evolve_by_kernel(GreenKernel(h, 1.0).parameters(1.0), testutil::gaussian(fine), g);
        CHECK(l2_distance(run(h, testutil::gaussian(g), 1.0, 5e-4), ker) < 1e-4);
    }
}

TEST_CASE("series evolution matches single calls") {
    const auto h = make_preset(PresetId::parametric);
    const WaveFunction psi0 = testutil::gaussian(g, 0.2, 1.0, 0.1);
    OracleConfig cfg;
    const auto s = evolve_oracle_series(h, psi0, {0.4, 0.4, 1.0}, cfg);
    REQUIRE(s.size() == 3);
    CHECK(l2_distance(s[0], s[1]) == 0.0);
    CHECK(l2_distance(s[2], evolve_oracle(h, s[0], 1.0, cfg, 0.4)) < 1e-14);
    CHECK_THROWS_AS(evolve_oracle_series(h, psi0, {0.5, 0.3}, cfg), UsageError);
}

TEST_CASE("oracle refusals") {
    const auto fr = make_preset(PresetId::free);
    OracleConfig bad;
    bad.dt = 0.0;
    CHECK_THROWS_AS(evolve_oracle(fr, testutil::gaussian(g), 0.1, bad), UsageError);
    CHECK_THROWS_AS(evolve_oracle(fr, testutil::gaussian(g, 11.5, 1.0, 0.0), 0.1), ResolutionError);
    // A fast packet reaches the edge.
    CHECK_THROWS_AS(evolve_oracle(fr, testutil::gaussian(g, 5.0, 0.7, 6.0), 1.0), ResolutionError);
    CHECK_THROWS_AS(evolve_oracle(fr, testutil::gaussian(g), 4.0), DomainError);
    CHECK_THROWS_AS(evolve_oracle(fr, testutil::gaussian(g), 0.5, {}, 0.8), UsageError);
}
