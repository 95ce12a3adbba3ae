#include "doctest.h"

#include <cmath>
#include <numbers>

#include "quadinv/errors.hpp"
#include "quadinv/expr.hpp"
#include "quadinv/invariants.hpp"
#include "quadinv/oracle.hpp"
#include "test_util.hpp"

using namespace quadinv;
using std::numbers::pi;
using testutil::rel;

namespace {

const Grid g(-12, 12, 512);

double worst_residual(const std::vector<double>& nodes, double t_end,
                      const std::function<std::array<double, 3>(double)>& f) {
    double m = 0.0;
    for (double t : nodes) {
        if (t <= 0.0 || t >= t_end) continue;
        const auto r = f(t);
        m = std::max({m, r[0], r[1], r[2]});
    }
    return m;
}

double aux_worst(const ErmakovSolution& k) {
    double m = 0.0;
    for (double t : k.nodes()) {
        if (t <= 0.0 || t >= k.t_end()) continue;
        const KappaState s = k.at(t);
        m = std::max(m, std::abs(aux_residual(k.coeffs(), k.c0(), t, s)) / (1.0 + std::abs(s.kappa_second)));
    }
    return m;
}

// Relative drift of <chi(t), O(t) psi(t)> over oracle-evolved states.
double pairing_drift(const CoefficientSet& h, const std::function<WaveFunction(double, const WaveFunction&)>& op,
                     const std::vector<double>& ts) {
    const WaveFunction psi = testutil::gaussian(g, 0.0, 1.0, 0.0);
    const WaveFunction chi = testutil::gaussian(g, 0.5, 1.2, 0.3);
    OracleConfig cfg;
    cfg.dt = 1e-3;
    const auto psis = evolve_oracle_series(h, psi, ts, cfg);
    const auto chis = evolve_oracle_series(h, chi, ts, cfg);
    std::vector<cplx> v;
    for (std::size_t i = 0; i < ts.size(); ++i) v.push_back(inner_product(chis[i], op(ts[i], psis[i])));
    double m = 0.0;
    for (const cplx& z : v) m = std::max(m, std::abs(z - v[0]) / std::abs(v[0]));
    return m;
}

std::vector<double> pairing_times() {
    std::vector<double> ts;
    for (int k = 1; k <= 15; ++k) ts.push_back(0.1 * k);
    return ts;
}

} // namespace

TEST_CASE("linear invariants from mu") {
    const auto fr = make_preset(PresetId::free);
    const LinearInvariant boost_inv = linear_from_mu(fr, solve_characteristic(fr, 0.0, 1.0, 3.0), 0.0);
    for (double t : {0.5, 2.0}) {
        CHECK(boost_inv.A(t) == doctest::Approx(t).epsilon(1e-12));
        CHECK(boost_inv.B(t) == doctest::Approx(-1.0).epsilon(1e-12));
    }
    const auto sho = make_preset(PresetId::sho);
    const LinearInvariant s = linear_from_mu(sho, solve_characteristic(sho, 0.0, 1.0, 3.0), 0.7);
    for (double t : {0.4, 1.3, 2.9}) {
        CHECK(std::abs(s.A(t) - std::sin(t)) < 1e-10);
        CHECK(std::abs(s.B(t) + std::cos(t)) < 1e-10);
        CHECK(s.C(t) == doctest::Approx(0.7).epsilon(1e-14));
    }
    CHECK_THROWS_AS(linear_from_mu(fr, solve_characteristic(sho, 0.0, 1.0, 3.0), 0.0), UsageError);
}

TEST_CASE("linear invariant system and second-order forms") {
    for (PresetId id : all_presets()) {
        CAPTURE(preset_name(id));
        const auto h = make_preset(id);
        const LinearInvariant P(solve_characteristic(h, 1.0, 0.3, 3.0), 0.5);
        CHECK(worst_residual(P.source().nodes(), 3.0, [&](double t) { return P.residuals(t); }) < 1e-8);
        for (double t : P.source().nodes()) CHECK(P.second_order_residual_A(t) < 1e-8);
    }
    // a and c constant, b and d nonzero: B'' from mu''' computed by hand.
    const auto h = make_inline_coefficients("0.5", "0.5 + 0.1*sin(t)", "0.2", "0.3 + 0.1*cos(t)");
    const CharacteristicSolution mu = solve_characteristic(h, 1.0, 0.3, 3.0);
    const LinearInvariant P(mu, 0.0);
    for (double t : {0.3, 1.0, 1.7, 2.5}) {
        CHECK(P.second_order_residual_B(t) < 1e-8);
        const auto [tau, sigma] = tau_sigma(h, t);
        const double m = mu.mu(t), m1 = mu.mu_prime(t), m2 = mu.mu_second(t);
        const double dtau = -2.0 * h.dd(t), dsigma = h.a(t) * h.db(t) - h.c(t) * h.dd(t);
        const double m3 = dtau * m1 + tau * m2 - 4.0 * dsigma * m - 4.0 * sigma * m1;
        const double B = (2 * h.c(t) * m - m1) / (2 * h.a(t));
        const double B1 = (2 * h.c(t) * m1 - m2) / (2 * h.a(t));
        const double B2 = (2 * h.c(t) * m2 - m3) / (2 * h.a(t));
        const double b = h.b(t), d = h.d(t);
        const double r = B2 - (h.db(t) / b + 2 * h.c(t) - 2 * d) * B1 +
                         4 * (h.a(t) * b - h.c(t) * d - 0.5 * (d * h.db(t) / b - h.dd(t))) * B;
        CHECK(std::abs(r) < 1e-8 * (std::abs(B2) + std::abs(B1) + std::abs(B)));
        CHECK(std::abs(P.B(t) - B) < 1e-10);
    }
    const auto sho = make_preset(PresetId::sho);
    CHECK_THROWS_AS(LinearInvariant(solve_characteristic(sho, 1.0, 0.0, 3.0), 0.0).second_order_residual_B(1.0),
                    DomainError);
}

TEST_CASE("quadratic invariant coefficients") {
    const auto sho = make_preset(PresetId::sho);
    const QuadraticInvariant e = quadratic_from_kappa(sho, solve_ermakov(sho, 1.0, 1.0, 0.0, 3.0));
    for (double t : {0.0, 1.0, 2.5}) {
        CHECK(e.Aq(t) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(e.Bq(t) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(e.Cq(t)) < 1e-10);
    }
    const auto ck = make_preset(PresetId::caldirola_kanai);
    const QuadraticInvariant q = quadratic_from_kappa(ck, solve_ermakov(ck, 1.0, 1.0, 0.1, 3.0));
    CHECK(worst_residual(q.kappa_source().nodes(), 3.0, [&](double t) { return q.residuals(t); }) < 1e-8);
    const auto skew = make_preset(PresetId::skew);
    const QuadraticInvariant s = quadratic_from_kappa(skew, solve_ermakov(skew, 2.0, 1.0, 0.4, 3.0));
    CHECK(worst_residual(s.kappa_source().nodes(), 3.0, [&](double t) { return s.residuals(t); }) < 1e-8);
    for (double t : s.kappa_source().nodes()) {
        const double k = s.kappa_source().kappa(t);
        CHECK(rel(s.Aq(t) / (k * k), lambda_factor(skew, t)) < 1e-10);
    }
    const QuadraticInvariant rep(solve_ermakov(sho, -0.5, 1.0, 0.0, 0.5));
    CHECK_THROWS_AS(rep.ladder_data(0.2), ModeError);
    CHECK_NOTHROW(rep.apply(0.2, testutil::gaussian(g)));
}

TEST_CASE("Pinney superposition") {
    const auto sho = make_preset(PresetId::sho);
    const ErmakovSolution cs = solve_ermakov(sho, 0.0, 1.0, 0.0, 3.0);
    const ErmakovSolution sn = solve_ermakov(sho, 0.0, 0.0, 1.0, 3.0);
    const ErmakovSolution one = pinney(sho, cs, sn, 1, 1, 0);
    CHECK(one.c0() == doctest::Approx(1.0).epsilon(1e-14));
    for (double t : {0.3, 1.7, 3.0}) CHECK(std::abs(one.kappa(t) - 1.0) < 1e-10);

    const ErmakovSolution p = pinney(sho, cs, sn, 4, 0.25, 0);
    CHECK(p.c0() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(p.kappa(pi / 2) - 0.5) < 1e-9);
    const ErmakovSolution d = solve_ermakov(sho, 1.0, 2.0, 0.0, 3.0);
    for (int i = 0; i <= 100; ++i) {
        const double t = 3.0 * i / 100;
        CHECK(rel(p.kappa(t), d.kappa(t)) < 1e-6);
    }

    // C3^2 = C1 C2: perfect square, C0 = 0.
    const ErmakovSolution sq = pinney(sho, cs, sn, 1, 4, 2);
    CHECK(sq.c0() == 0.0);
    CHECK(std::abs(sq.kappa(0.5) - std::abs(std::cos(0.5) + 2 * std::sin(0.5))) < 1e-9);

    CHECK_THROWS_AS(pinney(sho, cs, cs, 1, 1, 0), UsageError);
    CHECK_THROWS_AS(pinney(sho, cs, sn, 1, -1, 0), DomainError);
    CHECK_THROWS_AS(pinney(sho, cs, d, 1, 1, 0), UsageError);

    for (PresetId id : all_presets()) {
        CAPTURE(preset_name(id));
        const auto h = make_preset(id);
        const ErmakovSolution k1 = solve_ermakov(h, 0.0, 1.0, 0.0, 3.0);
        const ErmakovSolution k2 = solve_ermakov(h, 0.0, 0.0, 1.0, 3.0);
        CHECK(aux_worst(pinney(h, k1, k2, 2.0, 1.5, 0.5)) < 1e-7);
    }
}

TEST_CASE("linear-quadratic decomposition") {
    for (PresetId id : all_presets()) {
        CAPTURE(preset_name(id));
        const auto h = make_preset(id);
        const CharacteristicSolution m1 = solve_characteristic(h, 1.0, 0.0, 3.0);
        const CharacteristicSolution m2 = solve_characteristic(h, 0.0, 1.0, 3.0);
        const ErmakovSolution k = decompose_quadratic(h, m1, m2, 2.0, 1.5, 0.5);
        const ErmakovSolution viap = pinney(h, kappa_from_mu(m1), kappa_from_mu(m2), 2.0, 1.5, 0.5);
        CHECK(aux_worst(k) < 1e-7);
        CHECK(rel(k.c0(), viap.c0()) < 1e-10);
        for (double t : {0.0, 0.9, 2.1, 3.0}) CHECK(rel(k.kappa(t), viap.kappa(t)) < 1e-10);
        if (h.c(0.0) == h.d(0.0)) {
            const ErmakovSolution direct = pinney(h, solve_ermakov(h, 0.0, 1.0, 0.0, 3.0),
                                                  solve_ermakov(h, 0.0, 0.0, 1.0, 3.0), 2.0, 1.5, 0.5);
            for (double t : {0.7, 2.2}) CHECK(rel(k.kappa(t), direct.kappa(t)) < 1e-8);
        }
    }
    const auto skew = make_preset(PresetId::skew);
    const CharacteristicSolution m1 = solve_characteristic(skew, 1.0, 0.0, 1.0);
    const CharacteristicSolution m2 = solve_characteristic(skew, 0.0, 1.0, 1.0);
    const ErmakovSolution single = decompose_quadratic(skew, m1, m2, 1, 0, 0);
    CHECK(single.c0() == 0.0);
    CHECK(rel(single.kappa(0.8), m1.mu(0.8) / m1.lambda(0.8)) < 1e-12);
}

TEST_CASE("general superposition") {
    const auto sho = make_preset(PresetId::sho);
    const ErmakovSolution u = solve_ermakov(sho, 1.0, 1.0, 0.0, 3.0);
    const ErmakovSolution id = general_superposition(sho, u, solve_ermakov(sho, 2.0, 1.3, 0.1, 3.0), 1, 0);
    CHECK(id.c0() == 1.0);
    CHECK(rel(id.kappa(1.4), u.kappa(1.4)) < 1e-14);
    const ErmakovSolution two = general_superposition(sho, u, u, 1, 1);
    CHECK(two.c0() == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::abs(two.kappa(2.0) - std::sqrt(2.0)) < 1e-9);
    CHECK(std::abs(two.kappa(2.0) - 4.0 / std::pow(two.kappa(2.0), 3)) < 1e-8);

    const auto par = make_preset(PresetId::parametric);
    const ErmakovSolution e1 = solve_ermakov(par, 1.0, 1.0, 0.0, 3.0);
    const ErmakovSolution e2 = solve_ermakov(par, 2.0, 1.5, 0.3, 3.0);
    const ErmakovSolution s = general_superposition(par, e1, e2, 1.0, 0.5);
    CHECK(aux_worst(s) < 1e-7);
    CHECK_THROWS_AS(general_superposition(par, e1, e2, -1.0, 0.1), DomainError);
}

TEST_CASE("Ermakov invariant") {
    const auto sho = make_preset(PresetId::sho);
    const ErmakovSolution sn = solve_ermakov(sho, 0.0, 0.0, 1.0, 3.0);
    const ErmakovSolution one = solve_ermakov(sho, 1.0, 1.0, 0.0, 3.0);
    for (double t : {0.0, 0.5, 1.5, 3.0}) CHECK(std::abs(ermakov_invariant(sho, sn, one, t) - 1.0) < 1e-9);
    const ErmakovSolution k = solve_ermakov(sho, 1.0, 1.7, 0.4, 3.0);
    CHECK(ermakov_invariant(sho, sn, k, 0.0) == doctest::Approx(std::pow(1.0 * 1.7 / 1.0, 2)).epsilon(1e-14));

    const auto par = make_preset(PresetId::parametric);
    const ErmakovSolution h1 = solve_ermakov(par, 0.0, 1.0, 0.3, 3.0);
    const ErmakovSolution kk = solve_ermakov(par, 1.0, 1.2, -0.1, 3.0);
    const double i0 = ermakov_invariant(par, h1, kk, 0.0);
    for (double t : kk.nodes()) CHECK(rel(ermakov_invariant(par, h1, kk, t), i0) < 1e-8);
}

TEST_CASE("Wronskian identities at dense nodes") {
    const auto sho = make_preset(PresetId::sho);
    const ErmakovSolution k1 = solve_ermakov(sho, 1.0, 1.0, 0.0, 3.0);
    const ErmakovSolution k2 = pinney(sho, solve_ermakov(sho, 0.0, 1.0, 0.0, 3.0),
                                      solve_ermakov(sho, 0.0, 0.0, 1.0, 3.0), 4, 1, 0);
    CHECK(k2.c0() == 4.0);
    for (PresetId id : {PresetId::sho, PresetId::parametric, PresetId::skew}) {
        CAPTURE(preset_name(id));
        const auto h = make_preset(id);
        const ErmakovSolution a = id == PresetId::sho ? k1 : solve_ermakov(h, 1.0, 1.0, 0.0, 3.0);
        const ErmakovSolution b = id == PresetId::sho ? k2 : solve_ermakov(h, 2.0, 1.5, 0.3, 3.0);
        const double c = wronskian_identities(h, a, b, 0.0).constant;
        for (int i = 0; i < 200; ++i) {
            const double t = 3.0 * (i + 0.5) / 200;
            const WronskianResiduals r = wronskian_identities(h, a, b, t);
            CHECK(std::abs(r.abel) < 1e-7);
            CHECK(std::abs(r.another) < 1e-7);
            CHECK(rel(r.constant, c) < 1e-7);
        }
    }
}

TEST_CASE("pairing conservation for linear and quadratic invariants") {
    const auto ts = pairing_times();
    for (PresetId id : all_presets()) {
        CAPTURE(preset_name(id));
        const auto h = make_preset(id);
        const LinearInvariant P(solve_characteristic(h, 1.0, 0.0, 1.5), 0.3);
        const QuadraticInvariant E(solve_ermakov(h, 1.0, 1.0, 0.0, 1.5));
        CHECK(pairing_drift(h, [&](double t, const WaveFunction& f) { return P.apply(t, f); }, ts) < 1e-5);
        CHECK(pairing_drift(h, [&](double t, const WaveFunction& f) { return E.apply(t, f); }, ts) < 1e-5);
    }
}

TEST_CASE("modified product and simplest invariant on the skew preset") {
    const auto h = make_preset(PresetId::skew);
    const auto ts = pairing_times();
    const LinearInvariant P1(solve_characteristic(h, 1.0, 0.0, 1.5), 0.0);
    const LinearInvariant P2(solve_characteristic(h, 0.0, 1.0, 1.5), 0.2);
    const auto lam = [&](double t) { return P1.source().lambda(t); };
    CHECK(pairing_drift(h, [&](double t, const WaveFunction& f) {
        return cplx(1.0 / lam(t)) * P1.apply(t, P2.apply(t, f));
    }, ts) < 1e-5);
    CHECK(pairing_drift(h, [&](double t, const WaveFunction& f) { return cplx(lam(t)) * f; }, ts) < 1e-5);
    // Without the compensating factor the plain product drifts.
    CHECK(pairing_drift(h, [&](double t, const WaveFunction& f) { return P1.apply(t, P2.apply(t, f)); }, ts) > 1e-2);
}

TEST_CASE("rescaled invariant image solves the same equation") {
    const auto h = make_preset(PresetId::skew);
    const LinearInvariant P(solve_characteristic(h, 1.0, 0.3, 1.0), 0.0);
    const double t0 = 0.5;
    OracleConfig base;
    base.dt = 1e-3;
    const WaveFunction psi0 = evolve_oracle(h, testutil::gaussian(g, 0.2, 1.0, 0.3), t0, base);
    const auto tilde = [&](double t, const WaveFunction& f) {
        return cplx(1.0 / P.source().lambda(t)) * P.apply(t, f);
    };
    std::vector<double> errs;
    for (double dt : {0.04, 0.02, 0.01}) {
        OracleConfig one;
        one.dt = dt;
        const WaveFunction psi1 = evolve_oracle(h, psi0, t0 + dt, one, t0);
        const WaveFunction stepped = evolve_oracle(h, tilde(t0, psi0), t0 + dt, one, t0);
        errs.push_back(l2_distance(tilde(t0 + dt, psi1), stepped));
    }
    MESSAGE("local errors " << errs[0] << " " << errs[1] << " " << errs[2]);
    CHECK(errs[2] < 1e-5);
    CHECK(errs[0] / errs[1] > 6.0);
    CHECK(errs[1] / errs[2] > 6.0);
}
