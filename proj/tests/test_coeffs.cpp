#include "doctest.h"

#include <cmath>
#include <numbers>

#include "quadinv/coeffs.hpp"
#include "quadinv/errors.hpp"
#include "quadinv/expr.hpp"

using namespace quadinv;

TEST_CASE("tau and sigma for the constant presets") {
    for (double t : {0.0, 0.7, 2.5}) {
        auto sho = tau_sigma(make_preset(PresetId::sho), t);
        CHECK(sho.tau == doctest::Approx(0.0));
        CHECK(sho.sigma == doctest::Approx(0.25));
        auto fr = tau_sigma(make_preset(PresetId::free), t);
        CHECK(fr.tau == 0.0);
        CHECK(fr.sigma == 0.0);
        auto ck = tau_sigma(make_preset(PresetId::caldirola_kanai), t);
        CHECK(ck.tau == doctest::Approx(-0.2).epsilon(1e-14));
        CHECK(ck.sigma == doctest::Approx(0.25).epsilon(1e-14));
    }
}

TEST_CASE("sigma regularisation agrees with the quotient form where c != 0") {
    std::vector<CoefficientSet> sets;
    for (PresetId id : all_presets()) sets.push_back(make_preset(id));
    sets.push_back(make_inline_coefficients("0.5*exp(-0.1*t)", "0.5", "0.3 + 0.1*sin(t)", "0.1"));
    for (const auto& h : sets) {
        for (int k = 0; k < 100; ++k) {
            const double t = h.t_max() * k / 99.0;
            const auto [tau, sigma] = tau_sigma(h, t);
            REQUIRE(std::isfinite(tau));
            REQUIRE(std::isfinite(sigma));
            const double c = h.c(t);
            if (c != 0.0) {
                const double quotient = h.a(t) * h.b(t) - c * h.d(t) +
                                        0.5 * c * (h.da(t) / h.a(t) - h.dc(t) / c);
                CHECK(std::abs(sigma - quotient) <= 1e-12 * std::max(1.0, std::abs(quotient)));
            }
        }
    }
}

TEST_CASE("lambda factor") {
    CHECK(lambda_factor(make_preset(PresetId::skew), 0.0) == 1.0);
    for (PresetId id : {PresetId::free, PresetId::sho, PresetId::parametric, PresetId::caldirola_kanai})
        CHECK(lambda_factor(make_preset(id), 1.3) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(lambda_factor(make_preset(PresetId::skew), 2.0) ==
          doctest::Approx(std::exp(0.4)).epsilon(1e-11));
    const auto h = make_inline_coefficients("0.5", "0.5", "cos(t)", "0", 2.0);
    CHECK(lambda_factor(h, std::numbers::pi / 2) == doctest::Approx(std::exp(1.0)).epsilon(1e-10));
}

TEST_CASE("domain checks") {
    const auto h = make_preset(PresetId::sho);
    CHECK_THROWS_AS(tau_sigma(h, 3.5), DomainError);
    CHECK_THROWS_AS(tau_sigma(h, -0.1), DomainError);
    CHECK_THROWS_AS(lambda_factor(h, 4.0), DomainError);
    CHECK_THROWS_AS(make_inline_coefficients("cos(t)", "1", "0", "0"), DomainError);
    CHECK_THROWS_AS(make_inline_coefficients("0", "1", "0", "0"), DomainError);
}

TEST_CASE("preset catalogue") {
    for (PresetId id : all_presets()) {
        auto parsed = parse_preset(preset_name(id));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == id);
        CHECK(make_preset(id).t_max() == default_t_max);
    }
    CHECK_FALSE(parse_preset("duffing").has_value());
    const auto p = make_preset(PresetId::parametric);
    CHECK(p.b(0.0) == doctest::Approx(0.6));
    CHECK(p.db(1.0) == doctest::Approx(-0.1 * std::sin(1.0)));
    const auto ck = make_preset(PresetId::caldirola_kanai);
    CHECK(ck.da(1.0) == doctest::Approx(-0.1 * std::exp(-0.2)));
}

TEST_CASE("inline expression values and derivatives") {
    struct Case {
        const char* text;
        std::function<double(double)> f, df;
    };
    const std::vector<Case> cases{
        {"0.5", [](double) { return 0.5; }, [](double) { return 0.0; }},
        {"const(-2)", [](double) { return -2.0; }, [](double) { return 0.0; }},
        {"poly(1, 2, 3)", [](double t) { return 1 + 2 * t + 3 * t * t; },
         [](double t) { return 2 + 6 * t; }},
        {"0.5*exp(-0.2*t)", [](double t) { return 0.5 * std::exp(-0.2 * t); },
         [](double t) { return -0.1 * std::exp(-0.2 * t); }},
        {"(1 + 0.2*cos(t))*0.5", [](double t) { return 0.5 + 0.1 * std::cos(t); },
         [](double t) { return -0.1 * std::sin(t); }},
        {"sin(2t) * t - -t", [](double t) { return std::sin(2 * t) * t + t; },
         [](double t) { return 2 * std::cos(2 * t) * t + std::sin(2 * t) + 1; }},
        {"exp(t)*cos(3*t)", [](double t) { return std::exp(t) * std::cos(3 * t); },
         [](double t) { return std::exp(t) * (std::cos(3 * t) - 3 * std::sin(3 * t)); }},
    };
    for (const auto& c : cases) {
        CAPTURE(c.text);
        const TimeFunction tf = parse_time_function(c.text);
        for (double t : {0.0, 0.4, 1.7}) {
            CHECK(tf.value(t) == doctest::Approx(c.f(t)).epsilon(1e-14));
            CHECK(tf.derivative(t) == doctest::Approx(c.df(t)).epsilon(1e-14));
        }
    }
}

TEST_CASE("inline expression errors name the column") {
    CHECK_THROWS_AS(parse_time_function("exp("), UsageError);
    CHECK_THROWS_AS(parse_time_function("tan(t)"), UsageError);
    CHECK_THROWS_AS(parse_time_function("cos(t*t)"), UsageError);
    CHECK_THROWS_AS(parse_time_function("1 +"), UsageError);
    try {
        parse_time_function("1 + foo");
        FAIL("expected an error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("column 5") != std::string::npos);
    }
}
