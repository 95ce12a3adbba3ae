#include "doctest.h"

#include <cmath>
#include <numbers>

#include "quadinv/errors.hpp"
#include "quadinv/special.hpp"

using namespace quadinv;

TEST_CASE("Hermite polynomials") {
    for (double x : {-1.3, 0.0, 0.7}) {
        CHECK(hermite(0, x) == 1.0);
        CHECK(hermite(1, x) == 2.0 * x);
    }
    CHECK(hermite(2, 1.0) == 2.0);
    CHECK(hermite(3, 0.5) == -5.0);
    for (int n = 0; n <= 20; ++n)
        for (double x : {0.25, 1.0, 2.2, 3.0}) {
            const double s = n % 2 == 0 ? 1.0 : -1.0;
            CHECK(std::abs(hermite(n, -x) - s * hermite(n, x)) <= 1e-12 * std::max(1.0, std::abs(hermite(n, x))));
        }
    CHECK_THROWS_AS(hermite(-1, 0.0), UsageError);
    CHECK_THROWS_AS(hermite(hermite_max_degree + 1, 0.0), UsageError);
}

TEST_CASE("Hermite functions are orthonormal") {
    // Trapezoid rule is spectrally accurate for these decaying integrands.
    const int n_pts = 4001;
    const double L = 20.0, dx = 2 * L / (n_pts - 1);
    for (int m : {0, 3, 10, 40})
        for (int n : {0, 3, 10, 40}) {
            double s = 0.0;
            for (int i = 0; i < n_pts; ++i) {
                const double x = -L + i * dx;
                s += hermite_function(m, x) * hermite_function(n, x);
            }
            CHECK(std::abs(s * dx - (m == n ? 1.0 : 0.0)) < 1e-12);
        }
    const auto all = hermite_functions(12, 0.8);
    CHECK(all.size() == 13);
    CHECK(all[7] == doctest::Approx(hermite_function(7, 0.8)).epsilon(1e-15));
    const double h5 = hermite(5, 0.8) * std::exp(-0.32) / std::sqrt(32.0 * 120.0 * std::sqrt(std::numbers::pi));
    CHECK(hermite_function(5, 0.8) == doctest::Approx(h5).epsilon(1e-13));
}

TEST_CASE("Gauss transform of Hermite polynomials") {
    const double rpi = std::sqrt(std::numbers::pi);
    for (double lam : {1.5, 2.0}) {
        const GaussTransform g0 = gauss_transform(0, lam, 1.0, 0.4);
        CHECK(g0.lhs == doctest::Approx(rpi / lam).epsilon(1e-12));
        CHECK(g0.rhs == doctest::Approx(rpi / lam).epsilon(1e-14));
        const GaussTransform g1 = gauss_transform(1, lam, 0.8, 0.4);
        CHECK(g1.lhs == doctest::Approx(2 * 0.8 * 0.4 * rpi / lam).epsilon(1e-12));
        CHECK(g1.rhs == doctest::Approx(2 * 0.8 * 0.4 * rpi / lam).epsilon(1e-14));
    }
    const GaussTransform g4 = gauss_transform(4, 2.0, 1.0, 0.3);
    CHECK(std::abs(g4.lhs - g4.rhs) / std::abs(g4.rhs) < 1e-8);

    for (int n = 0; n <= 10; ++n)
        for (double lam : {1.5, 2.0, 3.0})
            for (double x : {0.0, 0.3, -0.3, 1.0, -1.0}) {
                const GaussTransform r = gauss_transform(n, lam, 1.0, x);
                CAPTURE(n);
                CAPTURE(lam);
                CAPTURE(x);
                // Odd n at x = 0 vanishes on both sides.
                if (n % 2 == 1 && x == 0.0)
                    CHECK(std::abs(r.lhs) < 1e-12);
                else
                    CHECK(std::abs(r.lhs - r.rhs) <= 1e-8 * std::abs(r.rhs));
            }

    CHECK_THROWS_AS(gauss_transform(2, 1.0, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(gauss_transform(2, 0.5, 1.0, 0.0), DomainError);
}
