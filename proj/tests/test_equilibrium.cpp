#include <doctest.h>

#include <cmath>

#include "sqdn/drift.hpp"
#include "sqdn/equilibrium.hpp"
#include "support.hpp"

using namespace sqdn;
using namespace sqdn::testing;

namespace {

bool near_threshold(double lambda, int d) {
    for (int n = 1; n < 60; ++n) {
        if (std::abs(lambda - lambda_star(n, d)) < 1e-12) return true;
    }
    return false;
}

}  // namespace

TEST_SUITE("equilibrium") {

TEST_CASE("j* examples") {
    CHECK(j_star({0.45, 2, 20}) == 0);
    CHECK(j_star({0.995, 2, 20}) == 4);
    CHECK(j_star({0.9, 2, 20}) == 2);
    for (double l = 0.01; l < 0.5; l += 0.01) CHECK(j_star({l, 2, 20}) == 0);
}

TEST_CASE("lambda_n* examples") {
    CHECK(lambda_star(0, 2) == 0.0);
    for (int d = 1; d <= 6; ++d) CHECK(lambda_star(1, d) == 1.0 - 1.0 / d);
    CHECK(std::abs(lambda_star(2, 2) - std::sqrt(0.75)) < 1e-12);
    for (int d = 2; d <= 5; ++d) {
        const double closed = 0.5 - 1.0 / d + std::sqrt(0.25 + 1.0 / d);
        CHECK(std::abs(lambda_star(2, d) - closed) < 1e-12);
    }
    CHECK_THROWS_AS(lambda_star(-1, 2), InvalidArgument);
    CHECK_THROWS_AS(lambda_star(1, 0), InvalidArgument);
}

TEST_CASE("lambda_n* solves its polynomial and increases in n") {
    for (int d = 2; d <= 5; ++d) {
        double prev = 0.0;
        for (int n = 1; n <= 12; ++n) {
            const double z = lambda_star(n, d);
            CHECK(z > prev);
            CHECK(z < 1.0);
            auto g = [&](double y) { return (1 - y) * std::pow(y * d + 1, n) - 1.0; };
            CHECK(g(z - 1e-12) > 0.0);
            CHECK(g(z + 1e-12) < 0.0);
            prev = z;
        }
    }
}

TEST_CASE("low-load fixed point") {
    const auto rep = fixed_point({0.45, 2, 20});
    CHECK(rep.jstar == 0);
    CHECK(std::abs(rep.fixed_point(0, 0) - 0.05) < 1e-12);
    CHECK(std::abs(rep.fixed_point(0, 1) - 0.5) < 1e-12);
    CHECK(std::abs(rep.fixed_point(1, 1) - 0.45) < 1e-12);
    CHECK_FALSE(rep.x_jj.has_value());
    CHECK(rep.residual < 1e-9);
    CHECK(std::abs(rep.lm - rep.ls - 0.5) < 1e-12);
    CHECK(rep.ls == doctest::Approx(0.45));
}

TEST_CASE("fixed point at lambda=0.9, d=2") {
    const auto rep = fixed_point({0.9, 2, 20});
    const auto& x = rep.fixed_point;
    CHECK(rep.jstar == 2);
    const double x02 = (2.8 * 0.1 - 1.0 / (2.8 * 2.8)) / 1.8;
    CHECK(std::abs(x(0, 2) - x02) < 1e-12);
    CHECK(x(0, 2) == doctest::Approx(0.0846939).epsilon(1e-6));
    CHECK(x(0, 3) == doctest::Approx(0.0153061).epsilon(1e-5));
    CHECK(std::abs(x(2, 2) + x(3, 3) - 1.8 / 2.8) < 1e-12);
    REQUIRE(rep.x_jj.has_value());
    CHECK(*rep.x_jj == doctest::Approx(x(2, 2)));
    CHECK(rep.residual < 1e-9);
}

TEST_CASE("equilibrium bounds examples") {
    auto b = equilibrium_bounds({0.45, 2, 20});
    CHECK(b.ls_lo == doctest::Approx(-0.5));
    CHECK(b.ls_hi == doctest::Approx(0.5));
    CHECK(b.lm_minus_ls == doctest::Approx(0.5));
    b = equilibrium_bounds({0.9, 2, 20});
    CHECK(b.ls_lo == doctest::Approx(1.5));
    CHECK(b.ls_hi == doctest::Approx(2.5));
    CHECK(b.lm_minus_ls == doctest::Approx(0.5));
    // The lower bound rises toward j* as d grows.
    double prev = -1.0;
    for (int d = 2; d <= 10; ++d) {
        const double lo = equilibrium_bounds({0.3, d, 20}).ls_lo;
        CHECK(lo > prev);
        prev = lo;
    }
}

TEST_CASE("errors") {
    CHECK_THROWS_AS(fixed_point({0.5, 2, 20}), BoundaryDegeneracy);
    CHECK_THROWS_AS(fixed_point({lambda_star(2, 3), 3, 20}), BoundaryDegeneracy);
    CHECK_THROWS_AS(fixed_point({0.995, 2, 5}), InvalidArgument);
    CHECK_NOTHROW(fixed_point({0.995, 2, 6}));
    CHECK_THROWS_AS(fixed_point({1.0, 2, 20}), InvalidArgument);
}

// ---------------------------------------------------------------------------
// properties

TEST_CASE("property: floor formula agrees with the threshold interval") {
    Rng rng(101);
    std::uniform_real_distribution<double> lam(1e-4, 0.9999);
    std::uniform_int_distribution<int> dd(2, 5);
    for (int n = 0; n < 200; ++n) {
        const double l = lam(rng);
        const int d = dd(rng);
        CAPTURE(l);
        CAPTURE(d);
        REQUIRE(j_star({l, d, 20}) == threshold_interval(l, d));
    }
}

TEST_CASE("property: fixed point structure over a load grid") {
    for (int d = 2; d <= 4; ++d) {
        for (double l : {0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99}) {
            if (near_threshold(l, d)) continue;
            const ModelParams p{l, d, 20};
            const auto rep = fixed_point(p);
            const auto& x = rep.fixed_point;
            const int js = rep.jstar;
            CAPTURE(l);
            CAPTURE(d);
            CHECK(sup_norm(drift(x, p).values()) < 1e-9);
            CHECK(std::abs(x.sum() - 1.0) < 1e-12);
            CHECK(std::abs(x(0, js) + x(0, js + 1) - (1.0 - l)) < 1e-12);
            for (int i = 0; i <= 20; ++i) {
                for (int j = i; j <= 20; ++j) {
                    if (j != js && j != js + 1) CHECK(std::abs(x(i, j)) <= 1e-12);
                    CHECK(x(i, j) >= 0.0);
                }
            }
            const auto b = equilibrium_bounds(p);
            CHECK(std::abs(rep.lm - rep.ls - 1.0 / d) < 1e-9);
            CHECK(rep.ls >= b.ls_lo - 1e-12);
            CHECK(rep.ls <= b.ls_hi + 1e-12);
        }
    }
}

TEST_CASE("property: F brackets its root inside each interval") {
    Rng rng(103);
    std::uniform_int_distribution<int> dd(2, 5);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    for (int n = 0; n < 200; ++n) {
        const int d = dd(rng);
        const int js = 1 + n % 5;
        const double lo = lambda_star(js, d), hi = lambda_star(js + 1, d);
        const double l = lo + u(rng) * (hi - lo);
        const ModelParams p{l, d, 30};
        REQUIRE(j_star(p) == js);
        CHECK(fixed_point_equation(1e-9, js, p) > 0.0);
        CHECK(fixed_point_equation(1.0, js, p) < 0.0);
    }
}

TEST_CASE("property: residual stays small for random loads and d") {
    Rng rng(107);
    std::uniform_real_distribution<double> lam(0.01, 0.995);
    std::uniform_int_distribution<int> dd(1, 6);
    for (int n = 0; n < 300; ++n) {
        const double l = lam(rng);
        const int d = dd(rng);
        if (near_threshold(l, d)) continue;
        const ModelParams p{l, d, j_star({l, d, 2}) + 3};
        const auto rep = fixed_point(p);
        CHECK(rep.residual < 1e-9);
        CHECK(rep.fixed_point.valid());
    }
}

}
