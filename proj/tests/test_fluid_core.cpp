#include <doctest.h>

#include <numeric>

#include "sqdn/drift.hpp"
#include "sqdn/fluid_state.hpp"
#include "support.hpp"

using namespace sqdn;
using namespace sqdn::testing;

TEST_SUITE("fluid-core") {

TEST_CASE("triangular layout") {
    TriangularArray a(4);
    CHECK(a.size() == 15);
    CHECK(TriangularArray::size_for(20) == 231);
    std::size_t expect = 0;
    for (int i = 0; i <= 4; ++i) {
        for (int j = i; j <= 4; ++j) CHECK(a.offset(i, j) == expect++);
    }
    CHECK_THROWS_AS(a.at(2, 1), InvalidArgument);
    CHECK_THROWS_AS(a.at(0, 5), InvalidArgument);
    CHECK_THROWS_AS(a.at(-1, 0), InvalidArgument);
}

TEST_CASE("params validation names the field") {
    ModelParams p{0.5, 2, 20};
    CHECK_NOTHROW(p.validate());
    auto message = [](ModelParams q) {
        try {
            q.validate();
        } catch (const InvalidArgument& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message({1.2, 2, 20}).find("lambda") != std::string::npos);
    CHECK(message({0.0, 2, 20}).find("lambda") != std::string::npos);
    CHECK(message({0.5, 0, 20}).find("d") != std::string::npos);
    CHECK(message({0.5, 2, 1}).find("buffer") != std::string::npos);
}

TEST_CASE("state validity") {
    auto x = FluidState::all_idle(3);
    CHECK(x.valid());
    x(0, 0) = 0.5;
    CHECK_FALSE(x.valid());
    x(1, 2) = 0.5;
    CHECK(x.valid());
    x(1, 2) = 0.5 + 2e-9;
    CHECK_FALSE(x.valid());
    x(1, 2) = 0.6;
    x(0, 0) = -0.1;
    CHECK(x.violation().find("(0,0)") != std::string::npos);
    CHECK_THROWS_AS(x.require_valid(), InvalidArgument);
}

TEST_CASE("marginals") {
    FluidState x(3);
    x(0, 1) = 0.2;
    x(1, 1) = 0.3;
    x(1, 3) = 0.1;
    x(2, 2) = 0.4;
    MarginalView m(x);
    CHECK(m.row[0] == doctest::Approx(0.2));
    CHECK(m.row[1] == doctest::Approx(0.4));
    CHECK(m.row[2] == doctest::Approx(0.4));
    CHECK(m.col[1] == doctest::Approx(0.5));
    CHECK(m.col[3] == doctest::Approx(0.1));
    CHECK(m.mem_prefix[0] == 0.0);
    CHECK(m.mem_prefix[2] == doctest::Approx(0.9));
    CHECK(m.tail[0] == doctest::Approx(1.0));
    CHECK(m.tail[2] == doctest::Approx(0.4));
    CHECK(m.tail[3] == 0.0);
}

TEST_CASE("mass functionals") {
    auto mf = mass_functionals(FluidState::all_idle(5));
    CHECK(mf.ls == 0.0);
    CHECK(mf.lm == 0.0);
    FluidState x(5);
    x(0, 1) = 0.5;
    x(1, 1) = 0.5;
    mf = mass_functionals(x);
    CHECK(mf.ls == doctest::Approx(0.5));
    CHECK(mf.lm == doctest::Approx(1.0));
}

TEST_CASE("distances") {
    FluidState a = FluidState::all_idle(3), b(3);
    b(0, 1) = 1.0;
    CHECK(euclidean_distance(a, b) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(euclidean_distance(a, FluidState(4)), InvalidArgument);
    const std::vector<double> v{0.1, -0.7, 0.3};
    CHECK(sup_norm(v) == doctest::Approx(0.7));
}

TEST_CASE("boundary rate R examples") {
    FluidState x(4);
    x(0, 0) = 0.05;
    x(0, 1) = 0.5;
    x(1, 1) = 0.45;
    for (int j = 0; j < 4; ++j) CHECK(boundary_rate_r(x, j, {0.45, 2, 4}) == 0.0);

    FluidState y(4);
    y(2, 2) = 1.0;
    CHECK(boundary_rate_r(y, 0, {0.5, 2, 4}) == doctest::Approx(0.5).epsilon(1e-15));

    FluidState z(4);
    z(0, 2) = 0.3;
    z(2, 2) = 0.7;
    CHECK(std::abs(boundary_rate_r(z, 0, {0.6, 2, 4}) - 0.24) < 1e-15);

    CHECK_THROWS_AS(boundary_rate_r(x, 4, {0.45, 2, 4}), InvalidArgument);
    CHECK_THROWS_AS(boundary_rate_r(x, -1, {0.45, 2, 4}), InvalidArgument);
}

TEST_CASE("boundary rate G examples") {
    FluidState x(4);
    x(0, 0) = 0.05;
    x(0, 1) = 0.5;
    x(1, 1) = 0.45;
    for (int j = 1; j < 4; ++j) CHECK(boundary_rate_g(x, j, {0.45, 2, 4}) == 0.0);

    FluidState y(4);
    y(2, 2) = 1.0;
    CHECK(boundary_rate_g(y, 1, {0.5, 2, 4}) == 0.0);

    FluidState z(4);
    z(1, 2) = 0.2;
    z(2, 2) = 0.8;
    CHECK(std::abs(boundary_rate_g(z, 1, {0.5, 2, 4}) - 0.2) < 1e-15);

    CHECK_THROWS_AS(boundary_rate_g(x, 0, {0.45, 2, 4}), InvalidArgument);
    CHECK_THROWS_AS(boundary_rate_g(x, 4, {0.45, 2, 4}), InvalidArgument);
}

TEST_CASE("drift vanishes at the low-load fixed point") {
    FluidState x(20);
    x(0, 0) = 0.05;
    x(0, 1) = 0.5;
    x(1, 1) = 0.45;
    const auto b = drift(x, {0.45, 2, 20});
    CHECK(sup_norm(b.values()) < 1e-12);
}

TEST_CASE("drift rejects bad input") {
    FluidState x(4);
    CHECK_THROWS_AS(drift(x, {0.45, 2, 4}), InvalidArgument);
    CHECK_THROWS_AS(drift(FluidState::all_idle(4), {0.45, 2, 5}), InvalidArgument);
    CHECK_THROWS_AS(drift(FluidState::all_idle(4), {1.5, 2, 4}), InvalidArgument);
}

TEST_CASE("drift from all idle") {
    const auto b = drift(FluidState::all_idle(5), {0.45, 2, 5});
    CHECK(b(0, 0) == doctest::Approx(-0.45));
    CHECK(b(1, 1) == doctest::Approx(0.45));
    CHECK(std::abs(std::accumulate(b.values().begin(), b.values().end(), 0.0)) < 1e-15);
}

TEST_CASE("drift with empty memory prefix routes arrivals through R and G") {
    // All servers observed at 2 while only some are busy: no memory at 0 or 1.
    FluidState x(4);
    x(0, 2) = 0.3;
    x(2, 2) = 0.7;
    const ModelParams p{0.6, 2, 4};
    CHECK(boundary_rate_r(x, 0, p) == doctest::Approx(0.24));
    CHECK(boundary_rate_r(x, 1, p) == 0.0);  // 1 - 2(2*0.3) < 0
    CHECK(boundary_rate_g(x, 1, p) == 0.0);  // 2(2*0.3) > 1
    CHECK(boundary_rate_r(x, 2, p) == 0.0);  // column 2 holds mass
    const auto b = drift(x, p);
    double total = 0.0;
    for (double v : b.values()) total += v;
    CHECK(std::abs(total) < 1e-12);
}

// ---------------------------------------------------------------------------
// properties

TEST_CASE("property: drift conserves mass on random simplex points") {
    Rng rng(20240601);
    std::uniform_real_distribution<double> lam(0.01, 0.99);
    std::uniform_int_distribution<int> dd(1, 6), cap(2, 12);
    for (int n = 0; n < 1000; ++n) {
        const ModelParams p{lam(rng), dd(rng), cap(rng)};
        FluidState x;
        if (n % 2 == 0) {
            x = random_simplex(p.buffer, rng);
        } else {
            std::uniform_int_distribution<int> k(0, p.buffer - 1);
            x = random_with_empty_prefix(p.buffer, k(rng), rng);
        }
        const auto b = drift(x, p);
        double total = 0.0;
        for (double v : b.values()) total += v;
        REQUIRE(std::abs(total) < 1e-12);
    }
}

TEST_CASE("property: boundary rates vanish and drift is linear when x00 > 0") {
    Rng rng(7);
    std::uniform_real_distribution<double> lam(0.01, 0.99);
    std::uniform_int_distribution<int> dd(1, 5), cap(2, 10);
    for (int n = 0; n < 1000; ++n) {
        const ModelParams p{lam(rng), dd(rng), cap(rng)};
        const auto x = random_with_idle_floor(p.buffer, 1e-6, rng);
        for (int j = 0; j < p.buffer; ++j) REQUIRE(boundary_rate_r(x, j, p) == 0.0);
        for (int j = 1; j < p.buffer; ++j) REQUIRE(boundary_rate_g(x, j, p) == 0.0);
        REQUIRE(max_abs_diff(drift(x, p), linear_drift(x, p.lambda, p.d)) < 1e-12);
    }
}

TEST_CASE("property: R_j in [0, lambda]") {
    Rng rng(11);
    std::uniform_real_distribution<double> lam(0.01, 0.99);
    std::uniform_int_distribution<int> dd(1, 6);
    const int cap = 8;
    for (int n = 0; n < 1000; ++n) {
        const ModelParams p{lam(rng), dd(rng), cap};
        std::uniform_int_distribution<int> k(-1, cap - 1);
        const int empty = k(rng);
        const auto x = empty < 0 ? random_simplex(cap, rng) : random_with_empty_prefix(cap, empty, rng);
        for (int j = 0; j < cap; ++j) {
            const double r = boundary_rate_r(x, j, p);
            REQUIRE(r >= 0.0);
            REQUIRE(r <= p.lambda);
        }
    }
}

TEST_CASE("property: R_j does not increase when low-row mass grows") {
    Rng rng(13);
    const int cap = 8;
    std::uniform_real_distribution<double> lam(0.05, 0.95), u(0.0, 1.0);
    std::uniform_int_distribution<int> dd(1, 4), jj(0, cap - 2);
    for (int n = 0; n < 1000; ++n) {
        const ModelParams p{lam(rng), dd(rng), cap};
        const int j = jj(rng);
        auto x = random_with_empty_prefix(cap, j, rng);
        // Move mass from a row above j to row i <= j, keeping columns <= j empty.
        std::uniform_int_distribution<int> ii(0, j), col(j + 1, cap);
        const int i = ii(rng);
        const int c = col(rng);
        int donor_row = -1, donor_col = -1;
        for (int r = j + 1; r <= cap && donor_row < 0; ++r) {
            for (int cc = r; cc <= cap; ++cc) {
                if (x(r, cc) > 0.0) {
                    donor_row = r;
                    donor_col = cc;
                    break;
                }
            }
        }
        if (donor_row < 0) continue;
        const double before = boundary_rate_r(x, j, p);
        const double delta = u(rng) * x(donor_row, donor_col);
        x(donor_row, donor_col) -= delta;
        x(i, c) += delta;
        REQUIRE(boundary_rate_r(x, j, p) <= before + 1e-15);
    }
}

TEST_CASE("property: L_M >= L_S") {
    Rng rng(17);
    for (int n = 0; n < 1000; ++n) {
        const auto x = random_simplex(2 + n % 15, rng);
        const auto mf = mass_functionals(x);
        REQUIRE(mf.lm >= mf.ls - 1e-15);
    }
}

TEST_CASE("property: marginals sum to one") {
    Rng rng(19);
    for (int n = 0; n < 200; ++n) {
        const auto x = random_simplex(2 + n % 10, rng);
        MarginalView m(x);
        REQUIRE(std::accumulate(m.row.begin(), m.row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        REQUIRE(std::accumulate(m.col.begin(), m.col.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

}
