#include "quadsim/deadzone.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>
#include <vector>

using namespace quadsim;
using Catch::Approx;

namespace {

// Independent dense 4x4 solve: Gaussian elimination with partial pivoting.
// Deliberately avoids Eigen so it cannot share a code path with the library.
std::array<double, 4> solve4(std::array<std::array<double, 4>, 4> A, std::array<double, 4> b) {
    for (int col = 0; col < 4; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 4; ++r) {
            if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
        }
        std::swap(A[col], A[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < 4; ++r) {
            const double f = A[r][col] / A[col][col];
            for (int c = col; c < 4; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    std::array<double, 4> x{};
    for (int r = 3; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < 4; ++c) s -= A[r][c] * x[c];
        x[r] = s / A[r][r];
    }
    return x;
}

std::array<double, 4> oracle_lower_coeffs(double s1, double s2) {
    // p(-s1) = 0, p'(-s1) = 0, p(-s2) = -s2, p'(-s2) = 1
    std::array<std::array<double, 4>, 4> A{{
        {1.0, -s1, s1 * s1, -s1 * s1 * s1},
        {0.0, 1.0, -2.0 * s1, 3.0 * s1 * s1},
        {1.0, -s2, s2 * s2, -s2 * s2 * s2},
        {0.0, 1.0, -2.0 * s2, 3.0 * s2 * s2},
    }};
    return solve4(A, {0.0, 0.0, -s2, 1.0});
}

std::array<double, 4> oracle_upper_coeffs(double s1, double s2) {
    // p(s1) = 0, p'(s1) = 0, p(s2) = s2, p'(s2) = 1
    std::array<std::array<double, 4>, 4> A{{
        {1.0, s1, s1 * s1, s1 * s1 * s1},
        {0.0, 1.0, 2.0 * s1, 3.0 * s1 * s1},
        {1.0, s2, s2 * s2, s2 * s2 * s2},
        {0.0, 1.0, 2.0 * s2, 3.0 * s2 * s2},
    }};
    return solve4(A, {0.0, 0.0, s2, 1.0});
}

double poly(const std::array<double, 4>& c, double x) {
    return c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
}

double poly_slope(const std::array<double, 4>& c, double x) {
    return c[1] + 2.0 * c[2] * x + 3.0 * c[3] * x * x;
}

// Piecewise N3 oracle coded straight from the branch definition, with
// independently solved coefficients and plain power-form evaluation.
double oracle_n3(double x, double s1, double s2) {
    const auto cl = oracle_lower_coeffs(s1, s2);
    const auto cu = oracle_upper_coeffs(s1, s2);
    if (x < -s2) return x;
    if (x < -s1) return poly(cl, x);
    if (x <= s1) return 0.0;
    if (x < s2) return poly(cu, x);
    return x;
}

double fd_slope(const DeadzoneConfig& cfg, double x, double h = 1e-6) {
    return (eval(cfg, x + h) - eval(cfg, x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("N1 hard deadzone") {
    CHECK(eval_n1(0.01, 0.02) == 0.0);
    CHECK(eval_n1(0.05, 0.02) == 0.05);
    CHECK(eval_n1(-0.02, 0.02) == 0.0);  // boundary belongs to the deadzone
    CHECK(eval_n1(-0.5, 0.02) == -0.5);
    CHECK_THROWS_AS(eval_n1(1.0, -0.1), std::invalid_argument);

    SECTION("idempotent") {
        for (double x : {-1.0, -0.02, 0.0, 0.015, 0.3}) {
            CHECK(eval_n1(eval_n1(x, 0.02), 0.02) == eval_n1(x, 0.02));
        }
    }
}

TEST_CASE("N2 cubic-transition deadzone") {
    const double s1 = 0.02, alpha = 1.0;
    const double s2 = s1 + std::sqrt(1.0 / 3.0);

    CHECK(eval_n2(0.0, s1, alpha) == 0.0);
    CHECK(eval_n2(s2, s1, alpha) == Approx(std::pow(1.0 / 3.0, 1.5)).epsilon(1e-12));
    CHECK(eval_n2(1.0, s1, alpha) ==
          Approx(std::pow(1.0 / 3.0, 1.5) + (1.0 - s2)).epsilon(1e-12));
    CHECK_THROWS_AS(eval_n2(1.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(eval_n2(1.0, 0.02, -1.0), std::invalid_argument);

    SECTION("odd") {
        for (double x : {0.01, 0.3, 2.0}) {
            CHECK(eval_n2(-x, s1, alpha) == -eval_n2(x, s1, alpha));
        }
    }

    SECTION("linear tail has slope exactly 1 and constant bias") {
        const double bias = eval_n2(1.0, s1, alpha) - 1.0;
        for (double x : {0.7, 1.5, 3.0, 7.7, 10.0}) {
            CHECK(eval_n2(x, s1, alpha) - x == Approx(bias).margin(1e-12));
            CHECK(eval_n2(x + 1.0, s1, alpha) - eval_n2(x, s1, alpha) == Approx(1.0).margin(1e-13));
        }
    }
}

TEST_CASE("N3 cubic coefficient solve matches independent oracle") {
    SECTION("s1=0.02 s2=0.1") {
        const auto c = solve_cubic_coeffs(0.02, 0.1);

        // boundary conditions of the lower cubic
        CHECK(poly(c.lower, -0.02) == Approx(0.0).margin(1e-10));
        CHECK(poly_slope(c.lower, -0.02) == Approx(0.0).margin(1e-10));
        CHECK(poly(c.lower, -0.1) == Approx(-0.1).margin(1e-10));
        CHECK(poly_slope(c.lower, -0.1) == Approx(1.0).margin(1e-10));

        const auto cl_oracle = oracle_lower_coeffs(0.02, 0.1);
        const auto cu_oracle = oracle_upper_coeffs(0.02, 0.1);
        for (int i = 0; i < 4; ++i) {
            CHECK(c.lower[i] == Approx(cl_oracle[i]).margin(1e-12 * std::abs(cl_oracle[i]) + 1e-12));
            CHECK(c.upper[i] == Approx(cu_oracle[i]).margin(1e-12 * std::abs(cu_oracle[i]) + 1e-12));
        }

        // odd reflection between the two cubics
        CHECK(c.upper[0] == -c.lower[0]);
        CHECK(c.upper[1] == c.lower[1]);
        CHECK(c.upper[2] == -c.lower[2]);
        CHECK(c.upper[3] == c.lower[3]);
    }

    SECTION("s1=1 s2=2") {
        const auto c = solve_cubic_coeffs(1.0, 2.0);
        CHECK(poly(c.upper, 2.0) == Approx(2.0).margin(1e-10));
        CHECK(poly_slope(c.upper, 2.0) == Approx(1.0).margin(1e-10));
    }

    CHECK_THROWS_AS(solve_cubic_coeffs(0.1, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(solve_cubic_coeffs(0.2, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(solve_cubic_coeffs(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("N3 evaluation") {
    const auto cfg = DeadzoneConfig::n3(0.02, 0.1);

    CHECK(eval_n3(0.015, cfg) == 0.0);
    CHECK(eval_n3(0.25, cfg) == 0.25);
    CHECK(eval_n3(0.06, cfg) == Approx(poly(oracle_upper_coeffs(0.02, 0.1), 0.06)).margin(1e-14));

    SECTION("identity exactly at and beyond s2") {
        CHECK(eval_n3(0.1, cfg) == 0.1);
        CHECK(eval_n3(-0.1, cfg) == -0.1);
        CHECK(eval_n3(5.0, cfg) == 5.0);
    }

    SECTION("brute-force equivalence on 1e5 random inputs") {
        const auto cl = oracle_lower_coeffs(0.02, 0.1);
        const auto cu = oracle_upper_coeffs(0.02, 0.1);
        std::mt19937 rng(42);
        std::uniform_real_distribution<double> dist(-0.5, 0.5);
        for (int i = 0; i < 100000; ++i) {
            const double x = dist(rng);
            double want;
            if (x < -0.1) want = x;
            else if (x < -0.02) want = poly(cl, x);
            else if (x <= 0.02) want = 0.0;
            else if (x < 0.1) want = poly(cu, x);
            else want = x;
            REQUIRE(eval_n3(x, cfg) == Approx(want).margin(1e-12));
        }
    }
}

TEST_CASE("deadzone family properties") {
    const std::vector<DeadzoneConfig> variants = {
        DeadzoneConfig::n1(0.02),
        DeadzoneConfig::n2(0.02, 1.0),
        DeadzoneConfig::n3(0.02, 0.1),
    };

    for (const auto& cfg : variants) {
        INFO("variant " << to_string(cfg.variant));
        const double inner = cfg.variant == DeadzoneKind::N1 ? cfg.s : cfg.s1;

        SECTION(std::string("odd + bounded + deadzone-zero: ") + to_string(cfg.variant)) {
            std::mt19937 rng(7);
            std::uniform_real_distribution<double> dist(-10.0, 10.0);
            for (int i = 0; i < 100000; ++i) {
                const double x = dist(rng);
                const double y = eval(cfg, x);
                REQUIRE(eval(cfg, -x) == -y);     // exact oddness
                REQUIRE(std::abs(y) <= std::abs(x));
                if (std::abs(x) <= inner) REQUIRE(y == 0.0);
            }
        }

        SECTION(std::string("monotone on grid: ") + to_string(cfg.variant)) {
            double prev = eval(cfg, -10.0);
            for (int i = 1; i < 10000; ++i) {
                const double x = -10.0 + 20.0 * i / 9999.0;
                const double y = eval(cfg, x);
                REQUIRE(y >= prev);
                prev = y;
            }
        }
    }

    SECTION("C1 continuity at branch boundaries (N2, N3)") {
        const auto n2 = DeadzoneConfig::n2(0.02, 1.0);
        for (double b : {n2.s1, n2.s2, -n2.s1, -n2.s2}) {
            const double analytic = std::abs(b) == n2.s1 ? 0.0 : 1.0;
            CHECK(fd_slope(n2, b) == Approx(analytic).margin(1e-4));
        }
        const auto n3 = DeadzoneConfig::n3(0.02, 0.1);
        for (double b : {n3.s1, n3.s2, -n3.s1, -n3.s2}) {
            const double analytic = std::abs(b) == n3.s1 ? 0.0 : 1.0;
            CHECK(fd_slope(n3, b) == Approx(analytic).margin(1e-4));
        }
    }
}

TEST_CASE("deadzone apply") {
    CHECK(quadsim::apply(DeadzoneConfig::none(), std::vector<double>{0.01, -0.5}) ==
          std::vector<double>{0.01, -0.5});
    CHECK(quadsim::apply(DeadzoneConfig::n1(0.02), std::vector<double>{0.01, -0.5, 0.02}) ==
          std::vector<double>{0.0, -0.5, 0.0});
    CHECK(quadsim::apply(DeadzoneConfig::n3(0.02, 0.1), std::vector<double>{0.0, 0.3}) ==
          std::vector<double>{0.0, 0.3});

    SECTION("non-finite input names the offending index") {
        const std::vector<double> bad{0.0, std::nan(""), 1.0};
        CHECK_THROWS_WITH(quadsim::apply(DeadzoneConfig::n1(0.02), bad),
                          Catch::Matchers::ContainsSubstring("index 1"));
    }

    SECTION("Vec3 overload matches scalar eval") {
        const auto cfg = DeadzoneConfig::n2(0.02, 1.0);
        const Vec3 z(0.01, -0.3, 0.6);
        const Vec3 out = quadsim::apply(cfg, z);
        for (int i = 0; i < 3; ++i) CHECK(out(i) == eval(cfg, z(i)));
    }
}
