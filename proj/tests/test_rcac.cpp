#include "quadsim/rcac.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

using namespace quadsim;
using Catch::Approx;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Recorded {
    std::vector<VectorXd> z;
    std::vector<MatrixXd> phi;
    std::vector<VectorXd> u;
};

Recorded drive(Rcac& rcac, const std::vector<VectorXd>& zs, double dt) {
    Recorded rec;
    for (const auto& z : zs) {
        const VectorXd u = rcac.update(z, dt);
        rec.z.push_back(z);
        rec.phi.push_back(rcac.last_regressor());
        rec.u.push_back(u);
    }
    return rec;
}

// Offline solve of the same retrospective cost:
//   min sum_j ||Phi_f(j) theta - y(j)||^2 + (theta-theta0)^T (1/p0) (theta-theta0)
// over the steps the recursive update actually processed.
VectorXd batch_theta(const Recorded& rec, const RcacConfig& cfg, int warmup) {
    const int n = cfg.num_gains();
    const int nf = static_cast<int>(cfg.filter_coeffs.size());
    MatrixXd h = MatrixXd::Identity(n, n) / cfg.p0;
    VectorXd g = (cfg.theta0.size() ? cfg.theta0 : VectorXd::Zero(n)) / cfg.p0;
    for (int k = warmup; k < static_cast<int>(rec.z.size()); ++k) {
        MatrixXd phi_f = MatrixXd::Zero(cfg.channels, n);
        VectorXd y = -rec.z[static_cast<std::size_t>(k)];
        for (int i = 1; i <= nf; ++i) {
            const double c = cfg.filter_coeffs[static_cast<std::size_t>(i - 1)];
            phi_f += c * rec.phi[static_cast<std::size_t>(k - i)];
            y += c * rec.u[static_cast<std::size_t>(k - i)];
        }
        h += phi_f.transpose() * phi_f;
        g += phi_f.transpose() * y;
    }
    return h.ldlt().solve(g);
}

std::vector<VectorXd> synthetic_sequence(int steps, int channels, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<VectorXd> zs;
    for (int k = 0; k < steps; ++k) {
        VectorXd z(channels);
        for (int ch = 0; ch < channels; ++ch) {
            z(ch) = std::sin(0.05 * k + ch) + noise(rng);
        }
        zs.push_back(z);
    }
    return zs;
}

}  // namespace

TEST_CASE("regressor construction") {
    RcacConfig cfg;
    cfg.channels = 1;
    cfg.structure = GainStructure::PI;
    cfg.integrator_clamp = std::numeric_limits<double>::infinity();
    Rcac rcac(cfg);

    SECTION("integrator accumulates z*dt") {
        for (int k = 0; k < 3; ++k) rcac.update(VectorXd::Constant(1, 1.0), 0.004);
        CHECK(rcac.integrator()(0) == Approx(0.012).margin(1e-15));
        CHECK(rcac.last_regressor()(0, 0) == 1.0);
        CHECK(rcac.last_regressor()(0, 1) == Approx(0.012).margin(1e-15));
    }

    SECTION("integrator saturates at the clamp") {
        RcacConfig clamped = cfg;
        clamped.integrator_clamp = 0.01;
        Rcac r2(clamped);
        for (int k = 0; k < 10; ++k) r2.update(VectorXd::Constant(1, 1.0), 0.004);
        CHECK(r2.integrator()(0) == 0.01);
    }

    SECTION("zero gains give zero contribution") {
        const VectorXd u = rcac.update(VectorXd::Constant(1, 0.7), 0.004);
        CHECK(u(0) == 0.0);
    }

    SECTION("input checks") {
        CHECK_THROWS_AS(rcac.update(VectorXd::Constant(1, 1.0), 0.0), std::invalid_argument);
        VectorXd bad(1);
        bad(0) = std::nan("");
        CHECK_THROWS_AS(rcac.update(bad, 0.004), std::domain_error);
    }
}

TEST_CASE("recursive theta matches batch least squares (lambda = 1)") {
    RcacConfig cfg;
    cfg.channels = 3;
    cfg.structure = GainStructure::PI;
    cfg.p0 = 5.0;
    cfg.filter_coeffs = {-0.4};
    cfg.forgetting = 1.0;
    cfg.integrator_clamp = 1.0;
    Rcac rcac(cfg);

    const auto zs = synthetic_sequence(200, 3, 11);
    const auto rec = drive(rcac, zs, 0.01);
    const VectorXd want = batch_theta(rec, cfg, rcac.warmup_steps());

    REQUIRE(want.norm() > 1e-6);
    CHECK((rcac.theta() - want).norm() / want.norm() < 1e-6);

    SECTION("also with a two-tap filter") {
        RcacConfig cfg2 = cfg;
        cfg2.filter_coeffs = {-0.4, -0.1};
        Rcac r2(cfg2);
        const auto rec2 = drive(r2, zs, 0.01);
        const VectorXd want2 = batch_theta(rec2, cfg2, r2.warmup_steps());
        CHECK((r2.theta() - want2).norm() / want2.norm() < 1e-6);
    }
}

TEST_CASE("lambda = 1 trajectory equals textbook RLS on the filtered data") {
    RcacConfig cfg;
    cfg.channels = 1;
    cfg.structure = GainStructure::PI;
    cfg.p0 = 2.0;
    cfg.filter_coeffs = {-0.5};
    Rcac rcac(cfg);

    // scalar-channel reference RLS, rank-one update form
    MatrixXd p_ref = cfg.p0 * MatrixXd::Identity(2, 2);
    VectorXd th_ref = VectorXd::Zero(2);

    std::vector<MatrixXd> phis;
    std::vector<VectorXd> us;
    const auto zs = synthetic_sequence(150, 1, 3);
    for (int k = 0; k < static_cast<int>(zs.size()); ++k) {
        const VectorXd u = rcac.update(zs[static_cast<std::size_t>(k)], 0.01);
        if (k >= rcac.warmup_steps()) {
            const VectorXd phi_f = -0.5 * phis[static_cast<std::size_t>(k - 1)].row(0);
            const double y = -0.5 * us[static_cast<std::size_t>(k - 1)](0) -
                             zs[static_cast<std::size_t>(k)](0);
            const double denom = 1.0 + (phi_f.transpose() * p_ref * phi_f)(0);
            const VectorXd gain = p_ref * phi_f / denom;
            th_ref += gain * (y - phi_f.dot(th_ref));
            p_ref -= gain * phi_f.transpose() * p_ref;
            REQUIRE((rcac.theta() - th_ref).norm() < 1e-9);
        }
        phis.push_back(rcac.last_regressor());
        us.push_back(u);
    }
    REQUIRE(th_ref.norm() > 1e-8);
}

TEST_CASE("closed loop on a scalar LTI plant") {
    // G(q) = q^-1 / (1 - 0.5 q^-1), unit step command, z = y - r
    RcacConfig cfg;
    cfg.channels = 1;
    cfg.structure = GainStructure::PI;
    cfg.p0 = 10.0;
    cfg.filter_coeffs = {1.0};
    cfg.integrator_clamp = std::numeric_limits<double>::infinity();
    Rcac rcac(cfg);

    double y = 0.0, u = 0.0;
    double z10 = 0.0, z500 = 0.0;
    Recorded rec;
    for (int k = 0; k <= 500; ++k) {
        y = 0.5 * y + u;
        const double z = y - 1.0;
        if (k == 10) z10 = z;
        if (k == 500) z500 = z;
        const VectorXd uv = rcac.update(VectorXd::Constant(1, z), 1.0);
        u = uv(0);
        rec.z.push_back(VectorXd::Constant(1, z));
        rec.phi.push_back(rcac.last_regressor());
        rec.u.push_back(uv);
    }
    REQUIRE(std::abs(z10) > 0.0);
    CHECK(std::abs(z500) < 0.05 * std::abs(z10));

    SECTION("recursive and batch gains agree on the closed-loop data") {
        const VectorXd want = batch_theta(rec, cfg, rcac.warmup_steps());
        CHECK((rcac.theta() - want).norm() / want.norm() < 1e-6);
    }
}

TEST_CASE("zeroed performance freezes the gains") {
    RcacConfig cfg;
    cfg.channels = 3;
    cfg.structure = GainStructure::PI;
    cfg.p0 = 10.0;
    cfg.filter_coeffs = {-0.2};
    Rcac rcac(cfg);

    const auto zs = synthetic_sequence(100, 3, 5);
    drive(rcac, zs, 0.004);
    REQUIRE(rcac.theta().norm() > 0.0);

    const VectorXd frozen = rcac.theta();
    for (int k = 0; k < 300; ++k) {
        rcac.update(VectorXd::Zero(3), 0.004);
        REQUIRE((rcac.theta() - frozen).norm() == 0.0);  // bit-exact freeze
    }

    SECTION("multi-tap filters settle geometrically after the buffers flush") {
        RcacConfig cfg2 = cfg;
        cfg2.filter_coeffs = {-0.2, -0.05};
        Rcac r2(cfg2);
        drive(r2, zs, 0.004);
        VectorXd prev = r2.theta();
        double step_change = 1.0;
        for (int k = 0; k < 50; ++k) {
            r2.update(VectorXd::Zero(3), 0.004);
            step_change = (r2.theta() - prev).norm();
            prev = r2.theta();
        }
        CHECK(step_change < 1e-12);
    }
}

TEST_CASE("covariance stays symmetric positive definite and contracts at lambda = 1") {
    RcacConfig cfg;
    cfg.channels = 3;
    cfg.structure = GainStructure::PI;
    cfg.p0 = 3.0;
    cfg.filter_coeffs = {-0.3};
    Rcac rcac(cfg);

    std::mt19937 rng(17);
    std::normal_distribution<double> n01(0.0, 1.0);
    const auto zs = synthetic_sequence(120, 3, 23);
    MatrixXd prev_cov = rcac.covariance();
    for (const auto& z : zs) {
        rcac.update(z, 0.01);
        const MatrixXd& p = rcac.covariance();
        REQUIRE((p - p.transpose()).lpNorm<Eigen::Infinity>() < 1e-10);
        REQUIRE(Eigen::LLT<MatrixXd>(p).info() == Eigen::Success);
        for (int t = 0; t < 4; ++t) {
            VectorXd x(p.rows());
            for (int i = 0; i < x.size(); ++i) x(i) = n01(rng);
            REQUIRE(x.dot(p * x) <= x.dot(prev_cov * x) + 1e-12);
        }
        prev_cov = p;
    }
    CHECK(rcac.covariance_resets() == 0);
}

TEST_CASE("determinism and reset") {
    RcacConfig cfg;
    cfg.channels = 3;
    cfg.structure = GainStructure::PI;
    cfg.p0 = 4.0;
    cfg.filter_coeffs = {-0.25};

    const auto zs = synthetic_sequence(80, 3, 9);

    SECTION("identical inputs give bit-identical trajectories") {
        Rcac a(cfg), b(cfg);
        for (const auto& z : zs) {
            a.update(z, 0.004);
            b.update(z, 0.004);
            REQUIRE(a.theta() == b.theta());
        }
    }

    SECTION("reset restores the freshly-initialized state") {
        Rcac a(cfg);
        const Rcac fresh(cfg);
        drive(a, zs, 0.004);
        a.reset();
        CHECK(a.theta() == fresh.theta());
        CHECK(a.covariance() == fresh.covariance());
        CHECK(a.integrator() == fresh.integrator());
        CHECK(a.step_count() == 0);
        CHECK(a.covariance_resets() == 0);
        CHECK(a.last_regressor().size() == 0);

        // reset is idempotent
        a.reset();
        CHECK(a.theta() == fresh.theta());
        CHECK(a.step_count() == 0);

        // after reset, zero input keeps u at zero
        const VectorXd u = a.update(VectorXd::Zero(3), 0.004);
        CHECK(u.norm() == 0.0);
    }

    SECTION("adaptation disabled passes theta0 through") {
        RcacConfig fixed = cfg;
        fixed.adaptation_enabled = false;
        fixed.theta0 = VectorXd::Zero(6);
        fixed.theta0 << 0.1, 0.2, 0.1, 0.2, 0.1, 0.2;
        Rcac a(fixed);
        for (const auto& z : zs) {
            a.update(z, 0.004);
            REQUIRE(a.theta() == fixed.theta0);
        }
    }
}

TEST_CASE("config validation") {
    RcacConfig cfg;
    cfg.p0 = 0.0;
    CHECK_THROWS_AS(Rcac(cfg), std::invalid_argument);
    cfg.p0 = 1.0;
    cfg.forgetting = 1.5;
    CHECK_THROWS_AS(Rcac(cfg), std::invalid_argument);
    cfg.forgetting = 1.0;
    cfg.filter_coeffs = {0.0, 0.0};
    CHECK_THROWS_AS(Rcac(cfg), std::invalid_argument);
}
