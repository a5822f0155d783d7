#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ykrl/envs.hpp"
#include "ykrl/pitune.hpp"
#include "ykrl/rng.hpp"

using namespace ykrl;

namespace {

PiTuneConfig test_config() {
    PiTuneConfig cfg;
    cfg.seed = 31337;
    return cfg;
}

}  // namespace

TEST_CASE("pi_policy_step formula") {
    PiParams pi{0.0, 0.0, 1.0};
    CHECK(pi_policy_step(pi, 0.0, 0.0, 5.0) == doctest::Approx(5.0));

    pi = {0.0, 1.0, 1.0};
    CHECK(pi_policy_step(pi, 2.0, 0.7, 3.0) == doctest::Approx(5.0));

    // bit-for-bit equal to the velocity-form PID with kd = 0 and no clamping
    std::mt19937_64 rng = make_rng(60);
    PiParams params{0.8, 0.4, 0.25};
    PidController pid;
    pid.kp = params.kp;
    pid.ki = params.ki;
    pid.dt = params.dt;
    double e_prev = 0.0, u_prev = 0.0;
    for (int t = 0; t < 200; ++t) {
        const double e = gauss(rng);
        const double via_policy = pi_policy_step(params, e, e_prev, u_prev);
        const double via_pid = pid.step(e);
        CHECK(via_policy == via_pid);
        e_prev = e;
        u_prev = via_policy;
    }
}

TEST_CASE("model stability oracle") {
    const StateSpaceModel plant = nonminimum_phase_plant(0.1);

    SUBCASE("open loop reports the plant radius") {
        auto res = model_stability_oracle({0.0, 0.0, 0.1}, plant);
        CHECK(res.stable);
        CHECK(res.rho_cl == doctest::Approx(spectral_radius(plant.A)).epsilon(1e-12));
    }

    SUBCASE("a gain sweep crosses the boundary exactly once") {
        const double ki = 0.2;
        int transitions = 0;
        bool prev = true;
        for (int i = 0; i <= 60; ++i) {
            const double kp = 4.0 * i / 60.0;
            const bool stable = model_stability_oracle({kp, ki, 0.1}, plant).stable;
            if (stable != prev && i > 0) ++transitions;
            prev = stable;
        }
        CHECK(transitions == 1);
    }

    SUBCASE("huge gain is unstable") {
        CHECK_FALSE(model_stability_oracle({1e3, 0.1, 0.1}, plant).stable);
    }
}

TEST_CASE("stability boundary is single-valued in kp per ki") {
    const StateSpaceModel plant = nonminimum_phase_plant(0.1);
    std::vector<double> ki_values{0.0, 0.5, 1.0, 2.0, 3.0};
    auto boundary = stability_boundary(plant, 0.1, ki_values, 4.0);
    REQUIRE(boundary.size() == ki_values.size());
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        const auto [kp, ki] = boundary[i];
        CHECK(ki == doctest::Approx(ki_values[i]));
        // the crossing brackets rho = 1
        CHECK(model_stability_oracle({kp - 0.02, ki, 0.1}, plant).stable);
        CHECK_FALSE(model_stability_oracle({kp + 0.02, ki, 0.1}, plant).stable);
    }
}

TEST_CASE("fit_certificate separates stable and unstable gains") {
    PiTuneConfig cfg = test_config();
    auto sys = pitune_hankel_model(cfg);
    const StateSpaceModel plant = pitune_plant(cfg);
    CertificateOptions opt;

    SUBCASE("open loop: X = 1, Y = 0, W = the plant impulse response") {
        AffineCertificate cert = fit_certificate({0.0, 0.0, cfg.plant_dt}, *sys, opt);
        CHECK(cert.residual_primary < 1e-6);
        CHECK(cert.residual_secondary < 1e-6);
        CHECK(cert.feasible(opt));

        // X reproduces the unit pulse, Y stays at zero
        StableLinearOperator x_op = cert.X.realize();
        CHECK(x_op.step(1.0) == doctest::Approx(1.0).epsilon(1e-4));
        for (int t = 0; t < 20; ++t) CHECK(std::abs(x_op.step(0.0)) < 1e-3);
        StableLinearOperator y_op = cert.Y.realize();
        for (int t = 0; t < 20; ++t) CHECK(std::abs(y_op.step(t == 0 ? 1.0 : 0.0)) < 1e-3);
    }

    SUBCASE("stabilizing gains are certified feasible") {
        for (const auto& [kp, ki] : {std::pair{0.4, 0.2}, {0.9, 0.4}, {1.2, 0.1}}) {
            REQUIRE(model_stability_oracle({kp, ki, cfg.plant_dt}, plant).rho_cl < 0.99);
            AffineCertificate cert = fit_certificate({kp, ki, cfg.plant_dt}, *sys, opt);
            CHECK(cert.residual_primary < opt.tol_feas);
            CHECK(cert.residual_secondary < opt.tol_feas);
        }
    }

    SUBCASE("destabilizing gains fail the certificate") {
        for (const auto& [kp, ki] : {std::pair{2.6, 0.5}, {3.5, 1.0}, {1.0, 4.5}}) {
            REQUIRE(model_stability_oracle({kp, ki, cfg.plant_dt}, plant).rho_cl > 1.02);
            AffineCertificate cert = fit_certificate({kp, ki, cfg.plant_dt}, *sys, opt);
            const double resid = std::max(cert.residual_primary, cert.residual_secondary);
            CHECK(resid >= opt.tol_feas);
        }
    }
}

TEST_CASE("certificate agrees with the oracle outside the boundary band") {
    PiTuneConfig cfg = test_config();
    auto sys = pitune_hankel_model(cfg);
    const StateSpaceModel plant = pitune_plant(cfg);
    CertificateOptions opt;

    int checked = 0, agreed = 0;
    const int grid = 8;  // coarse grid here; the acceptance suite runs 20x20
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const double kp = 0.1 + 3.4 * i / (grid - 1);
            const double ki = 0.05 + 3.8 * j / (grid - 1);
            const auto oracle = model_stability_oracle({kp, ki, cfg.plant_dt}, plant);
            if (std::abs(oracle.rho_cl - 1.0) < 0.02) continue;  // boundary band
            const AffineCertificate cert = fit_certificate({kp, ki, cfg.plant_dt}, *sys, opt);
            const bool cert_ok = cert.residual_primary < opt.tol_feas &&
                                 cert.residual_secondary < opt.tol_feas;
            ++checked;
            if (cert_ok == oracle.stable) ++agreed;
        }
    }
    CHECK(checked > 30);
    CHECK(agreed == checked);
}

TEST_CASE("project_pi") {
    PiTuneConfig cfg = test_config();
    auto sys = pitune_hankel_model(cfg);
    const StateSpaceModel plant = pitune_plant(cfg);
    ProjectionOptions opt;

    SUBCASE("feasible points are returned unchanged") {
        const PiParams theta{0.5, 0.3, cfg.plant_dt};
        const PiParams back = project_pi(theta, *sys, opt);
        CHECK(back.kp == theta.kp);
        CHECK(back.ki == theta.ki);
    }

    SUBCASE("deep-unstable points project to a feasible neighbor") {
        const PiParams theta{3.2, 0.6, cfg.plant_dt};
        const PiParams back = project_pi(theta, *sys, opt);
        const auto oracle = model_stability_oracle(back, plant);
        CHECK(oracle.stable);
        CHECK(oracle.rho_cl <= 1.0 - opt.cert.margin / 2.0);

        // distance close to the oracle-grid projection
        double best = 1e100;
        for (int i = 0; i <= 50; ++i) {
            for (int j = 0; j <= 50; ++j) {
                const double kp = 4.0 * i / 50.0;
                const double ki = 4.0 * j / 50.0;
                const auto res = model_stability_oracle({kp, ki, cfg.plant_dt}, plant);
                if (res.rho_cl <= 1.0 - opt.cert.margin)
                    best = std::min(best, std::hypot(kp - theta.kp, ki - theta.ki));
            }
        }
        const double achieved = std::hypot(back.kp - theta.kp, back.ki - theta.ki);
        CHECK(achieved <= best + 0.05);
    }

    SUBCASE("projection is idempotent") {
        const PiParams theta{2.8, 1.5, cfg.plant_dt};
        const PiParams once = project_pi(theta, *sys, opt);
        const PiParams twice = project_pi(once, *sys, opt);
        CHECK(twice.kp == doctest::Approx(once.kp).epsilon(1e-9));
        CHECK(twice.ki == doctest::Approx(once.ki).epsilon(1e-9));
    }
}

TEST_CASE("constrained training visits only oracle-stable parameters") {
    PiTuneConfig cfg = test_config();
    cfg.sessions = 3;
    cfg.episodes = 10;
    cfg.threads = 3;
    const StateSpaceModel plant = pitune_plant(cfg);

    cfg.constrained = true;
    PiTuneResult constrained = constrained_training_run(cfg);
    CHECK(constrained.projection_failures == 0);
    int post_count = 0;
    for (const auto& h : constrained.heatmap) {
        if (!h.post) continue;
        ++post_count;
        const auto oracle = model_stability_oracle({h.kp, h.ki, cfg.plant_dt}, plant);
        CHECK(oracle.stable);
    }
    CHECK(post_count == cfg.sessions * cfg.episodes);

    // sparse reward sanity: perfect tracking would earn ~1 per step
    CHECK(constrained.training.returns.maxCoeff() > 0.0);
}
