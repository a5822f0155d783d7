#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ykrl/rng.hpp"
#include "ykrl/verify.hpp"
#include "ykrl/youla.hpp"

using namespace ykrl;

namespace {

std::shared_ptr<HankelSystem> explore_system(StateSpaceModel plant, int L, int samples,
                                             std::mt19937_64& rng) {
    plant.reset();
    Trajectory data;
    data.dt = plant.dt;
    for (int t = 0; t < samples; ++t) {
        const double u = gauss(rng);
        data.inputs.push_back(u);
        data.outputs.push_back(plant.output());
        plant.step(u);
    }
    HankelSystem::Options opt;
    opt.L = L;
    opt.declared_order = plant.order();
    return std::make_shared<HankelSystem>(data, opt);
}

StableLinearOperator zero_q(int n) {
    StableLinearOperator q;
    q.A_q = MatrixXd::Zero(n, n);
    q.B_q = VectorXd::Zero(n);
    q.C_q = RowVectorXd::Zero(n);
    q.D_q = 0.0;
    q.z = VectorXd::Zero(n);
    return q;
}

}  // namespace

TEST_CASE("zero Q gives the zero controller") {
    std::mt19937_64 rng = make_rng(41);
    StateSpaceModel plant = random_stable_plant(rng, 3);
    auto sys = explore_system(plant, 3, 80, rng);
    YoulaController ctrl(sys, zero_q(2));

    plant.reset();
    std::uniform_real_distribution<double> r_dist(-1.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        const double u = ctrl.step(r_dist(rng), plant.output());
        CHECK(u == 0.0);
        plant.step(u);
    }
}

TEST_CASE("window bookkeeping: stored input equals the returned one") {
    std::mt19937_64 rng = make_rng(42);
    StateSpaceModel plant = random_stable_plant(rng, 2);
    auto sys = explore_system(plant, 2, 60, rng);
    QLtiParams q = QLtiParams::random(2, rng, 0.6);
    YoulaController ctrl(sys, q.realize());

    plant.reset();
    for (int t = 0; t < 50; ++t) {
        const double u = ctrl.step(0.5, plant.output());
        CHECK(ctrl.last_input() == u);
        CHECK(ctrl.window().u(ctrl.window().length() - 1) == u);
        plant.step(u);
    }
}

TEST_CASE("alg-2 controller matches the state-space interconnection") {
    std::mt19937_64 rng = make_rng(43);
    for (int pair = 0; pair < 20; ++pair) {
        std::mt19937_64 case_rng = make_rng(pair, {0x7e57});
        const Thm3CaseResult res = thm3_equivalence_case(case_rng, 4, 3, 100);
        CHECK(res.max_error < 1e-6);
    }
}

TEST_CASE("yk oracle") {
    std::mt19937_64 rng = make_rng(44);

    SUBCASE("zero reference keeps everything at zero") {
        StateSpaceModel plant = random_stable_plant(rng, 3);
        QLtiParams q = QLtiParams::random(2, rng, 0.5);
        YkOracle oracle(plant, q.realize());
        for (int t = 0; t < 50; ++t) {
            auto[u, y] = oracle.step(0.0);
            CHECK(u == 0.0);
            CHECK(y == 0.0);
        }
    }

    SUBCASE("small-gain constant Q on a half-pole plant converges under a step") {
        StateSpaceModel plant(MatrixXd::Constant(1, 1, 0.5), VectorXd::Ones(1),
                              RowVectorXd::Ones(1), 1.0);
        StableLinearOperator q = zero_q(1);
        q.D_q = 0.2;
        YkOracle oracle(plant, q);
        double y_last = 0.0, u_last = 0.0;
        for (int t = 0; t < 500; ++t) {
            auto[u, y] = oracle.step(1.0);
            CHECK(std::abs(y) < 1e3);
            y_last = y;
            u_last = u;
        }
        // settled: u = D (r - y + y_model) with y = y_model at convergence
        CHECK(u_last == doctest::Approx(0.2).epsilon(1e-6));
        CHECK(y_last == doctest::Approx(0.2 * 2.0).epsilon(1e-6));  // dc gain 2
    }

    SUBCASE("impulse response of r -> u equals the convolution formula") {
        StateSpaceModel plant = random_stable_plant(rng, 3);
        QLtiParams q_params = QLtiParams::random(2, rng, 0.7);
        YkOracle oracle(plant, q_params.realize());

        const int T = 51;
        std::vector<double> u_oracle(T);
        for (int t = 0; t < T; ++t) u_oracle[t] = oracle.step(t == 0 ? 1.0 : 0.0).u;

        // direct convolution: u_t = sum_j cq Aq^{t-1-j} bq rhat_j + dq rhat_t,
        // rhat_j = e_j + sum_i cp Ap^{j-1-i} bp u_i, e_j = r_j - y_j
        StableLinearOperator q = q_params.realize();
        std::vector<double> u(T, 0.0), rhat(T, 0.0), y(T, 0.0);
        auto plant_pow = [&](int k) {
            MatrixXd Ak = MatrixXd::Identity(plant.order(), plant.order());
            for (int i = 0; i < k; ++i) Ak = plant.A * Ak;
            return Ak;
        };
        auto q_pow = [&](int k) {
            MatrixXd Ak = MatrixXd::Identity(2, 2);
            for (int i = 0; i < k; ++i) Ak = q.A_q * Ak;
            return Ak;
        };
        double max_err = 0.0;
        for (int t = 0; t < T; ++t) {
            double y_t = 0.0;
            for (int i = 0; i <= t - 1; ++i)
                y_t += plant.C.dot(plant_pow(t - 1 - i) * plant.B) * u[i];
            y[t] = y_t;
            const double r = t == 0 ? 1.0 : 0.0;
            rhat[t] = (r - y[t]) + y_t;  // e_t + model output (identical model)
            double u_t = q.D_q * rhat[t];
            for (int j = 0; j <= t - 1; ++j)
                u_t += q.C_q.dot(q_pow(t - 1 - j) * q.B_q) * rhat[j];
            u[t] = u_t;
            max_err = std::max(max_err, std::abs(u_t - u_oracle[t]));
        }
        CHECK(max_err < 1e-10);
    }
}

TEST_CASE("closed loop stays bounded for random stable Q draws") {
    std::mt19937_64 rng = make_rng(45);
    StateSpaceModel plant = random_stable_plant(rng, 3, 0.9);
    auto sys = explore_system(plant, 3, 90, rng);

    for (int draw = 0; draw < 100; ++draw) {
        std::mt19937_64 q_rng = make_rng(draw, {0xbeef});
        QLtiParams q = QLtiParams::random(3, q_rng, 0.7);
        YoulaController ctrl(sys, q.realize());
        LtiEnv env(plant, 0.0);
        EpisodeLog log = closed_loop_run(
            env, ctrl, [](int t) { return t % 40 < 20 ? 1.0 : -0.5; }, 1000, {});
        CHECK_FALSE(log.aborted);
        double max_y = 0.0;
        for (double y : log.y) max_y = std::max(max_y, std::abs(y));
        CHECK(max_y < 1e3);
    }
}

TEST_CASE("closed_loop_run: zero everything produces the zero log") {
    std::mt19937_64 rng = make_rng(46);
    StateSpaceModel plant = random_stable_plant(rng, 2);
    auto sys = explore_system(plant, 2, 60, rng);
    YoulaController ctrl(sys, zero_q(2));
    LtiEnv env(plant, 0.0);
    EpisodeLog log = closed_loop_run(env, ctrl, [](int) { return 0.0; }, 100, {});
    CHECK(log.size() == 100);
    for (std::size_t i = 0; i < log.size(); ++i) {
        CHECK(log.r[i] == 0.0);
        CHECK(log.y[i] == 0.0);
        CHECK(log.u[i] == 0.0);
        CHECK(log.e[i] == 0.0);
    }
}

TEST_CASE("episode log csv export and return recompute") {
    EpisodeLog log;
    log.dt = 0.5;
    log.gamma = 0.9;
    log.r = {1.0, 1.0};
    log.y = {0.0, 0.5};
    log.u = {0.3, 0.2};
    log.e = {1.0, 0.5};
    log.reward = {1.0, 2.0};
    log.discounted_return = 1.0 + 0.9 * 2.0;
    CHECK(log.recompute_return() == doctest::Approx(log.discounted_return).epsilon(1e-12));

    const auto path = std::filesystem::temp_directory_path() / "ykrl_episode.csv";
    log.write_csv(path);
    Trajectory dummy;  // reuse the csv reader through the table interface
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,r,y,u,e,reward");
}

TEST_CASE("incremental mode integrates the Q output and respects limits") {
    std::mt19937_64 rng = make_rng(47);
    StateSpaceModel plant = random_stable_plant(rng, 2);
    auto sys = explore_system(plant, 2, 60, rng);
    StableLinearOperator q = zero_q(1);
    q.D_q = 1.0;  // delta_u = r_hat

    YoulaOptions opt;
    opt.mode = ControlMode::incremental;
    opt.u_min = -0.25;
    opt.u_max = 0.25;
    YoulaController ctrl(sys, q, opt);

    // constant error of 0.1 accumulates until the clamp
    double u = 0.0;
    for (int t = 0; t < 10; ++t) {
        auto p = ctrl.propose(0.1, 0.0);
        ctrl.commit(p.u);
        u = p.u;
        CHECK(u <= 0.25 + 1e-12);
    }
    CHECK(u == doctest::Approx(0.25));
}
