#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "ykrl/envs.hpp"
#include "ykrl/errors.hpp"
#include "ykrl/hankel.hpp"
#include "ykrl/rng.hpp"

using namespace ykrl;

namespace {

Trajectory explore(StateSpaceModel plant, int samples, std::mt19937_64& rng,
                   double noise_std = 0.0) {
    plant.reset();
    Trajectory data;
    data.dt = plant.dt;
    for (int t = 0; t < samples; ++t) {
        const double u = gauss(rng);
        data.inputs.push_back(u);
        data.outputs.push_back(plant.output() + (noise_std > 0 ? gauss(rng, noise_std) : 0.0));
        plant.step(u);
    }
    return data;
}

HankelSystem make_system(const Trajectory& data, int L, int declared_order = -1) {
    HankelSystem::Options opt;
    opt.L = L;
    opt.declared_order = declared_order;
    return HankelSystem(data, opt);
}

}  // namespace

TEST_CASE("build_hankel: directly from the definition") {
    const std::vector<double> z{1, 2, 3, 4};
    MatrixXd H = build_hankel(z, 2);
    REQUIRE(H.rows() == 2);
    REQUIRE(H.cols() == 3);
    MatrixXd expected(2, 3);
    expected << 1, 2, 3, 2, 3, 4;
    CHECK((H - expected).norm() == 0.0);

    MatrixXd Hz = build_hankel(std::vector<double>{0, 0, 0}, 1);
    CHECK(Hz.rows() == 1);
    CHECK(Hz.cols() == 3);
    CHECK(Hz.norm() == 0.0);
}

TEST_CASE("build_hankel: shape for the process window length") {
    std::vector<double> z(100, 0.0);
    MatrixXd H = build_hankel(z, 11);
    CHECK(H.rows() == 11);
    CHECK(H.cols() == 90);
}

TEST_CASE("build_hankel: L out of range errors name the offender") {
    CHECK_THROWS_AS(build_hankel(std::vector<double>{1, 2}, 3), DimensionError);
    CHECK_THROWS_AS(build_hankel(std::vector<double>{1, 2}, 0), DimensionError);
}

TEST_CASE("hankel entry identity on random sequences") {
    std::mt19937_64 rng = make_rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> len_dist(3, 40);
        const int len = len_dist(rng);
        std::uniform_int_distribution<int> L_dist(1, len);
        const int L = L_dist(rng);
        const std::vector<double> z = gauss_sequence(rng, len);
        MatrixXd H = build_hankel(z, L);
        for (int i = 0; i < L; ++i)
            for (int j = 0; j <= len - L; ++j) CHECK(H(i, j) == z[i + j]);
    }
}

TEST_CASE("persistency of excitation") {
    SUBCASE("constant signal has rank 1") {
        auto rep = check_persistent_excitation(std::vector<double>{1, 1, 1, 1}, 2);
        CHECK(rep.rank == 1);
        CHECK(rep.required == 2);
        CHECK_FALSE(rep.satisfied);
    }
    SUBCASE("shifted impulse gives independent rows") {
        auto rep = check_persistent_excitation(std::vector<double>{0, 1, 0, 0, 0}, 2);
        CHECK(rep.rank == 2);
        CHECK(rep.satisfied);
    }
    SUBCASE("gaussian signals excite order 11 over 100 seeds") {
        for (int seed = 0; seed < 100; ++seed) {
            std::mt19937_64 rng = make_rng(seed, {0x99});
            auto rep = check_persistent_excitation(gauss_sequence(rng, 200), 11);
            CHECK(rep.satisfied);
        }
    }
}

TEST_CASE("solve_alpha: zero, feasible columns, and fresh windows") {
    std::mt19937_64 rng = make_rng(22);
    StateSpaceModel plant = random_stable_plant(rng, 3);
    Trajectory data = explore(plant, 80, rng);
    HankelSystem sys = make_system(data, 4, 3);

    SUBCASE("zero rhs gives zero alpha") {
        auto sol = sys.solve_alpha(Window::zeros(4));
        CHECK(sol.alpha.norm() == 0.0);
        CHECK(sol.residual == 0.0);
    }

    SUBCASE("a stored column is reproduced with a short alpha") {
        Window win;
        win.u = sys.Hu().col(5);
        win.y = sys.Hy().col(5);
        auto sol = sys.solve_alpha(win);
        CHECK(sol.residual < 1e-10);
        CHECK(sol.alpha.norm() <= 1.0 + 1e-9);  // e_5 is feasible
    }

    SUBCASE("window from a fresh rollout of the same plant is consistent") {
        plant.reset();
        Window win = Window::zeros(4);
        for (int t = 0; t < 4; ++t) {
            const double u = gauss(rng);
            win.u(t) = u;
            win.y(t) = plant.output();
            plant.step(u);
        }
        auto sol = sys.solve_alpha(win);
        CHECK(sol.residual < 1e-8);
    }

    SUBCASE("noisy mode downgrades the consistency error to a counter") {
        HankelSystem::Options opt;
        opt.L = 4;
        opt.noisy = true;
        HankelSystem noisy_sys(data, opt);
        Window bad = Window::zeros(4);
        bad.y.setConstant(10.0);
        CHECK_NOTHROW(noisy_sys.solve_alpha(bad));
        const long warnings = noisy_sys.consistency_warnings;
        try {
            HankelSystem strict = make_system(data, 4, 3);
            strict.solve_alpha(bad);
            // representable by this particular record; nothing to check
        } catch (const InconsistentTrajectoryError& e) {
            CHECK(e.residual > 1e-6);
            CHECK(warnings >= 1);
        }
    }
}

TEST_CASE("min-norm property: alpha beats null-space perturbations") {
    std::mt19937_64 rng = make_rng(23);
    StateSpaceModel plant = random_stable_plant(rng, 3);
    Trajectory data = explore(plant, 60, rng);
    HankelSystem sys = make_system(data, 4, 3);

    Window win;
    win.u = sys.Hu().col(7);
    win.y = sys.Hy().col(7);
    VectorXd alpha = sys.solve_alpha(win).alpha;

    Eigen::FullPivLU<MatrixXd> lu(sys.stacked());
    MatrixXd kernel = lu.kernel();
    REQUIRE(kernel.cols() > 0);
    for (int trial = 0; trial < 100; ++trial) {
        VectorXd coeffs = gauss_vector(rng, kernel.cols());
        VectorXd v = kernel * coeffs;
        CHECK(alpha.norm() <= (alpha + v).norm() + 1e-9);
    }
}

TEST_CASE("predict_next") {
    std::mt19937_64 rng = make_rng(24);

    SUBCASE("all-zero window over strictly proper data predicts zero") {
        StateSpaceModel plant = random_stable_plant(rng, 3);
        Trajectory data = explore(plant, 70, rng);
        HankelSystem sys = make_system(data, 4, 3);
        CHECK(std::abs(sys.predict_next(Window::zeros(4))) < 1e-9);
    }

    SUBCASE("scalar recursion y+ = 0.5 y + u") {
        StateSpaceModel plant(MatrixXd::Constant(1, 1, 0.5), VectorXd::Ones(1),
                              RowVectorXd::Ones(1), 1.0);
        Trajectory data = explore(plant, 40, rng);
        HankelSystem sys = make_system(data, 2, 1);

        plant.reset();
        Window win = Window::zeros(2);
        for (int t = 0; t < 2; ++t) {
            const double u = gauss(rng);
            win.u(t) = u;
            win.y(t) = plant.output();
            plant.step(u);
        }
        const double predicted = sys.predict_next(win);
        CHECK(predicted == doctest::Approx(0.5 * win.y(1) + win.u(1)).epsilon(1e-8));
    }

    SUBCASE("benchmark plant window matches the state-space step") {
        StateSpaceModel plant = nonminimum_phase_plant(0.1);
        Trajectory data = explore(plant, 120, rng);
        HankelSystem sys = make_system(data, 5, 3);

        plant.reset();
        Window win = Window::zeros(5);
        std::uniform_real_distribution<double> u_dist(-1.0, 1.0);
        for (int t = 0; t < 5; ++t) {
            const double u = u_dist(rng);
            win.u(t) = u;
            win.y(t) = plant.output();
            plant.step(u);
        }
        CHECK(sys.predict_next(win) == doctest::Approx(plant.output()).epsilon(1e-6));
    }
}

TEST_CASE("data_driven_simulate") {
    std::mt19937_64 rng = make_rng(25);

    SUBCASE("zero init and zero input continue as zero") {
        StateSpaceModel plant = random_stable_plant(rng, 2);
        Trajectory data = explore(plant, 60, rng);
        HankelSystem sys = make_system(data, 3, 2);
        Trajectory cont =
            sys.data_driven_simulate(Window::zeros(3), [](int, double) { return 0.0; }, 50);
        for (double y : cont.outputs) CHECK(std::abs(y) < 1e-9);
    }

    SUBCASE("matches the state-space oracle over 200 steps") {
        for (int trial = 0; trial < 5; ++trial) {
            StateSpaceModel plant = random_stable_plant(rng, 2);
            Trajectory data = explore(plant, 70, rng);
            const int L = 3;
            HankelSystem sys = make_system(data, L, 2);

            plant.reset();
            Window win = Window::zeros(L);
            std::uniform_real_distribution<double> u_dist(-1.0, 1.0);
            for (int t = 0; t < L; ++t) {
                const double u = u_dist(rng);
                win.u(t) = u;
                win.y(t) = plant.output();
                plant.step(u);
            }
            std::vector<double> u_test(200);
            for (double& u : u_test) u = u_dist(rng);

            Trajectory cont =
                sys.data_driven_simulate(win, [&](int t, double) { return u_test[t]; }, 200);
            double max_err = 0.0;
            for (int t = 0; t < 200; ++t) {
                max_err = std::max(max_err, std::abs(cont.outputs[t] - plant.output()));
                plant.step(u_test[t]);
            }
            CHECK(max_err < 1e-6);
        }
    }

    SUBCASE("minimum window L = n achieves the same bound") {
        StateSpaceModel plant = random_stable_plant(rng, 3);
        Trajectory data = explore(plant, 90, rng);
        HankelSystem sys = make_system(data, 3, 3);

        plant.reset();
        Window win = Window::zeros(3);
        std::uniform_real_distribution<double> u_dist(-1.0, 1.0);
        for (int t = 0; t < 3; ++t) {
            const double u = u_dist(rng);
            win.u(t) = u;
            win.y(t) = plant.output();
            plant.step(u);
        }
        Trajectory cont = sys.data_driven_simulate(win, [&](int, double) { return 0.25; }, 200);
        double max_err = 0.0;
        for (int t = 0; t < 200; ++t) {
            max_err = std::max(max_err, std::abs(cont.outputs[t] - plant.output()));
            plant.step(0.25);
        }
        CHECK(max_err < 1e-6);
    }
}

TEST_CASE("free response rollout") {
    std::mt19937_64 rng = make_rng(26);

    SUBCASE("zero start stays zero") {
        StateSpaceModel plant = random_stable_plant(rng, 2);
        Trajectory data = explore(plant, 50, rng);
        HankelSystem sys = make_system(data, 3, 2);
        FreeResponse fr = sys.free_response_rollout(VectorXd::Zero(sys.num_columns()), 20);
        CHECK_FALSE(fr.diverged);
        for (const auto& w : fr.windows) CHECK(w.stacked().norm() < 1e-12);
    }

    SUBCASE("stable plant, noise-free: bounded and eventually decaying") {
        StateSpaceModel plant = random_stable_plant(rng, 3, 0.9);
        Trajectory data = explore(plant, 90, rng);
        HankelSystem sys = make_system(data, 4, 3);

        Window win;
        win.u = sys.Hu().col(0);
        win.y = sys.Hy().col(0);
        VectorXd alpha0 = sys.solve_alpha(win).alpha;
        FreeResponse fr = sys.free_response_rollout(alpha0, 300);
        REQUIRE_FALSE(fr.diverged);
        const double w0 = win.stacked().norm();
        double max_norm = 0.0;
        for (const auto& w : fr.windows) max_norm = std::max(max_norm, w.stacked().norm());
        CHECK(max_norm < 50.0 * w0);
        CHECK(fr.windows.back().stacked().norm() < 0.5 * w0);
    }
}

TEST_CASE("stability radius") {
    std::mt19937_64 rng = make_rng(27);

    SUBCASE("all-zero data gives rho = 0") {
        Trajectory data;
        data.inputs.assign(30, 0.0);
        data.outputs.assign(30, 0.0);
        HankelSystem sys = make_system(data, 3);
        CHECK(sys.stability_radius() == doctest::Approx(0.0));
    }

    SUBCASE("noise-free stable plant stays below 1") {
        StateSpaceModel plant = nonminimum_phase_plant(0.1);
        std::mt19937_64 data_rng = make_rng(1234);
        Trajectory data = explore(plant, 401, data_rng);
        HankelSystem sys = make_system(data, 11, 3);
        const double rho = sys.stability_radius();
        CHECK(rho < 1.0 + 1e-6);
        CHECK(rho > 0.1);
    }

    SUBCASE("agrees with the full-size eigenproblem") {
        StateSpaceModel plant = random_stable_plant(rng, 3);
        Trajectory data = explore(plant, 50, rng);
        HankelSystem sys = make_system(data, 4, 3);
        PseudoInverse pinv(sys.stacked(), 1e-10);
        MatrixXd big = pinv.dense() * sys.stacked_shift();  // cols x cols
        CHECK(sys.stability_radius() == doctest::Approx(spectral_radius(big)).epsilon(1e-9));
    }

    SUBCASE("invariant under common scalar scaling of u and y") {
        StateSpaceModel plant = random_stable_plant(rng, 2);
        Trajectory data = explore(plant, 60, rng);
        HankelSystem sys = make_system(data, 3, 2);
        Trajectory scaled = data;
        for (auto& v : scaled.inputs) v *= -3.7;
        for (auto& v : scaled.outputs) v *= -3.7;
        HankelSystem sys_scaled = make_system(scaled, 3, 2);
        CHECK(sys.stability_radius() ==
              doctest::Approx(sys_scaled.stability_radius()).epsilon(1e-9));
    }
}

TEST_CASE("shift consistency: H' equals the Hankel of the dropped-head sequence") {
    std::mt19937_64 rng = make_rng(28);
    Trajectory data;
    data.inputs = gauss_sequence(rng, 30);
    data.outputs = gauss_sequence(rng, 30);
    HankelSystem sys = make_system(data, 5);

    // the order-L Hankel of the full (N+1)-sample sequence holds both blocks
    MatrixXd full_u = build_hankel(data.inputs, 5);
    CHECK((sys.Hu() - full_u.leftCols(sys.num_columns())).norm() == 0.0);
    CHECK((sys.Hu_shift() - full_u.rightCols(sys.num_columns())).norm() == 0.0);

    std::vector<double> dropped(data.outputs.begin() + 1, data.outputs.end());
    MatrixXd dropped_hankel = build_hankel(dropped, 5);
    CHECK((sys.Hy_shift() - dropped_hankel).norm() == 0.0);

    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < sys.num_columns(); ++j)
            CHECK(sys.Hy_shift()(i, j) == data.outputs[i + j + 1]);
}

TEST_CASE("PE enforcement honors the declared order flag") {
    Trajectory constant;
    constant.inputs.assign(40, 1.0);  // rank-1 input
    constant.outputs.assign(40, 0.5);
    HankelSystem::Options opt;
    opt.L = 3;
    opt.declared_order = 2;
    CHECK_THROWS(HankelSystem(constant, opt));
    opt.enforce_pe = false;
    HankelSystem sys(constant, opt);
    CHECK_FALSE(sys.pe_report().satisfied);
    CHECK(sys.pe_order_checked() == 3 + 1 + 2);
}
