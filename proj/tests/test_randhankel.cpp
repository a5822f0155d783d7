#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ykrl/errors.hpp"
#include "ykrl/randhankel.hpp"
#include "ykrl/rng.hpp"

using namespace ykrl;

TEST_CASE("r_lower_bound arithmetic") {
    CHECK(r_lower_bound(1, 2) == doctest::Approx(1.0));
    CHECK(r_lower_bound(2, 100) == doctest::Approx(std::sqrt(98.0 / 3.0)));
    CHECK(r_lower_bound(3, 3 * 2) == doctest::Approx(0.0));  // N = L (L - 1)
    CHECK_THROWS_AS(r_lower_bound(5, 10), DimensionError);
}

TEST_CASE("sample_spectra: probabilities rise with N and the wall bound holds") {
    McConfig cfg;
    cfg.L = 2;
    cfg.N_values = {100, 400, 1600};
    cfg.trials = 60;
    cfg.seed = 2024;
    McReport report = sample_spectra(cfg);
    REQUIRE(report.cells.size() == 3);

    double prev = -1.0;
    for (const auto& cell : report.cells) {
        CHECK(cell.pr_sigma_gt_rN >= prev);
        prev = cell.pr_sigma_gt_rN;
        CHECK(cell.wall_bound_held);
        CHECK(cell.rho_q50 <= cell.rho_q90);
        CHECK(cell.rho_q90 <= cell.rho_q99);
    }
    CHECK(report.cells.back().pr_sigma_gt_rN >= 0.9);
    CHECK(report.cells.back().rho_q50 <= 1.05);
}

TEST_CASE("sample_spectra: sigma_min medians grow like sqrt(N)") {
    McConfig cfg;
    cfg.L = 5;
    cfg.N_values = {100, 400, 1600};
    cfg.trials = 40;
    cfg.seed = 7;
    McReport report = sample_spectra(cfg);
    // log-log slope between the first and last cells
    const double slope = std::log(report.cells.back().sigma_min_median /
                                  report.cells.front().sigma_min_median) /
                         std::log(1600.0 / 100.0);
    CHECK(slope > 0.4);
    CHECK(slope < 0.6);
}

TEST_CASE("L = 1 sanity: the scalar-rank radius matches the closed form") {
    // H is 1 x N, H' its shift; rho(H+ H') = |<h, h'>| / ||h||^2
    for (int trial = 0; trial < 20; ++trial) {
        std::mt19937_64 rng = make_rng(trial, {0x1a});
        const int N = 50;
        std::vector<double> w = gauss_sequence(rng, N + 1);
        MatrixXd Hbar = build_hankel(w, 1);
        MatrixXd H = Hbar.leftCols(N);
        MatrixXd Hs = Hbar.rightCols(N);
        PseudoInverse pinv(H, 1e-12);
        const double rho_general = spectral_radius(Hs * pinv.dense());
        double dot = 0.0, norm_sq = 0.0;
        for (int i = 0; i < N; ++i) {
            dot += w[i] * w[i + 1];
            norm_sq += w[i] * w[i];
        }
        CHECK(rho_general == doctest::Approx(std::abs(dot) / norm_sq).epsilon(1e-12));
    }
}

TEST_CASE("verify_hw_corollary: concentration sharpens with n") {
    const auto res = verify_hw_corollary({10, 1000, 10000}, 0.1, 400, 5);
    REQUIRE(res.size() == 3);
    CHECK(res[0].pr_squares <= res[2].pr_squares);
    CHECK(res[0].pr_products <= res[2].pr_products);
    CHECK(res[2].pr_squares > 0.99);
    CHECK(res[2].pr_products > 0.99);
    // small n with a tight band is visibly below 1
    const auto tight = verify_hw_corollary({10}, 0.01, 400, 6);
    CHECK(tight[0].pr_squares < 0.5);
    CHECK_THROWS(verify_hw_corollary({10}, 1.5, 10, 0));
}

TEST_CASE("noisy rollout experiment: divergence at short data, recovery at long data") {
    NoisyRolloutConfig cfg;
    cfg.seeds = 20;
    cfg.N_sweep = {100, 400, 1000};
    cfg.seed = 99;
    const StateSpaceModel plant = nonminimum_phase_plant(cfg.dt);
    const NoisyRolloutReport report = noisy_rollout_experiment(plant, cfg);

    REQUIRE(report.short_data.size() == 20);
    int diverged = 0;
    for (const auto& t : report.short_data) {
        // adequate records make the noise-free radius reliably contractive;
        // the starved N_small record may not, which is the point of the test
        CHECK(t.rho_noisefree_long < 1.0 + 1e-6);
        CHECK_FALSE(t.noisefree_long_diverged);
        if (t.diverged) ++diverged;
    }
    CHECK(diverged >= 1);

    // the probing condition: lambda_min of the input Hankel grows with N
    REQUIRE(report.sweep.size() == 3);
    CHECK(report.sweep[0].lambda_min_u_median < report.sweep[1].lambda_min_u_median);
    CHECK(report.sweep[1].lambda_min_u_median < report.sweep[2].lambda_min_u_median);
    CHECK(report.sweep.back().pr_rho_below >= 0.9);
}
