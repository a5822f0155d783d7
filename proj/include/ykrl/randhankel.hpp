#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "ykrl/envs.hpp"
#include "ykrl/hankel.hpp"

namespace ykrl {

struct McConfig {
    int L = 2;
    std::vector<int> N_values = {100, 400, 1600};
    int trials = 200;
    double noise_std = 0.1;
    std::uint64_t seed = 0;
    int threads = 0;
};

// Lower bound on sigma_min of an L x N standard-normal Hankel block:
// r_N = sqrt(N / (L + 1) - L (L - 1) / (L + 1)).
double r_lower_bound(int L, int N);

// Surrogate eps_N = sqrt(1 + L^2 / (delta_N r_N^2)) - 1 with delta_N = N^{-1/4};
// reported alongside the raw quantiles, never in place of them.
double eps_surrogate(int L, int N);

struct McCell {
    int L = 0;
    int N = 0;
    int trials = 0;
    double pr_sigma_gt_rN = 0.0;
    double rho_q50 = 0.0, rho_q90 = 0.0, rho_q99 = 0.0;
    double lambda_min_mean = 0.0;
    double sigma_min_median = 0.0;
    double eps_N = 0.0;
    bool wall_bound_held = true;  // rho^2 <= 1 + ||w'||^2 / lambda_min, every trial
};

struct McReport {
    std::vector<McCell> cells;
    // Header: L,N,trials,pr_sigma_gt_rN,rho_q50,rho_q90,rho_q99,lambda_min_mean
    void write_csv(const std::filesystem::path& path) const;
};

// Pure-noise Hankel spectra: per trial draw a standard-normal sequence of
// length N + L, take the L x (N + 1) block, split it into the first/last N
// columns, and record sigma_min(H), lambda_min(H H^T), rho(H^+ H') and the
// per-draw wall bound.
McReport sample_spectra(const McConfig& cfg);

struct HwResult {
    int n = 0;
    double pr_squares = 0.0;   // Pr{ |sum X_k^2 - n| < alpha n }
    double pr_products = 0.0;  // Pr{ |sum X_k X_{k+1}| < alpha n }
};

std::vector<HwResult> verify_hw_corollary(const std::vector<int>& n_values, double alpha,
                                          int trials, std::uint64_t seed = 0);

struct NoisyRolloutConfig {
    int L = 21;
    int N_small = 100;                      // collection cut short
    int N_adequate = 400;                   // record length with reliable spectra
    std::vector<int> N_sweep = {100, 400, 1000, 4000};
    double noise_std = 0.1;
    int seeds = 20;
    int rollout_steps = 3000;
    double divergence_factor = 1e3;         // window-norm growth counted as divergence
    double gauss_clip = 3.0;                // truncation for the sweep probing signal
    std::uint64_t seed = 0;
    double dt = 0.1;
};

struct NoisyRolloutSeedTrace {
    std::uint64_t seed = 0;
    double rho_noisy = 0.0;            // N_small, noisy outputs
    double rho_noisefree = 0.0;        // N_small, same probing, no noise
    double rho_noisefree_long = 0.0;   // N_adequate, no noise
    bool diverged = false;
    bool noisefree_diverged = false;
    bool noisefree_long_diverged = false;
};

struct NoisyRolloutSweepCell {
    int N = 0;
    double pr_rho_below = 0.0;  // Pr{ rho < 1 + band } across seeds
    double rho_median = 0.0;
    double lambda_min_u_median = 0.0;  // median lambda_min(H_L(u) H_L(u)^T)
};

struct NoisyRolloutReport {
    std::vector<NoisyRolloutSeedTrace> short_data;  // at N_small
    std::vector<NoisyRolloutSweepCell> sweep;       // truncated-Gaussian probing
    double band = 0.05;
};

// The early-stopping phenomenon: with few noisy samples some seeds produce an
// expansive H^+ H' whose free rollout diverges, while the noise-free matrices
// from the same probing stay contractive; growing N with a bounded probing
// signal drives rho back below 1 + band.
NoisyRolloutReport noisy_rollout_experiment(const StateSpaceModel& plant,
                                            const NoisyRolloutConfig& cfg);

}  // namespace ykrl
