#include "ykrl/randhankel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "ykrl/csv.hpp"
#include "ykrl/errors.hpp"
#include "ykrl/rl.hpp"
#include "ykrl/rng.hpp"

namespace ykrl {

double r_lower_bound(int L, int N) {
    if (L < 1) throw std::invalid_argument("r_lower_bound: L must be >= 1");
    const double radicand =
        static_cast<double>(N) / (L + 1) - static_cast<double>(L) * (L - 1) / (L + 1);
    if (radicand < 0)
        throw DimensionError("r_lower_bound: N = " + std::to_string(N) +
                             " too small for L = " + std::to_string(L));
    return std::sqrt(radicand);
}

double eps_surrogate(int L, int N) {
    const double rN = r_lower_bound(L, N);
    if (rN <= 0) return std::numeric_limits<double>::infinity();
    const double delta_N = std::pow(static_cast<double>(N), -0.25);
    return std::sqrt(1.0 + static_cast<double>(L) * L / (delta_N * rN * rN)) - 1.0;
}

namespace {

struct SpectraDraw {
    double sigma_min;
    double lambda_min;
    double rho;
    bool wall_held;
};

SpectraDraw one_spectra_draw(int L, int N, std::mt19937_64& rng) {
    const std::vector<double> w = gauss_sequence(rng, static_cast<std::size_t>(N + L));
    const MatrixXd Hbar = build_hankel(w, L);  // L x (N + 1)
    const MatrixXd H = Hbar.leftCols(N);
    const MatrixXd Hs = Hbar.rightCols(N);
    const VectorXd w_last = Hbar.col(N);

    const MatrixXd HHt = H * H.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(HHt, Eigen::EigenvaluesOnly);
    const double lambda_min = eig.eigenvalues().minCoeff();

    SpectraDraw d;
    d.lambda_min = lambda_min;
    d.sigma_min = std::sqrt(std::max(lambda_min, 0.0));
    // rho(H^+ H') through the L x L matrix H' H^+ (equal nonzero spectrum).
    PseudoInverse pinv(H, 1e-12);
    d.rho = spectral_radius(Hs * pinv.dense());
    d.wall_held =
        d.rho * d.rho <= 1.0 + w_last.squaredNorm() / std::max(lambda_min, 1e-300) + 1e-9;
    return d;
}

}  // namespace

void McReport::write_csv(const std::filesystem::path& path) const {
    CsvWriter csv(path, {"L", "N", "trials", "pr_sigma_gt_rN", "rho_q50", "rho_q90", "rho_q99",
                         "lambda_min_mean"});
    for (const auto& c : cells)
        csv.row(std::vector<double>{static_cast<double>(c.L), static_cast<double>(c.N),
                                    static_cast<double>(c.trials), c.pr_sigma_gt_rN, c.rho_q50,
                                    c.rho_q90, c.rho_q99, c.lambda_min_mean});
}

McReport sample_spectra(const McConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("sample_spectra: trials must be >= 1");
    McReport report;
    for (int N : cfg.N_values) {
        if (N < cfg.L) throw std::invalid_argument("sample_spectra: N must be >= L");
        McCell cell;
        cell.L = cfg.L;
        cell.N = N;
        cell.trials = cfg.trials;
        cell.eps_N = eps_surrogate(cfg.L, N);
        const double rN = r_lower_bound(cfg.L, N);

        std::vector<double> rhos(cfg.trials), sigmas(cfg.trials);
        double lambda_sum = 0.0;
        int exceed = 0;
        for (int trial = 0; trial < cfg.trials; ++trial) {
            std::mt19937_64 rng = make_rng(cfg.seed, {0xa11, static_cast<std::uint64_t>(cfg.L),
                                                      static_cast<std::uint64_t>(N),
                                                      static_cast<std::uint64_t>(trial)});
            const SpectraDraw d = one_spectra_draw(cfg.L, N, rng);
            rhos[trial] = d.rho;
            sigmas[trial] = d.sigma_min;
            lambda_sum += d.lambda_min;
            if (d.sigma_min > rN) ++exceed;
            if (!d.wall_held) cell.wall_bound_held = false;
        }
        cell.pr_sigma_gt_rN = static_cast<double>(exceed) / cfg.trials;
        auto q = quantiles_sorted(rhos, {0.5, 0.9, 0.99});
        cell.rho_q50 = q[0];
        cell.rho_q90 = q[1];
        cell.rho_q99 = q[2];
        cell.sigma_min_median = quantiles_sorted(sigmas, {0.5})[0];
        cell.lambda_min_mean = lambda_sum / cfg.trials;
        report.cells.push_back(cell);
    }
    return report;
}

std::vector<HwResult> verify_hw_corollary(const std::vector<int>& n_values, double alpha,
                                          int trials, std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("verify_hw_corollary: alpha must be in (0, 1)");
    std::vector<HwResult> out;
    for (int n : n_values) {
        HwResult res;
        res.n = n;
        int ok_sq = 0, ok_prod = 0;
        for (int trial = 0; trial < trials; ++trial) {
            std::mt19937_64 rng = make_rng(seed, {0xb22, static_cast<std::uint64_t>(n),
                                                  static_cast<std::uint64_t>(trial)});
            double sum_sq = 0.0, sum_prod = 0.0;
            double prev = gauss(rng);
            sum_sq = prev * prev;
            for (int k = 1; k < n; ++k) {
                const double x = gauss(rng);
                sum_sq += x * x;
                sum_prod += prev * x;  // sigma(k) = k + 1
                prev = x;
            }
            if (std::abs(sum_sq - n) < alpha * n) ++ok_sq;
            if (std::abs(sum_prod) < alpha * n) ++ok_prod;
        }
        res.pr_squares = static_cast<double>(ok_sq) / trials;
        res.pr_products = static_cast<double>(ok_prod) / trials;
        out.push_back(res);
    }
    return out;
}

namespace {

struct DynamicsDraw {
    double rho = 0.0;
    bool diverged = false;
    double lambda_min_u = 0.0;
};

DynamicsDraw dynamics_draw(const StateSpaceModel& plant, int L, int N, double noise_std,
                           double gauss_clip, bool truncate, int rollout_steps,
                           double divergence_factor, std::uint64_t seed) {
    StateSpaceModel sim = plant;
    sim.reset();
    // Separate streams so the noise-free companion sees the same probing.
    std::mt19937_64 u_rng = make_rng(seed, {0xc33});
    std::mt19937_64 w_rng = make_rng(seed, {0xc34});
    Trajectory data;
    data.dt = plant.dt;
    for (int t = 0; t < N + 1; ++t) {
        const double u = truncate ? truncated_gauss(u_rng, gauss_clip) : gauss(u_rng);
        data.inputs.push_back(u);
        data.outputs.push_back(sim.output() + (noise_std > 0 ? gauss(w_rng, noise_std) : 0.0));
        sim.step(u);
    }

    HankelSystem::Options opt;
    opt.L = L;
    opt.noisy = noise_std > 0;
    HankelSystem hankel_sys(data, opt);

    DynamicsDraw d;
    d.rho = hankel_sys.stability_radius();
    {
        const MatrixXd& Hu = hankel_sys.Hu();
        d.lambda_min_u = min_eigenvalue_sym(Hu * Hu.transpose());
    }
    // continue the collected trajectory: last window of the data
    Window w0 = Window::zeros(L);
    for (int i = 0; i < L; ++i) {
        w0.u(i) = data.inputs[data.inputs.size() - 1 - L + i];
        w0.y(i) = data.outputs[data.outputs.size() - 1 - L + i];
    }
    VectorXd alpha0 = hankel_sys.solve_alpha(w0).alpha;
    FreeResponse fr = hankel_sys.free_response_rollout(alpha0, rollout_steps, divergence_factor);
    d.diverged = fr.diverged;
    return d;
}

}  // namespace

NoisyRolloutReport noisy_rollout_experiment(const StateSpaceModel& plant,
                                            const NoisyRolloutConfig& cfg) {
    NoisyRolloutReport report;
    for (int s = 0; s < cfg.seeds; ++s) {
        const std::uint64_t seed = mix_seed(cfg.seed, {0xd44, static_cast<std::uint64_t>(s)});
        NoisyRolloutSeedTrace trace;
        trace.seed = seed;
        DynamicsDraw noisy =
            dynamics_draw(plant, cfg.L, cfg.N_small, cfg.noise_std, cfg.gauss_clip,
                          /*truncate=*/false, cfg.rollout_steps, cfg.divergence_factor, seed);
        DynamicsDraw clean =
            dynamics_draw(plant, cfg.L, cfg.N_small, 0.0, cfg.gauss_clip,
                          /*truncate=*/false, cfg.rollout_steps, cfg.divergence_factor, seed);
        DynamicsDraw clean_long =
            dynamics_draw(plant, cfg.L, cfg.N_adequate, 0.0, cfg.gauss_clip,
                          /*truncate=*/false, cfg.rollout_steps, cfg.divergence_factor, seed);
        trace.rho_noisy = noisy.rho;
        trace.rho_noisefree = clean.rho;
        trace.rho_noisefree_long = clean_long.rho;
        trace.diverged = noisy.diverged;
        trace.noisefree_diverged = clean.diverged;
        trace.noisefree_long_diverged = clean_long.diverged;
        report.short_data.push_back(trace);
    }
    for (int N : cfg.N_sweep) {
        NoisyRolloutSweepCell cell;
        cell.N = N;
        std::vector<double> rhos, lambdas;
        int below = 0;
        for (int s = 0; s < cfg.seeds; ++s) {
            const std::uint64_t seed =
                mix_seed(cfg.seed, {0xe55, static_cast<std::uint64_t>(N),
                                    static_cast<std::uint64_t>(s)});
            DynamicsDraw d = dynamics_draw(plant, cfg.L, N, cfg.noise_std, cfg.gauss_clip,
                                           /*truncate=*/true, /*rollout_steps=*/0,
                                           cfg.divergence_factor, seed);
            rhos.push_back(d.rho);
            lambdas.push_back(d.lambda_min_u);
            if (d.rho < 1.0 + report.band) ++below;
        }
        cell.pr_rho_below = static_cast<double>(below) / cfg.seeds;
        cell.rho_median = quantiles_sorted(rhos, {0.5})[0];
        cell.lambda_min_u_median = quantiles_sorted(lambdas, {0.5})[0];
        report.sweep.push_back(cell);
    }
    return report;
}

}  // namespace ykrl
