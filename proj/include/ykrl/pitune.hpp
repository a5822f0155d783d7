#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "ykrl/envs.hpp"
#include "ykrl/hankel.hpp"
#include "ykrl/rl.hpp"
#include "ykrl/stable_ops.hpp"

namespace ykrl {

struct PiParams {
    double kp = 0.0;
    double ki = 0.0;
    double dt = 1.0;
};

// Velocity form: u_t = kp (e_t - e_{t-1}) + ki e_t dt + u_{t-1}.
double pi_policy_step(const PiParams& pi, double e, double e_prev, double u_prev);

struct StabilityOracleResult {
    bool stable = false;
    double rho_cl = 0.0;
};

// Exact closed loop of the discretized plant with the PI law in its minimal
// realization (integrator state dropped when ki == 0, so the open-loop case
// reports the plant's own spectral radius).
StabilityOracleResult model_stability_oracle(const PiParams& pi, const StateSpaceModel& plant);

// Boundary samples rho_cl(kp, ki) = 1, one kp per ki (scan plus bisection).
std::vector<std::pair<double, double>> stability_boundary(const StateSpaceModel& plant,
                                                          double pi_dt,
                                                          const std::vector<double>& ki_values,
                                                          double kp_max);

struct CertificateOptions {
    int horizon = 80;       // impulse-comparison length T_c
    int order = 6;          // realization order n_c for X, Y, W
    double tol_feas = 1e-3;
    int nm_budget = 500;    // simplex evaluations per fitted operator
    double margin = 0.05;   // eigenvalue margin: rho(A) <= 1 - margin
};

// X, Y, W as stable-by-construction realizations fitted to the data-driven
// closed-loop maps 1/(1+PK), K/(1+PK), P/(1+PK); the residuals re-check the
// affine relations end to end with P applied through the Hankel model.
struct AffineCertificate {
    QLtiParams X, Y, W;
    double residual_primary = 0.0;    // ||X + P Y - I|| over the horizon
    double residual_secondary = 0.0;  // ||W - P X||
    double eig_margin = 0.0;          // max rho(A) over the three realizations
    bool converged = false;

    bool feasible(const CertificateOptions& opt) const {
        return converged && residual_primary < opt.tol_feas &&
               residual_secondary < opt.tol_feas && eig_margin <= 1.0 - opt.margin;
    }
};

AffineCertificate fit_certificate(const PiParams& pi, const HankelSystem& sys,
                                  const CertificateOptions& options = {});

struct ProjectionOptions {
    CertificateOptions cert;
    int nm_budget = 60;     // certificate evaluations inside the projection search
    double tol_step = 1e-3; // bisection resolution along the feasible segment
};

// Nearest feasible parameters (Euclidean): returns theta_hat unchanged when
// already feasible, otherwise a penalty-method simplex search started from
// the last feasible point (or the K = 0 anchor). Throws
// InfeasibleProjectionError when no feasible point is found.
PiParams project_pi(const PiParams& theta_hat, const HankelSystem& sys,
                    const ProjectionOptions& options = {},
                    const PiParams* last_feasible = nullptr);

// Fixed-structure PI policy for the RL loop.
class PiPolicy : public Policy {
  public:
    PiPolicy(PiParams params, double u_min = -1e18, double u_max = 1e18);

    int dim() const override { return 2; }
    VectorXd flatten() const override;
    void unflatten(const VectorXd& theta) override;
    std::unique_ptr<Controller> make_controller() const override;
    std::unique_ptr<Policy> clone() const override;

    const PiParams& params() const { return params_; }

  private:
    PiParams params_;
    double u_min_, u_max_;
};

struct PiTuneConfig {
    double plant_dt = 0.1;
    int data_length = 240;       // exploration samples for the Hankel model
    int hankel_L = 8;
    int sessions = 10;
    int episodes = 60;
    int steps = 120;             // per episode
    double gamma_rl = 0.995;
    double reward_delta = 0.05;  // sparse band
    RandomSearchConfig optimizer{4, 0.3, 0.003};
    bool constrained = true;
    CertificateOptions cert;
    std::uint64_t seed = 0;
    int threads = 0;
    double init_kp_max = 0.6;    // uniform random start box
    double init_ki_max = 0.6;
};

struct HeatmapEntry {
    double kp = 0.0, ki = 0.0;
    bool post = false;  // pre- or post-projection
    int session = 0;
};

struct PiTuneResult {
    TrainResult training;
    std::vector<HeatmapEntry> heatmap;        // visited parameters (pre/post)
    std::vector<PiParams> final_params;       // per session
    long projection_failures = 0;

    // kp,ki,phase(pre|post),session
    void write_heatmap_csv(const std::filesystem::path& path) const;
};

// RL over (kp, ki) with the sparse reward; constrained mode projects every
// optimizer proposal back into the certified-stable set.
PiTuneResult constrained_training_run(const PiTuneConfig& cfg);

// The exploration record + Hankel model the tuning task runs on.
std::shared_ptr<const HankelSystem> pitune_hankel_model(const PiTuneConfig& cfg);
StateSpaceModel pitune_plant(const PiTuneConfig& cfg);

}  // namespace ykrl
