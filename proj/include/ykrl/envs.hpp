#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <utility>

#include <Eigen/Core>

#include "ykrl/linalg.hpp"

namespace ykrl {

// Strictly proper discrete-time SISO model: x+ = A x + B u, y = C x.
struct StateSpaceModel {
    MatrixXd A;
    VectorXd B;
    RowVectorXd C;
    double dt = 1.0;
    VectorXd x;

    StateSpaceModel() = default;
    StateSpaceModel(MatrixXd A_, VectorXd B_, RowVectorXd C_, double dt_);

    int order() const { return static_cast<int>(A.rows()); }
    double output() const { return C.dot(x); }
    // y = C x, then x <- A x + B u.
    double step(double u);
    void reset();
};

// Zero-order-hold discretization via the augmented-matrix exponential.
std::pair<MatrixXd, VectorXd> discretize_zoh(const MatrixXd& Ac, const VectorXd& Bc, double dt);

// The continuous-time benchmark P(s) = (1 - s) / (s + 1)^3, ZOH-discretized.
StateSpaceModel nonminimum_phase_plant(double dt);

// Random stable SISO plant with rho(A) <= rho_max, controllable/observable
// with probability one.
StateSpaceModel random_stable_plant(std::mt19937_64& rng, int order, double rho_max = 0.95,
                                    double dt = 1.0);

// Velocity-form PID: u_t = u_{t-1} + kp (e_t - e_{t-1}) + ki e_t dt
//                        + kd (e_t - 2 e_{t-1} + e_{t-2}) / dt,
// clamped to [u_min, u_max]; storing the clamped value gives anti-windup.
struct PidController {
    double kp = 0.0, ki = 0.0, kd = 0.0;
    double dt = 1.0;
    double u_min = -1e18, u_max = 1e18;

    double e_prev = 0.0, e_prev2 = 0.0;
    double u_prev = 0.0;

    double step(double e);
    // Same update with an extra additive increment (the RL correction).
    double step_with_offset(double e, double delta_u_extra);
    void reset(double u0 = 0.0);
};

struct TankParams {
    double tau_p = 2.0;     // pump lag [s]
    double tau_in = 3.0;    // inflow lag [s]
    double tau_out = 5.0;   // outflow lag [s]
    double tau_m = 1.0;     // measurement lag [s]
    double r_tank = 0.25;   // tank radius [m]
    double r_pipe = 0.04;   // outflow pipe radius [m]
    double f_c = 0.5;       // discharge coefficient
    double f_max = 0.025;   // pump capacity [m^3/s]
    double g = 9.81;        // [m/s^2]
    double noise_var = 0.015;  // level-measurement noise variance [m^2]
    double dt = 0.5;        // control sample time [s]
    int substeps = 5;       // RK4 substeps per sample
};

struct TankState {
    double p = 0.0;      // pump speed [%], clamped to [0, 100]
    double f_in = 0.0;   // inflow [m^3/s]
    double f_out = 0.0;  // outflow [m^3/s]
    double level = 0.0;  // true level [m], floored at 0
    double m = 0.0;      // filtered measured level [m]
};

// Steady state holding the given level (pump percentage included).
TankState tank_equilibrium(const TankParams& params, double level);
// Flow setpoint that holds the given level at steady state.
double tank_equilibrium_inflow(const TankParams& params, double level);

// One dt sample of the five ODEs under a held pump setpoint (RK4 substeps).
TankState tank_advance(const TankState& state, const TankParams& params, double pump_setpoint);

// One dt sample of the five-ODE cascade with both PID loops in the loop.
// delta_u_q is added to the level-PID increment (incremental RL correction).
struct TankStepResult {
    TankState state;
    double measured_level = 0.0;       // m + measurement noise
    double flow_setpoint = 0.0;        // applied u_t (level PID + correction)
    double pump_setpoint = 0.0;
};
TankStepResult tank_step(const TankState& state, const TankParams& params,
                         PidController& level_pid, PidController& flow_pid, double level_sp,
                         double delta_u_q, std::mt19937_64& rng);

// Reward callbacks take the (noise-free) tracking error and the step's
// control increment.
using RewardFn = std::function<double(double e, double delta_u)>;

struct RewardParams {
    double delta = 0.05;    // sparse band
    double lambda = 0.0;    // control-increment weight
    double e_scale = 0.25;  // banded-kind error normalization
};

// Kinds: "sparse"  -> 1 if |e| < delta else 0
//        "tank"    -> -|e| - lambda |delta_u|
//        "banded"  -> max(0, 1 - |e| / e_scale) - lambda |delta_u|
RewardFn make_reward(const std::string& kind, const RewardParams& cfg);

// Environment abstraction used by the RL rollouts. Observations and actions
// are scalar; `action_is_delta` marks environments that integrate the action
// themselves (the tank cascade).
class Env {
  public:
    virtual ~Env() = default;
    virtual void reset(std::uint64_t seed) = 0;
    virtual double observe() const = 0;       // measured output (possibly noisy)
    virtual double true_output() const = 0;   // noise-free output, for rewards
    virtual double apply(double action) = 0;  // advance one sample
    virtual double applied_input() const = 0; // realized plant input
    virtual bool action_is_delta() const { return false; }
    virtual double sample_time() const = 0;
};

// LTI plant with optional output measurement noise.
class LtiEnv : public Env {
  public:
    LtiEnv(StateSpaceModel plant, double noise_std = 0.0);

    void reset(std::uint64_t seed) override;
    double observe() const override { return y_meas_; }
    double true_output() const override { return plant_.output(); }
    double apply(double action) override;
    double applied_input() const override { return last_u_; }
    double sample_time() const override { return plant_.dt; }

    const StateSpaceModel& plant() const { return plant_; }

  private:
    StateSpaceModel plant_;
    double noise_std_;
    double y_meas_ = 0.0;
    double last_u_ = 0.0;
    std::mt19937_64 rng_;
};

// Two-tank process with the cascaded PID pair inside the environment. The
// action is the increment added on top of the level PID output; the realized
// plant input is the total flow setpoint.
class TankEnv : public Env {
  public:
    TankEnv(TankParams params, PidController level_pid, PidController flow_pid,
            double initial_level);

    void reset(std::uint64_t seed) override;
    double observe() const override { return measured_; }
    double true_output() const override { return state_.m; }
    double apply(double delta_u_q) override;
    double applied_input() const override { return last_flow_sp_; }
    bool action_is_delta() const override { return true; }
    double sample_time() const override { return params_.dt; }

    void set_level_setpoint(double sp) { level_sp_ = sp; }
    // Per-step setpoint schedule; overrides the fixed setpoint when set.
    void set_setpoint_profile(std::function<double(int)> profile) {
        profile_ = std::move(profile);
    }
    double level_setpoint() const { return level_sp_; }
    const TankState& state() const { return state_; }
    const TankParams& params() const { return params_; }

  private:
    TankParams params_;
    PidController level_pid_proto_, flow_pid_proto_;
    PidController level_pid_, flow_pid_;
    double initial_level_;
    TankState state_;
    double measured_ = 0.0;
    double last_flow_sp_ = 0.0;
    double level_sp_ = 0.0;
    std::function<double(int)> profile_;
    int step_count_ = 0;
    std::mt19937_64 rng_;
};

// Tank defaults used by the experiments: a sluggish level loop that the
// learned correction can speed up, and a fast inner flow loop.
PidController default_level_pid(const TankParams& params);
PidController default_flow_pid(const TankParams& params);

}  // namespace ykrl
