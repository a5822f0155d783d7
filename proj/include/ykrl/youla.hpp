#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <variant>

#include "ykrl/envs.hpp"
#include "ykrl/hankel.hpp"
#include "ykrl/stable_ops.hpp"

namespace ykrl {

using QOperator = std::variant<StableLinearOperator, StableNonlinearOperator>;

enum class ControlMode { absolute, incremental };

struct YoulaOptions {
    ControlMode mode = ControlMode::absolute;
    double u_min = -1e18;  // actuator limits, applied in incremental mode
    double u_max = 1e18;
    // Input operating point: the internal model works in deviation
    // coordinates u - u_offset (tracking errors are offset-free already).
    double u_offset = 0.0;
};

// Data-driven stabilizing controller: at each step it observes the tracking
// error, predicts the next output from its internal window, feeds
// r_hat = e + y_pred to the stable Q parameter, and slides the window with
// the applied input and the internal prediction. The measured output only
// enters through the error; Q absorbs the measurement/prediction mismatch.
class YoulaController {
  public:
    YoulaController(std::shared_ptr<const HankelSystem> sys, QOperator q, YoulaOptions options = {});

    struct Proposal {
        double u = 0.0;        // candidate applied input (integrated in incremental mode)
        double delta_u = 0.0;  // raw Q output
        double y_pred = 0.0;   // internal one-step prediction
    };

    // Error observation, prediction, and Q evaluation for one step.
    Proposal propose(double r, double y_measured);
    // Window update with the input that actually reached the plant.
    void commit(double u_applied);
    // propose + commit of the proposal's own input; returns the applied input.
    double step(double r, double y_measured);

    double last_input() const { return last_u_; }
    const Window& window() const { return window_; }
    const HankelSystem& system() const { return *sys_; }
    ControlMode mode() const { return options_.mode; }
    void reset();

  private:
    std::shared_ptr<const HankelSystem> sys_;
    QOperator q_;
    YoulaOptions options_;
    Window window_;
    double last_u_ = 0.0;
    double pending_y_pred_ = 0.0;
    bool pending_ = false;
};

// Exact state-space interconnection of K = Q / (1 - Q P) with the plant P,
// from zero initial states: an internal copy of P reconstructs the model
// output, r_hat = e + y_model drives Q.
class YkOracle {
  public:
    YkOracle(StateSpaceModel plant, StableLinearOperator q);

    struct StepResult {
        double u = 0.0;
        double y = 0.0;
    };
    StepResult step(double r);
    void reset();

    const StateSpaceModel& plant() const { return plant_; }

  private:
    StateSpaceModel plant_;        // the true loop
    StateSpaceModel plant_model_;  // internal copy driven by u
    StableLinearOperator q_;
};

// Full closed-loop episode record, CSV-exportable as t,r,y,u,e,reward.
struct EpisodeLog {
    std::vector<double> r, y, u, e, reward;
    double dt = 1.0;
    double gamma = 1.0;
    double discounted_return = 0.0;
    bool aborted = false;
    int abort_step = -1;

    std::size_t size() const { return r.size(); }
    double recompute_return() const;
    void write_csv(const std::filesystem::path& path) const;
};

struct NoiseConfig {
    double y_std = 0.0;
    std::uint64_t seed = 0;
};

// Harness: run the controller against an environment for a fixed number of
// steps. Aborts (flagging instability) when a signal leaves the finite range
// or |y| exceeds abort_threshold.
EpisodeLog closed_loop_run(Env& env, YoulaController& ctrl,
                           const std::function<double(int)>& reference, int steps,
                           const NoiseConfig& noise, const RewardFn& reward = {},
                           double gamma = 1.0, double abort_threshold = 1e6);

}  // namespace ykrl
