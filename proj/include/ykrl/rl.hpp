#pragma once

#include <functional>
#include <memory>

#include "ykrl/youla.hpp"

namespace ykrl {

// Per-episode actor created fresh from a policy's parameters.
class Controller {
  public:
    virtual ~Controller() = default;
    virtual double act(double r, double y_measured) = 0;      // action for Env::apply
    virtual void observe_applied(double u_realized) = 0;      // post-step bookkeeping
    virtual double last_delta() const = 0;                    // Q/increment output this step
};

// Trainable policy: a flat parameter view plus a controller factory. Every
// finite parameter vector realizes a stable operator, so the search is
// unconstrained.
class Policy {
  public:
    virtual ~Policy() = default;
    virtual int dim() const = 0;
    virtual VectorXd flatten() const = 0;
    virtual void unflatten(const VectorXd& theta) = 0;
    virtual std::unique_ptr<Controller> make_controller() const = 0;
    virtual std::unique_ptr<Policy> clone() const = 0;
};

// Q-parameter policy wired through the data-driven controller.
class YoulaPolicy : public Policy {
  public:
    YoulaPolicy(QLtiParams params, std::shared_ptr<const HankelSystem> sys, YoulaOptions options);
    YoulaPolicy(QNonlinearParams params, std::shared_ptr<const HankelSystem> sys,
                YoulaOptions options);

    int dim() const override;
    VectorXd flatten() const override;
    void unflatten(const VectorXd& theta) override;
    std::unique_ptr<Controller> make_controller() const override;
    std::unique_ptr<Policy> clone() const override;

  private:
    std::variant<QLtiParams, QNonlinearParams> params_;
    std::shared_ptr<const HankelSystem> sys_;
    YoulaOptions options_;
};

struct RolloutConfig {
    int steps = 200;
    double gamma_rl = 1.0;
    double abort_threshold = 1e6;
    double abort_penalty = -1e3;
};

// One episode: deterministic given the seed. Instability aborts are logged
// outcomes, not errors; the abort step receives the penalty reward.
EpisodeLog rollout(Env& env, const Policy& policy, const std::function<double(int)>& reference,
                   const RewardFn& reward, const RolloutConfig& cfg, std::uint64_t seed);

struct RandomSearchConfig {
    int k = 8;            // perturbation directions per step
    double sigma = 0.05;  // perturbation scale
    double eta = 0.02;    // step size
};

// Antithetic random-search gradient estimate:
//   grad ~ 1/(2 sigma k) sum_i (J(theta + sigma d_i) - J(theta - sigma d_i)) d_i.
// The evaluate callback receives the perturbed parameters and the
// perturbation index (for common-random-number seeding); pairs with a
// non-finite value on either side are dropped and counted.
class RandomSearchOptimizer {
  public:
    RandomSearchOptimizer(RandomSearchConfig cfg, std::uint64_t seed);

    VectorXd step(const VectorXd& theta,
                  const std::function<double(const VectorXd&, int)>& evaluate);

    long dropped_evaluations() const { return dropped_; }

  private:
    RandomSearchConfig cfg_;
    std::mt19937_64 rng_;
    long dropped_ = 0;
};

struct TrainConfig {
    int sessions = 20;
    int episodes = 100;
    RolloutConfig rollout;
    RandomSearchConfig optimizer;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency
    // Applied to each optimizer proposal before the next episode (projection
    // hook); receives (theta, session, episode).
    std::function<VectorXd(const VectorXd&, int, int)> post_update;
};

struct TrainResult {
    MatrixXd returns;                    // sessions x episodes
    std::vector<long> instability_aborts;  // per session
    std::vector<double> episode_median, episode_q25, episode_q75;

    void write_rewards_csv(const std::filesystem::path& path) const;   // session,episode,return
    void write_summary_csv(const std::filesystem::path& path) const;   // episode,median,q25,q75
};

using EnvFactory = std::function<std::unique_ptr<Env>()>;
using PolicyFactory = std::function<std::unique_ptr<Policy>(std::mt19937_64&)>;

// Multi-session training: sessions run independently (in parallel when
// threads allow) with seeds derived from the config seed, so results do not
// depend on scheduling. Episode e records the return of the current policy
// before the optimizer update for that episode.
TrainResult train(const EnvFactory& env_factory, const PolicyFactory& policy_factory,
                  const std::function<double(int)>& reference, const RewardFn& reward,
                  const TrainConfig& cfg);

std::vector<double> quantiles_sorted(std::vector<double> values,
                                     const std::vector<double>& qs);

}  // namespace ykrl
