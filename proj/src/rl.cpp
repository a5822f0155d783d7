#include "ykrl/rl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "ykrl/csv.hpp"
#include "ykrl/rng.hpp"

namespace ykrl {

namespace {

class YoulaWrappedController : public Controller {
  public:
    explicit YoulaWrappedController(YoulaController ctrl) : ctrl_(std::move(ctrl)) {}

    double act(double r, double y_measured) override {
        proposal_ = ctrl_.propose(r, y_measured);
        return ctrl_.mode() == ControlMode::incremental ? proposal_.delta_u : proposal_.u;
    }
    void observe_applied(double u_realized) override { ctrl_.commit(u_realized); }
    double last_delta() const override { return proposal_.delta_u; }

  private:
    YoulaController ctrl_;
    YoulaController::Proposal proposal_;
};

}  // namespace

YoulaPolicy::YoulaPolicy(QLtiParams params, std::shared_ptr<const HankelSystem> sys,
                         YoulaOptions options)
    : params_(std::move(params)), sys_(std::move(sys)), options_(options) {}

YoulaPolicy::YoulaPolicy(QNonlinearParams params, std::shared_ptr<const HankelSystem> sys,
                         YoulaOptions options)
    : params_(std::move(params)), sys_(std::move(sys)), options_(options) {}

int YoulaPolicy::dim() const {
    return std::visit([](const auto& p) { return p.param_count(); }, params_);
}

VectorXd YoulaPolicy::flatten() const {
    return std::visit([](const auto& p) { return p.flatten(); }, params_);
}

void YoulaPolicy::unflatten(const VectorXd& theta) {
    std::visit([&](auto& p) { p.unflatten(theta); }, params_);
}

std::unique_ptr<Controller> YoulaPolicy::make_controller() const {
    QOperator q = std::visit([](const auto& p) { return QOperator(p.realize()); }, params_);
    return std::make_unique<YoulaWrappedController>(
        YoulaController(sys_, std::move(q), options_));
}

std::unique_ptr<Policy> YoulaPolicy::clone() const { return std::make_unique<YoulaPolicy>(*this); }

EpisodeLog rollout(Env& env, const Policy& policy, const std::function<double(int)>& reference,
                   const RewardFn& reward, const RolloutConfig& cfg, std::uint64_t seed) {
    EpisodeLog log;
    log.dt = env.sample_time();
    log.gamma = cfg.gamma_rl;
    env.reset(seed);
    auto ctrl = policy.make_controller();
    double discount = 1.0;
    for (int t = 0; t < cfg.steps; ++t) {
        const double r = reference(t);
        const double y = env.observe();
        if (!std::isfinite(y) || std::abs(y) > cfg.abort_threshold) {
            log.aborted = true;
            log.abort_step = t;
            log.reward.push_back(cfg.abort_penalty);
            log.discounted_return += discount * cfg.abort_penalty;
            break;
        }
        const double e_true = r - env.true_output();
        const double action = ctrl->act(r, y);
        env.apply(action);
        ctrl->observe_applied(env.applied_input());

        log.r.push_back(r);
        log.y.push_back(y);
        log.u.push_back(env.applied_input());
        log.e.push_back(r - y);
        const double rw = reward ? reward(e_true, ctrl->last_delta()) : 0.0;
        log.reward.push_back(rw);
        log.discounted_return += discount * rw;
        discount *= cfg.gamma_rl;
    }
    return log;
}

RandomSearchOptimizer::RandomSearchOptimizer(RandomSearchConfig cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(make_rng(seed, {0x5e})) {}

VectorXd RandomSearchOptimizer::step(const VectorXd& theta,
                                     const std::function<double(const VectorXd&, int)>& evaluate) {
    VectorXd grad = VectorXd::Zero(theta.size());
    int used = 0;
    for (int i = 0; i < cfg_.k; ++i) {
        const VectorXd delta = gauss_vector(rng_, theta.size());
        const double j_plus = evaluate(theta + cfg_.sigma * delta, i);
        const double j_minus = evaluate(theta - cfg_.sigma * delta, i);
        if (!std::isfinite(j_plus) || !std::isfinite(j_minus)) {
            ++dropped_;
            continue;
        }
        grad += (j_plus - j_minus) * delta;
        ++used;
    }
    if (used == 0) return theta;
    grad /= 2.0 * cfg_.sigma * cfg_.k;
    return theta + cfg_.eta * grad;
}

void TrainResult::write_rewards_csv(const std::filesystem::path& path) const {
    CsvWriter csv(path, {"session", "episode", "return"});
    for (Eigen::Index s = 0; s < returns.rows(); ++s)
        for (Eigen::Index e = 0; e < returns.cols(); ++e)
            csv.row(std::vector<double>{static_cast<double>(s), static_cast<double>(e),
                                        returns(s, e)});
}

void TrainResult::write_summary_csv(const std::filesystem::path& path) const {
    CsvWriter csv(path, {"episode", "median", "q25", "q75"});
    for (std::size_t e = 0; e < episode_median.size(); ++e)
        csv.row(std::vector<double>{static_cast<double>(e), episode_median[e], episode_q25[e],
                                    episode_q75[e]});
}

std::vector<double> quantiles_sorted(std::vector<double> values, const std::vector<double>& qs) {
    std::sort(values.begin(), values.end());
    std::vector<double> out;
    out.reserve(qs.size());
    for (double q : qs) {
        if (values.empty()) {
            out.push_back(0.0);
            continue;
        }
        const double pos = q * static_cast<double>(values.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        out.push_back(values[lo] * (1.0 - frac) + values[hi] * frac);
    }
    return out;
}

TrainResult train(const EnvFactory& env_factory, const PolicyFactory& policy_factory,
                  const std::function<double(int)>& reference, const RewardFn& reward,
                  const TrainConfig& cfg) {
    TrainResult result;
    result.returns = MatrixXd::Zero(cfg.sessions, cfg.episodes);
    result.instability_aborts.assign(cfg.sessions, 0);

    auto run_session = [&](int session) {
        std::mt19937_64 init_rng = make_rng(cfg.seed, {0xa0, static_cast<std::uint64_t>(session)});
        std::unique_ptr<Policy> policy = policy_factory(init_rng);
        std::unique_ptr<Env> env = env_factory();
        RandomSearchOptimizer opt(cfg.optimizer,
                                  mix_seed(cfg.seed, {0xb1, static_cast<std::uint64_t>(session)}));
        VectorXd theta = policy->flatten();
        long aborts = 0;

        for (int episode = 0; episode < cfg.episodes; ++episode) {
            policy->unflatten(theta);
            const std::uint64_t eval_seed =
                mix_seed(cfg.seed, {0xc2, static_cast<std::uint64_t>(session),
                                    static_cast<std::uint64_t>(episode)});
            EpisodeLog log = rollout(*env, *policy, reference, reward, cfg.rollout, eval_seed);
            result.returns(session, episode) = log.discounted_return;
            if (log.aborted) ++aborts;

            auto evaluate = [&](const VectorXd& candidate, int direction) {
                policy->unflatten(candidate);
                const std::uint64_t pert_seed =
                    mix_seed(cfg.seed, {0xd3, static_cast<std::uint64_t>(session),
                                        static_cast<std::uint64_t>(episode),
                                        static_cast<std::uint64_t>(direction)});
                EpisodeLog plog = rollout(*env, *policy, reference, reward, cfg.rollout, pert_seed);
                if (plog.aborted) ++aborts;
                return plog.discounted_return;
            };
            theta = opt.step(theta, evaluate);
            if (cfg.post_update) theta = cfg.post_update(theta, session, episode);
        }
        policy->unflatten(theta);
        result.instability_aborts[session] = aborts;
    };

    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, cfg.sessions));
    if (threads == 1) {
        for (int s = 0; s < cfg.sessions; ++s) run_session(s);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&]() {
                for (int s = next.fetch_add(1); s < cfg.sessions; s = next.fetch_add(1))
                    run_session(s);
            });
        for (auto& th : pool) th.join();
    }

    result.episode_median.resize(cfg.episodes);
    result.episode_q25.resize(cfg.episodes);
    result.episode_q75.resize(cfg.episodes);
    for (int e = 0; e < cfg.episodes; ++e) {
        std::vector<double> col(cfg.sessions);
        for (int s = 0; s < cfg.sessions; ++s) col[s] = result.returns(s, e);
        auto q = quantiles_sorted(col, {0.25, 0.5, 0.75});
        result.episode_q25[e] = q[0];
        result.episode_median[e] = q[1];
        result.episode_q75[e] = q[2];
    }
    return result;
}

}  // namespace ykrl
