#include "ykrl/youla.hpp"

#include <cmath>

#include "ykrl/csv.hpp"
#include "ykrl/errors.hpp"

namespace ykrl {

YoulaController::YoulaController(std::shared_ptr<const HankelSystem> sys, QOperator q,
                                 YoulaOptions options)
    : sys_(std::move(sys)), q_(std::move(q)), options_(options),
      window_(Window::zeros(sys_->window_length())), last_u_(options.u_offset) {}

YoulaController::Proposal YoulaController::propose(double r, double y_measured) {
    if (pending_) throw std::logic_error("YoulaController: commit() before the next propose()");
    Proposal p;
    const double e = r - y_measured;
    p.y_pred = sys_->predict_next(window_);  // deviation units
    const double r_hat = e + p.y_pred;
    p.delta_u = std::visit([&](auto& q) { return q.step(r_hat); }, q_);
    if (options_.mode == ControlMode::incremental) {
        p.u = std::min(std::max(last_u_ + p.delta_u, options_.u_min), options_.u_max);
    } else {
        p.u = options_.u_offset + p.delta_u;
    }
    pending_y_pred_ = p.y_pred;
    pending_ = true;
    return p;
}

void YoulaController::commit(double u_applied) {
    if (!pending_) throw std::logic_error("YoulaController: propose() before commit()");
    window_.push(u_applied - options_.u_offset, pending_y_pred_);
    last_u_ = u_applied;
    pending_ = false;
}

double YoulaController::step(double r, double y_measured) {
    const Proposal p = propose(r, y_measured);
    commit(p.u);
    return p.u;
}

void YoulaController::reset() {
    window_ = Window::zeros(sys_->window_length());
    last_u_ = options_.u_offset;
    pending_ = false;
    std::visit([](auto& q) { q.reset(); }, q_);
}

YkOracle::YkOracle(StateSpaceModel plant, StableLinearOperator q)
    : plant_(std::move(plant)), plant_model_(plant_), q_(std::move(q)) {
    plant_.reset();
    plant_model_.reset();
    q_.reset();
}

YkOracle::StepResult YkOracle::step(double r) {
    StepResult res;
    res.y = plant_.output();
    const double e = r - res.y;
    const double y_model = plant_model_.output();
    const double r_hat = e + y_model;
    res.u = q_.step(r_hat);
    plant_.step(res.u);
    plant_model_.step(res.u);
    return res;
}

void YkOracle::reset() {
    plant_.reset();
    plant_model_.reset();
    q_.reset();
}

double EpisodeLog::recompute_return() const {
    double acc = 0.0;
    double g = 1.0;
    for (double rw : reward) {
        acc += g * rw;
        g *= gamma;
    }
    return acc;
}

void EpisodeLog::write_csv(const std::filesystem::path& path) const {
    CsvWriter csv(path, {"t", "r", "y", "u", "e", "reward"});
    for (std::size_t i = 0; i < r.size(); ++i)
        csv.row(std::vector<double>{static_cast<double>(i) * dt, r[i], y[i], u[i], e[i],
                                    i < reward.size() ? reward[i] : 0.0});
}

EpisodeLog closed_loop_run(Env& env, YoulaController& ctrl,
                           const std::function<double(int)>& reference, int steps,
                           const NoiseConfig& noise, const RewardFn& reward, double gamma,
                           double abort_threshold) {
    EpisodeLog log;
    log.dt = env.sample_time();
    log.gamma = gamma;
    env.reset(noise.seed);
    ctrl.reset();
    double discount = 1.0;
    for (int t = 0; t < steps; ++t) {
        const double r = reference(t);
        const double y = env.observe();
        if (!std::isfinite(y) || std::abs(y) > abort_threshold) {
            log.aborted = true;
            log.abort_step = t;
            break;
        }
        const double e_true = r - env.true_output();
        const YoulaController::Proposal p = ctrl.propose(r, y);
        const double action = env.action_is_delta() ? p.delta_u : p.u;
        env.apply(action);
        const double u_applied = env.applied_input();
        ctrl.commit(u_applied);

        log.r.push_back(r);
        log.y.push_back(y);
        log.u.push_back(u_applied);
        log.e.push_back(r - y);
        const double rw = reward ? reward(e_true, p.delta_u) : 0.0;
        log.reward.push_back(rw);
        log.discounted_return += discount * rw;
        discount *= gamma;
    }
    return log;
}

}  // namespace ykrl
