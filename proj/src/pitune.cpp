#include "ykrl/pitune.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ykrl/csv.hpp"
#include "ykrl/errors.hpp"
#include "ykrl/optim.hpp"
#include "ykrl/rng.hpp"

namespace ykrl {

double pi_policy_step(const PiParams& pi, double e, double e_prev, double u_prev) {
    return pi.kp * (e - e_prev) + pi.ki * e * pi.dt + u_prev;
}

StabilityOracleResult model_stability_oracle(const PiParams& pi, const StateSpaceModel& plant) {
    const int n = plant.order();
    StabilityOracleResult res;
    if (pi.kp == 0.0 && pi.ki == 0.0) {
        res.rho_cl = spectral_radius(plant.A);
        res.stable = res.rho_cl < 1.0;
        return res;
    }
    const double dt = pi.dt;
    MatrixXd Acl;
    if (pi.ki == 0.0) {
        // Pure proportional output feedback.
        Acl = plant.A - plant.B * (pi.kp * plant.C);
    } else {
        // Minimal PI realization with integrator state s: e = -C x (r = 0),
        //   u = kp e + ki dt (s + e),  s+ = s + e.
        Acl = MatrixXd::Zero(n + 1, n + 1);
        Acl.topLeftCorner(n, n) = plant.A - plant.B * ((pi.kp + pi.ki * dt) * plant.C);
        Acl.block(0, n, n, 1) = plant.B * (pi.ki * dt);
        Acl.block(n, 0, 1, n) = -plant.C;
        Acl(n, n) = 1.0;
    }
    res.rho_cl = spectral_radius(Acl);
    res.stable = res.rho_cl < 1.0;
    return res;
}

std::vector<std::pair<double, double>> stability_boundary(const StateSpaceModel& plant,
                                                          double pi_dt,
                                                          const std::vector<double>& ki_values,
                                                          double kp_max) {
    std::vector<std::pair<double, double>> boundary;
    for (double ki : ki_values) {
        auto stable_at = [&](double kp) {
            return model_stability_oracle({kp, ki, pi_dt}, plant).stable;
        };
        // upper edge of the stable segment: last stable kp on a scan grid,
        // then bisect against its unstable neighbor
        const int scan = 256;
        int last_stable = -1;
        for (int i = 0; i <= scan; ++i) {
            if (stable_at(kp_max * i / scan)) last_stable = i;
        }
        if (last_stable < 0 || last_stable == scan) continue;  // no crossing in range
        double lo = kp_max * last_stable / scan;
        double hi = kp_max * (last_stable + 1) / scan;
        for (int it = 0; it < 50; ++it) {
            const double mid = 0.5 * (lo + hi);
            (stable_at(mid) ? lo : hi) = mid;
        }
        boundary.emplace_back(0.5 * (lo + hi), ki);
    }
    return boundary;
}

namespace {

struct ClosedLoopTargets {
    std::vector<double> e;  // -> X = 1 / (1 + P K)
    std::vector<double> u;  // -> Y = K / (1 + P K)
    std::vector<double> w;  // -> W = P X = P / (1 + P K), i.e. P applied to e
    bool finite = true;
};

// Impulse response of the data-driven closed loop: the plant is the Hankel
// model stepped through its window, the controller the PI law.
ClosedLoopTargets dd_closed_loop_impulse(const PiParams& pi, const HankelSystem& sys, int steps) {
    ClosedLoopTargets out;
    Window win = Window::zeros(sys.window_length());
    double e_prev = 0.0, u_prev = 0.0;
    for (int t = 0; t < steps; ++t) {
        const double r = t == 0 ? 1.0 : 0.0;
        const double y_pred = sys.predict_next(win);
        const double e = r - y_pred;
        const double u = pi_policy_step(pi, e, e_prev, u_prev);
        if (!std::isfinite(y_pred) || !std::isfinite(u) || std::abs(u) > 1e100) {
            out.finite = false;
            break;
        }
        out.e.push_back(e);
        out.u.push_back(u);
        e_prev = e;
        u_prev = u;
        win.push(u, y_pred);
    }
    return out;
}

// Open-loop response of the Hankel model to the given input sequence.
std::vector<double> dd_apply_plant(const HankelSystem& sys, const std::vector<double>& input) {
    std::vector<double> out;
    out.reserve(input.size());
    Window win = Window::zeros(sys.window_length());
    for (double u : input) {
        const double y_pred = sys.predict_next(win);
        out.push_back(y_pred);
        win.push(u, y_pred);
    }
    return out;
}

std::vector<double> q_lti_impulse(const QLtiParams& params, int steps) {
    StableLinearOperator op = params.realize();
    std::vector<double> h(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t) h[t] = op.step(t == 0 ? 1.0 : 0.0);
    return h;
}

double l2_error(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

struct FittedOperator {
    QLtiParams params = QLtiParams::zeros(1);
    double target_error = 0.0;
    bool converged = false;
};

// Stable-by-construction fit of one impulse-response target: Ho-Kalman warm
// start mapped exactly into the parameterization, then a simplex polish.
FittedOperator fit_stable_operator(const std::vector<double>& target, int order, int horizon,
                                   int nm_budget) {
    FittedOperator out;
    std::vector<double> h(target.begin(),
                          target.begin() + std::min<std::size_t>(target.size(),
                                                                 static_cast<std::size_t>(
                                                                     horizon + 2 * order + 2)));
    Realization warm;
    try {
        warm = realize_impulse_response(h, order);
    } catch (const std::exception&) {
        warm.A = MatrixXd::Zero(order, order);
        warm.B = VectorXd::Zero(order);
        warm.C = RowVectorXd::Zero(order);
        warm.D = target.empty() ? 0.0 : target[0];
    }
    if (!warm.A.allFinite() || !warm.B.allFinite() || !warm.C.allFinite() ||
        !std::isfinite(warm.D)) {
        warm.A = MatrixXd::Zero(order, order);
        warm.B = VectorXd::Zero(order);
        warm.C = RowVectorXd::Zero(order);
        warm.D = 0.0;
    }
    const double rho = spectral_radius(warm.A);
    if (rho >= 0.999) warm.A *= 0.99 / rho;  // contract into the admissible set

    QLtiParams init = QLtiParams::zeros(order);
    init.core = stable_matrix_params_for(warm.A);
    init.B = warm.B;
    init.C = warm.C;
    init.D = warm.D;

    std::vector<double> goal(target.begin(),
                             target.begin() + std::min<std::size_t>(
                                                  target.size(), static_cast<std::size_t>(horizon)));
    auto objective = [&](const VectorXd& theta) {
        QLtiParams candidate = QLtiParams::zeros(order);
        candidate.unflatten(theta);
        return l2_error(q_lti_impulse(candidate, horizon), goal);
    };

    NelderMeadOptions nm;
    nm.max_evals = nm_budget;
    nm.restarts = 2;
    nm.initial_step = 0.05;
    NelderMeadResult best = nelder_mead(objective, init.flatten(), nm);

    out.params = QLtiParams::zeros(order);
    out.params.unflatten(best.x);
    out.target_error = best.value;
    out.converged = true;
    return out;
}

}  // namespace

AffineCertificate fit_certificate(const PiParams& pi, const HankelSystem& sys,
                                  const CertificateOptions& options) {
    AffineCertificate cert;
    cert.X = QLtiParams::zeros(options.order);
    cert.Y = QLtiParams::zeros(options.order);
    cert.W = QLtiParams::zeros(options.order);

    const int sim_steps = options.horizon + 2 * options.order + 2;
    ClosedLoopTargets targets = dd_closed_loop_impulse(pi, sys, sim_steps);
    if (targets.finite) targets.w = dd_apply_plant(sys, targets.e);
    if (!targets.finite || static_cast<int>(targets.e.size()) < options.horizon) {
        cert.residual_primary = std::numeric_limits<double>::infinity();
        cert.residual_secondary = std::numeric_limits<double>::infinity();
        cert.eig_margin = 1.0;
        cert.converged = false;
        return cert;
    }

    const FittedOperator fx =
        fit_stable_operator(targets.e, options.order, options.horizon, options.nm_budget);
    const FittedOperator fy =
        fit_stable_operator(targets.u, options.order, options.horizon, options.nm_budget);
    const FittedOperator fw =
        fit_stable_operator(targets.w, options.order, options.horizon, options.nm_budget);
    cert.X = fx.params;
    cert.Y = fy.params;
    cert.W = fw.params;
    cert.converged = fx.converged && fy.converged && fw.converged;

    // End-to-end affine residuals: every application of P goes through the
    // Hankel model, never a parametric plant.
    const std::vector<double> x_imp = q_lti_impulse(cert.X, options.horizon);
    const std::vector<double> y_imp = q_lti_impulse(cert.Y, options.horizon);
    const std::vector<double> w_imp = q_lti_impulse(cert.W, options.horizon);
    const std::vector<double> p_y = dd_apply_plant(sys, y_imp);
    const std::vector<double> p_x = dd_apply_plant(sys, x_imp);

    double primary = 0.0, secondary = 0.0;
    for (int t = 0; t < options.horizon; ++t) {
        const double delta = t == 0 ? 1.0 : 0.0;
        const double lhs1 = x_imp[t] + p_y[t] - delta;
        const double lhs2 = w_imp[t] - p_x[t];
        primary += lhs1 * lhs1;
        secondary += lhs2 * lhs2;
    }
    cert.residual_primary = std::sqrt(primary);
    cert.residual_secondary = std::sqrt(secondary);
    cert.eig_margin = std::max({spectral_radius(stable_matrix(cert.X.core)),
                                spectral_radius(stable_matrix(cert.Y.core)),
                                spectral_radius(stable_matrix(cert.W.core))});
    return cert;
}

PiParams project_pi(const PiParams& theta_hat, const HankelSystem& sys,
                    const ProjectionOptions& options, const PiParams* last_feasible) {
    auto feasible = [&](const PiParams& p) {
        return fit_certificate(p, sys, options.cert).feasible(options.cert);
    };
    if (feasible(theta_hat)) return theta_hat;

    // Anchor: the last feasible point, falling back to K = 0 (a stable plant
    // in open loop satisfies the constraint).
    PiParams anchor{0.0, 0.0, theta_hat.dt};
    if (last_feasible != nullptr && feasible(*last_feasible)) anchor = *last_feasible;
    if (!feasible(anchor))
        throw InfeasibleProjectionError("project_pi: no feasible anchor", theta_hat.kp,
                                        theta_hat.ki);

    // Bisect along the segment anchor -> theta_hat for the feasibility edge.
    double lo = 0.0, hi = 1.0;
    auto at = [&](double t) {
        return PiParams{anchor.kp + t * (theta_hat.kp - anchor.kp),
                        anchor.ki + t * (theta_hat.ki - anchor.ki), theta_hat.dt};
    };
    while (hi - lo > options.tol_step) {
        const double mid = 0.5 * (lo + hi);
        (feasible(at(mid)) ? lo : hi) = mid;
    }
    PiParams best = at(lo);
    double best_dist = std::hypot(best.kp - theta_hat.kp, best.ki - theta_hat.ki);

    // Penalty polish around the edge point: the simplex may slide along the
    // boundary to a closer feasible point.
    auto objective = [&](const VectorXd& v) {
        const PiParams p{v(0), v(1), theta_hat.dt};
        const AffineCertificate cert = fit_certificate(p, sys, options.cert);
        const double dist2 = (v(0) - theta_hat.kp) * (v(0) - theta_hat.kp) +
                             (v(1) - theta_hat.ki) * (v(1) - theta_hat.ki);
        double penalty = 0.0;
        const double resid = std::max(cert.residual_primary, cert.residual_secondary);
        if (!cert.converged || !std::isfinite(resid)) {
            penalty = 1e6;
        } else {
            penalty += 1e4 * std::pow(std::max(0.0, resid - 0.5 * options.cert.tol_feas), 2);
            penalty +=
                1e4 * std::pow(std::max(0.0, cert.eig_margin - (1.0 - options.cert.margin)), 2);
        }
        return dist2 + penalty;
    };
    VectorXd x0(2);
    x0 << best.kp, best.ki;
    NelderMeadOptions nm;
    nm.max_evals = options.nm_budget;
    nm.restarts = 1;
    nm.initial_step = 0.05;
    NelderMeadResult polished = nelder_mead(objective, x0, nm);
    const PiParams candidate{polished.x(0), polished.x(1), theta_hat.dt};
    if (feasible(candidate)) {
        const double dist = std::hypot(candidate.kp - theta_hat.kp, candidate.ki - theta_hat.ki);
        if (dist < best_dist) best = candidate;
    }
    return best;
}

namespace {

class PiController : public Controller {
  public:
    PiController(PiParams params, double u_min, double u_max)
        : params_(params), u_min_(u_min), u_max_(u_max) {}

    double act(double r, double y_measured) override {
        const double e = r - y_measured;
        double u = pi_policy_step(params_, e, e_prev_, u_prev_);
        u = std::min(std::max(u, u_min_), u_max_);
        delta_ = u - u_prev_;
        e_prev_ = e;
        u_prev_ = u;
        return u;
    }
    void observe_applied(double) override {}
    double last_delta() const override { return delta_; }

  private:
    PiParams params_;
    double u_min_, u_max_;
    double e_prev_ = 0.0, u_prev_ = 0.0, delta_ = 0.0;
};

}  // namespace

PiPolicy::PiPolicy(PiParams params, double u_min, double u_max)
    : params_(params), u_min_(u_min), u_max_(u_max) {}

VectorXd PiPolicy::flatten() const {
    VectorXd v(2);
    v << params_.kp, params_.ki;
    return v;
}

void PiPolicy::unflatten(const VectorXd& theta) {
    params_.kp = theta(0);
    params_.ki = theta(1);
}

std::unique_ptr<Controller> PiPolicy::make_controller() const {
    return std::make_unique<PiController>(params_, u_min_, u_max_);
}

std::unique_ptr<Policy> PiPolicy::clone() const { return std::make_unique<PiPolicy>(*this); }

StateSpaceModel pitune_plant(const PiTuneConfig& cfg) {
    return nonminimum_phase_plant(cfg.plant_dt);
}

std::shared_ptr<const HankelSystem> pitune_hankel_model(const PiTuneConfig& cfg) {
    StateSpaceModel plant = pitune_plant(cfg);
    plant.reset();
    std::mt19937_64 rng = make_rng(cfg.seed, {0xf00d});
    Trajectory data;
    data.dt = cfg.plant_dt;
    for (int t = 0; t < cfg.data_length + 1; ++t) {
        const double u = gauss(rng);
        data.inputs.push_back(u);
        data.outputs.push_back(plant.output());
        plant.step(u);
    }
    HankelSystem::Options opt;
    opt.L = cfg.hankel_L;
    opt.declared_order = 3;
    return std::make_shared<HankelSystem>(data, opt);
}

void PiTuneResult::write_heatmap_csv(const std::filesystem::path& path) const {
    CsvWriter csv(path, {"kp", "ki", "phase", "session"});
    for (const auto& h : heatmap)
        csv.row(std::vector<std::string>{csv_format(h.kp), csv_format(h.ki),
                                         h.post ? "post" : "pre", std::to_string(h.session)});
}

PiTuneResult constrained_training_run(const PiTuneConfig& cfg) {
    PiTuneResult result;
    result.final_params.resize(cfg.sessions);
    std::shared_ptr<const HankelSystem> hankel_model =
        cfg.constrained ? pitune_hankel_model(cfg) : nullptr;
    const StateSpaceModel plant = pitune_plant(cfg);

    RewardParams rp;
    rp.delta = cfg.reward_delta;
    const RewardFn reward = make_reward("sparse", rp);
    const auto reference = [](int) { return 1.0; };

    TrainConfig tc;
    tc.sessions = cfg.sessions;
    tc.episodes = cfg.episodes;
    tc.rollout.steps = cfg.steps;
    tc.rollout.gamma_rl = cfg.gamma_rl;
    tc.optimizer = cfg.optimizer;
    tc.seed = cfg.seed;
    tc.threads = cfg.threads;

    // Per-session slots keep the trace deterministic under threading.
    std::vector<std::vector<HeatmapEntry>> traces(cfg.sessions);
    std::vector<long> failures(cfg.sessions, 0);
    std::vector<PiParams> last_feasible(cfg.sessions, PiParams{0.0, 0.0, cfg.plant_dt});
    ProjectionOptions proj;
    proj.cert = cfg.cert;

    tc.post_update = [&](const VectorXd& theta, int session, int) {
        PiParams proposal{theta(0), theta(1), cfg.plant_dt};
        traces[session].push_back({proposal.kp, proposal.ki, false, session});
        if (!cfg.constrained) {
            result.final_params[session] = proposal;
            return theta;
        }
        PiParams projected;
        try {
            projected = project_pi(proposal, *hankel_model, proj, &last_feasible[session]);
        } catch (const InfeasibleProjectionError&) {
            ++failures[session];
            projected = last_feasible[session];
        }
        last_feasible[session] = projected;
        result.final_params[session] = projected;
        traces[session].push_back({projected.kp, projected.ki, true, session});
        VectorXd out(2);
        out << projected.kp, projected.ki;
        return out;
    };

    const EnvFactory env_factory = [plant]() { return std::make_unique<LtiEnv>(plant); };
    const PolicyFactory policy_factory = [&cfg](std::mt19937_64& rng) -> std::unique_ptr<Policy> {
        std::uniform_real_distribution<double> kp_dist(0.0, cfg.init_kp_max);
        std::uniform_real_distribution<double> ki_dist(0.0, cfg.init_ki_max);
        return std::make_unique<PiPolicy>(PiParams{kp_dist(rng), ki_dist(rng), cfg.plant_dt});
    };

    result.training = train(env_factory, policy_factory, reference, reward, tc);
    for (int s = 0; s < cfg.sessions; ++s) {
        result.heatmap.insert(result.heatmap.end(), traces[s].begin(), traces[s].end());
        result.projection_failures += failures[s];
    }
    return result;
}

}  // namespace ykrl
