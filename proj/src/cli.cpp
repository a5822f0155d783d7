#include "ykrl/cli.hpp"

#include <cmath>
#include <iostream>

#include <CLI11.hpp>

#include "ykrl/csv.hpp"
#include "ykrl/pitune.hpp"
#include "ykrl/randhankel.hpp"
#include "ykrl/rl.hpp"
#include "ykrl/rng.hpp"
#include "ykrl/svg.hpp"
#include "ykrl/verify.hpp"
#include "ykrl/youla.hpp"

namespace ykrl {

namespace {

TankParams tank_params_from(const IniConfig& cfg) {
    cfg.require_known_keys("tank", {"tau_p", "tau_in", "tau_out", "tau_m", "r_tank", "r_pipe",
                                    "f_c", "f_max", "noise_var", "dt", "substeps",
                                    "initial_level"});
    TankParams p;
    p.tau_p = cfg.get_double("tank", "tau_p", p.tau_p);
    p.tau_in = cfg.get_double("tank", "tau_in", p.tau_in);
    p.tau_out = cfg.get_double("tank", "tau_out", p.tau_out);
    p.tau_m = cfg.get_double("tank", "tau_m", p.tau_m);
    p.r_tank = cfg.get_double("tank", "r_tank", p.r_tank);
    p.r_pipe = cfg.get_double("tank", "r_pipe", p.r_pipe);
    p.f_c = cfg.get_double("tank", "f_c", p.f_c);
    p.f_max = cfg.get_double("tank", "f_max", p.f_max);
    p.noise_var = cfg.get_double("tank", "noise_var", p.noise_var);
    p.dt = cfg.get_double("tank", "dt", p.dt);
    p.substeps = static_cast<int>(cfg.get_int("tank", "substeps", p.substeps));
    return p;
}

PidController pid_from(const IniConfig& cfg, const std::string& section,
                       const PidController& fallback) {
    cfg.require_known_keys(section, {"kp", "ki", "kd", "u_min", "u_max"});
    PidController pid = fallback;
    pid.kp = cfg.get_double(section, "kp", pid.kp);
    pid.ki = cfg.get_double(section, "ki", pid.ki);
    pid.kd = cfg.get_double(section, "kd", pid.kd);
    pid.u_min = cfg.get_double(section, "u_min", pid.u_min);
    pid.u_max = cfg.get_double(section, "u_max", pid.u_max);
    return pid;
}

std::vector<int> to_int_list(const std::vector<double>& values) {
    std::vector<int> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(static_cast<int>(std::llround(v)));
    return out;
}

}  // namespace

int cmd_sim_check(const IniConfig& cfg, const CliOptions& opt) {
    cfg.require_known_sections({"sim_check"});
    cfg.require_known_keys("sim_check",
                           {"cases", "sim_steps", "loop_steps", "tol", "force_L_below_order",
                            "max_order", "seeds"});
    int cases = static_cast<int>(cfg.get_int("sim_check", "cases", 20));
    const int sim_steps = static_cast<int>(cfg.get_int("sim_check", "sim_steps", 200));
    const int loop_steps = static_cast<int>(cfg.get_int("sim_check", "loop_steps", 100));
    const double tol = cfg.get_double("sim_check", "tol", 1e-6);
    const bool force = cfg.get_bool("sim_check", "force_L_below_order", false);
    const int max_order = static_cast<int>(cfg.get_int("sim_check", "max_order", 5));
    if (opt.quick) cases = std::min(cases, 5);

    CsvWriter csv(opt.out_dir / "sim_check.csv",
                  {"kind", "case", "n", "L", "max_error", "tol", "pass"});
    bool all_pass = true;
    for (int c = 0; c < cases; ++c) {
        std::mt19937_64 rng = make_rng(opt.seed, {0x51, static_cast<std::uint64_t>(c)});
        const Alg1CaseResult res = alg1_equivalence_case(rng, max_order, sim_steps, force);
        const bool pass = res.max_error < tol;
        all_pass = all_pass && pass;
        csv.row(std::vector<std::string>{"alg1_sim", std::to_string(c), std::to_string(res.n),
                                         std::to_string(res.L), csv_format(res.max_error),
                                         csv_format(tol), pass ? "1" : "0"});
    }
    for (int c = 0; c < cases; ++c) {
        std::mt19937_64 rng = make_rng(opt.seed, {0x52, static_cast<std::uint64_t>(c)});
        const Thm3CaseResult res = thm3_equivalence_case(rng, 4, 3, loop_steps);
        const bool pass = res.max_error < tol;
        all_pass = all_pass && pass;
        csv.row(std::vector<std::string>{"yk_oracle", std::to_string(c), std::to_string(res.n),
                                         std::to_string(res.n_q), csv_format(res.max_error),
                                         csv_format(tol), pass ? "1" : "0"});
    }
    std::cout << (all_pass ? "sim-check: all cases within tolerance\n"
                           : "sim-check: FAILURES, see sim_check.csv\n");
    return all_pass ? 0 : 1;
}

int cmd_rand_hankel(const IniConfig& cfg, const CliOptions& opt) {
    cfg.require_known_sections({"mc", "hw", "rollout"});
    cfg.require_known_keys("mc", {"L_values", "N_values", "trials"});
    cfg.require_known_keys("hw", {"n_values", "alpha", "trials"});
    cfg.require_known_keys("rollout", {"L", "N_small", "N_adequate", "N_sweep", "noise_std",
                                       "seeds", "steps", "divergence_factor", "dt"});

    std::vector<int> L_values = to_int_list(cfg.get_list("mc", "L_values", {2, 5}));
    std::vector<int> N_values = to_int_list(cfg.get_list("mc", "N_values", {100, 400, 1600}));
    int trials = static_cast<int>(cfg.get_int("mc", "trials", 200));
    if (opt.quick) {
        trials = std::min(trials, 25);
        N_values = {100, 400};
    }

    McReport combined;
    for (int L : L_values) {
        McConfig mc;
        mc.L = L;
        mc.N_values = N_values;
        mc.trials = trials;
        mc.seed = opt.seed;
        McReport rep = sample_spectra(mc);
        combined.cells.insert(combined.cells.end(), rep.cells.begin(), rep.cells.end());
    }
    combined.write_csv(opt.out_dir / "rand_hankel.csv");

    {
        std::vector<int> n_values = to_int_list(cfg.get_list("hw", "n_values", {10, 100, 10000}));
        const double alpha = cfg.get_double("hw", "alpha", 0.1);
        int hw_trials = static_cast<int>(cfg.get_int("hw", "trials", 1000));
        if (opt.quick) hw_trials = std::min(hw_trials, 100);
        const auto hw = verify_hw_corollary(n_values, alpha, hw_trials, opt.seed);
        CsvWriter csv(opt.out_dir / "hw_corollary.csv", {"n", "pr_squares", "pr_products"});
        for (const auto& h : hw)
            csv.row(std::vector<double>{static_cast<double>(h.n), h.pr_squares, h.pr_products});
    }

    NoisyRolloutConfig rc;
    rc.L = static_cast<int>(cfg.get_int("rollout", "L", rc.L));
    rc.N_small = static_cast<int>(cfg.get_int("rollout", "N_small", rc.N_small));
    rc.N_adequate = static_cast<int>(cfg.get_int("rollout", "N_adequate", rc.N_adequate));
    rc.N_sweep = to_int_list(cfg.get_list("rollout", "N_sweep", {100, 400, 1000, 4000}));
    rc.noise_std = cfg.get_double("rollout", "noise_std", rc.noise_std);
    rc.seeds = static_cast<int>(cfg.get_int("rollout", "seeds", rc.seeds));
    rc.rollout_steps = static_cast<int>(cfg.get_int("rollout", "steps", rc.rollout_steps));
    rc.divergence_factor =
        cfg.get_double("rollout", "divergence_factor", rc.divergence_factor);
    rc.dt = cfg.get_double("rollout", "dt", rc.dt);
    rc.seed = opt.seed;
    if (opt.quick) {
        rc.seeds = std::min(rc.seeds, 5);
        rc.N_sweep = {100, 400};
    }
    const StateSpaceModel plant = nonminimum_phase_plant(rc.dt);
    const NoisyRolloutReport rollout_report = noisy_rollout_experiment(plant, rc);
    {
        CsvWriter csv(opt.out_dir / "rollout_seeds.csv",
                      {"seed", "rho_noisy", "rho_noisefree", "rho_noisefree_long", "diverged",
                       "noisefree_diverged"});
        for (const auto& t : rollout_report.short_data)
            csv.row(std::vector<double>{static_cast<double>(t.seed), t.rho_noisy,
                                        t.rho_noisefree, t.rho_noisefree_long,
                                        t.diverged ? 1.0 : 0.0,
                                        t.noisefree_diverged ? 1.0 : 0.0});
    }
    {
        CsvWriter csv(opt.out_dir / "rollout_sweep.csv",
                      {"N", "pr_rho_below_1.05", "rho_median", "lambda_min_u_median"});
        for (const auto& c : rollout_report.sweep)
            csv.row(std::vector<double>{static_cast<double>(c.N), c.pr_rho_below, c.rho_median,
                                        c.lambda_min_u_median});
    }

    if (opt.plots) {
        SvgLinePlot plot("median spectral radius of H+H'", "N", "rho");
        for (int L : L_values) {
            std::vector<double> xs, ys;
            for (const auto& c : combined.cells) {
                if (c.L != L) continue;
                xs.push_back(c.N);
                ys.push_back(c.rho_q50);
            }
            plot.add_series("L=" + std::to_string(L), xs, ys);
        }
        plot.add_hline(1.0, "rho = 1");
        plot.write(opt.out_dir / "rand_hankel_rho.svg");

        SvgLinePlot sweep_plot("noisy model radius vs data length", "N", "median rho");
        std::vector<double> xs, ys;
        for (const auto& c : rollout_report.sweep) {
            xs.push_back(c.N);
            ys.push_back(c.rho_median);
        }
        sweep_plot.add_series("median rho", xs, ys);
        sweep_plot.add_hline(1.0, "rho = 1");
        sweep_plot.write(opt.out_dir / "rollout_sweep.svg");
    }

    std::cout << "rand-hankel: wrote rand_hankel.csv, hw_corollary.csv, rollout_seeds.csv, "
                 "rollout_sweep.csv\n";
    return 0;
}

namespace {

// Exploration record for the tank's internal model: the flow setpoint is
// probed directly around the operating point (the level loop stays out of
// the way), the measured level is recorded in deviation form.
Trajectory collect_tank_data(const TankParams& params, const PidController& flow_pid_proto,
                             double level0, double probe_std, int samples, std::uint64_t seed) {
    TankState s = tank_equilibrium(params, level0);
    PidController flow_pid = flow_pid_proto;
    flow_pid.reset(s.p);
    std::mt19937_64 u_rng = make_rng(seed, {0x70});
    std::mt19937_64 w_rng = make_rng(seed, {0x71});
    const double u_eq = s.f_in;

    Trajectory data;
    data.dt = params.dt;
    for (int t = 0; t < samples; ++t) {
        const double u_dev = probe_std * gauss(u_rng);
        const double flow_sp =
            std::min(std::max(u_eq + u_dev, 0.0), params.f_max);
        data.inputs.push_back(flow_sp - u_eq);
        data.outputs.push_back(s.m + gauss(w_rng, std::sqrt(params.noise_var)) - level0);
        const double pump_sp = flow_pid.step(flow_sp - s.f_in);
        s = tank_advance(s, params, pump_sp);
    }
    return data;
}

}  // namespace

int cmd_train_tank(const IniConfig& cfg, const CliOptions& opt) {
    cfg.require_known_sections({"tank", "pid.level", "pid.flow", "noise", "train", "model"});
    cfg.require_known_keys("noise", {"seed"});
    cfg.require_known_keys("train",
                           {"sessions", "episodes", "steps", "gamma", "k", "sigma", "eta",
                            "policy", "q_order", "init_scale", "reward", "reward_lambda",
                            "reward_scale", "sp_step"});
    cfg.require_known_keys("model", {"L", "samples", "probe_std"});

    const TankParams params = tank_params_from(cfg);
    const double level0 = cfg.get_double("tank", "initial_level", 1.0);
    PidController level_pid = pid_from(cfg, "pid.level", default_level_pid(params));
    PidController flow_pid = pid_from(cfg, "pid.flow", default_flow_pid(params));
    level_pid.dt = params.dt;
    flow_pid.dt = params.dt;

    TrainConfig tc;
    tc.sessions = static_cast<int>(cfg.get_int("train", "sessions", 20));
    tc.episodes = static_cast<int>(cfg.get_int("train", "episodes", 100));
    tc.rollout.steps = static_cast<int>(cfg.get_int("train", "steps", 200));
    tc.rollout.gamma_rl = cfg.get_double("train", "gamma", 0.995);
    tc.optimizer.k = static_cast<int>(cfg.get_int("train", "k", 8));
    tc.optimizer.sigma = cfg.get_double("train", "sigma", 0.05);
    tc.optimizer.eta = cfg.get_double("train", "eta", 0.02);
    tc.seed = cfg.has("noise", "seed") ? static_cast<std::uint64_t>(cfg.get_int("noise", "seed"))
                                       : opt.seed;
    tc.threads = opt.threads;
    if (opt.quick) {
        tc.sessions = std::min(tc.sessions, 2);
        tc.episodes = std::min(tc.episodes, 5);
    }

    const int L = static_cast<int>(cfg.get_int("model", "L", 11));
    const int samples = static_cast<int>(cfg.get_int("model", "samples", 101));
    const double probe_std =
        cfg.get_double("model", "probe_std", 0.2 * tank_equilibrium_inflow(params, level0));
    Trajectory data = collect_tank_data(params, flow_pid, level0, probe_std, samples, tc.seed);
    HankelSystem::Options hopt;
    hopt.L = L;
    hopt.noisy = true;
    auto sys = std::make_shared<HankelSystem>(data, hopt);

    const double sp_step = cfg.get_double("train", "sp_step", 0.15);
    auto reference = [level0, sp_step, steps = tc.rollout.steps](int t) {
        return t < steps / 2 ? level0 + sp_step : level0 - sp_step / 2.0;
    };

    RewardParams rp;
    rp.lambda = cfg.get_double("train", "reward_lambda", 0.0);
    rp.e_scale = cfg.get_double("train", "reward_scale", 0.25);
    const RewardFn reward = make_reward(cfg.get_string("train", "reward", "banded"), rp);

    YoulaOptions yopt;
    yopt.mode = ControlMode::incremental;
    yopt.u_offset = tank_equilibrium_inflow(params, level0);
    yopt.u_min = 0.0;
    yopt.u_max = params.f_max;

    const std::string policy_kind = cfg.get_string("train", "policy", "lti");
    const int q_order = static_cast<int>(cfg.get_int("train", "q_order", 3));
    const double init_scale = cfg.get_double("train", "init_scale", 0.05);
    PolicyFactory policy_factory;
    if (policy_kind == "lti") {
        policy_factory = [sys, yopt, q_order, init_scale](std::mt19937_64& rng) {
            return std::make_unique<YoulaPolicy>(QLtiParams::random(q_order, rng, init_scale),
                                                 sys, yopt);
        };
    } else if (policy_kind == "nonlinear") {
        policy_factory = [sys, yopt, q_order, init_scale](std::mt19937_64& rng) {
            return std::make_unique<YoulaPolicy>(
                QNonlinearParams::random(q_order, {16, 16}, {16, 16}, rng, init_scale), sys,
                yopt);
        };
    } else {
        throw ConfigError("unknown policy kind '" + policy_kind + "'");
    }

    EnvFactory env_factory = [params, level_pid, flow_pid, level0, reference]() {
        auto env = std::make_unique<TankEnv>(params, level_pid, flow_pid, level0);
        env->set_setpoint_profile(reference);
        return env;
    };

    const TrainResult result = train(env_factory, policy_factory, reference, reward, tc);
    result.write_rewards_csv(opt.out_dir / "tank_rewards.csv");
    result.write_summary_csv(opt.out_dir / "tank_rewards_summary.csv");

    long aborts = 0;
    for (long a : result.instability_aborts) aborts += a;

    // One sample rollout with a session-0 policy for the trace figure.
    {
        std::mt19937_64 rng = make_rng(tc.seed, {0xa0, 0});
        auto policy = policy_factory(rng);
        auto env = env_factory();
        RolloutConfig rc = tc.rollout;
        EpisodeLog log = rollout(*env, *policy, reference, reward, rc, tc.seed);
        log.write_csv(opt.out_dir / "tank_rollout.csv");
        if (opt.plots) {
            std::vector<double> ts(log.size());
            for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = static_cast<double>(i) * log.dt;
            SvgLinePlot plot("tank rollout", "t [s]", "level [m]");
            plot.add_series("setpoint", ts, log.r);
            plot.add_series("measured", ts, log.y);
            plot.write(opt.out_dir / "tank_rollout.svg");
        }
    }
    if (opt.plots) {
        std::vector<double> xs(result.episode_median.size());
        for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
        SvgLinePlot plot("tank training reward", "episode", "return");
        plot.add_band(xs, result.episode_q25, result.episode_q75);
        plot.add_series("median", xs, result.episode_median);
        plot.write(opt.out_dir / "tank_rewards.svg");
    }

    std::cout << "train-tank: " << tc.sessions << " sessions x " << tc.episodes
              << " episodes, instability aborts: " << aborts << "\n";
    return 0;
}

int cmd_pi_tune(const IniConfig& cfg, const CliOptions& opt) {
    cfg.require_known_sections({"pitune"});
    cfg.require_known_keys("pitune",
                           {"sessions", "episodes", "steps", "gamma", "k", "sigma", "eta",
                            "reward_delta", "data_length", "hankel_L", "plant_dt", "margin",
                            "tol_feas", "horizon", "order", "boundary_ki_max",
                            "boundary_kp_max", "boundary_points"});

    PiTuneConfig pc;
    pc.sessions = static_cast<int>(cfg.get_int("pitune", "sessions", 10));
    pc.episodes = static_cast<int>(cfg.get_int("pitune", "episodes", 60));
    pc.steps = static_cast<int>(cfg.get_int("pitune", "steps", 120));
    pc.gamma_rl = cfg.get_double("pitune", "gamma", 0.995);
    pc.optimizer.k = static_cast<int>(cfg.get_int("pitune", "k", 4));
    pc.optimizer.sigma = cfg.get_double("pitune", "sigma", 0.3);
    pc.optimizer.eta = cfg.get_double("pitune", "eta", 0.003);
    pc.reward_delta = cfg.get_double("pitune", "reward_delta", 0.05);
    pc.data_length = static_cast<int>(cfg.get_int("pitune", "data_length", 240));
    pc.hankel_L = static_cast<int>(cfg.get_int("pitune", "hankel_L", 8));
    pc.plant_dt = cfg.get_double("pitune", "plant_dt", 0.1);
    pc.cert.margin = cfg.get_double("pitune", "margin", 0.05);
    pc.cert.tol_feas = cfg.get_double("pitune", "tol_feas", 1e-3);
    pc.cert.horizon = static_cast<int>(cfg.get_int("pitune", "horizon", 80));
    pc.cert.order = static_cast<int>(cfg.get_int("pitune", "order", 6));
    pc.seed = opt.seed;
    pc.threads = opt.threads;
    if (opt.quick) {
        pc.sessions = std::min(pc.sessions, 2);
        pc.episodes = std::min(pc.episodes, 6);
    }

    const StateSpaceModel plant = pitune_plant(pc);

    pc.constrained = true;
    PiTuneResult constrained = constrained_training_run(pc);
    constrained.training.write_rewards_csv(opt.out_dir / "pi_rewards_constrained.csv");
    constrained.training.write_summary_csv(opt.out_dir / "pi_rewards_constrained_summary.csv");
    constrained.write_heatmap_csv(opt.out_dir / "pi_heatmap.csv");

    pc.constrained = false;
    PiTuneResult unconstrained = constrained_training_run(pc);
    unconstrained.training.write_rewards_csv(opt.out_dir / "pi_rewards_unconstrained.csv");
    unconstrained.training.write_summary_csv(opt.out_dir /
                                             "pi_rewards_unconstrained_summary.csv");

    // Oracle audit of both visit traces.
    long constrained_unstable = 0, unconstrained_unstable = 0;
    for (const auto& h : constrained.heatmap) {
        if (!h.post) continue;
        if (!model_stability_oracle({h.kp, h.ki, pc.plant_dt}, plant).stable)
            ++constrained_unstable;
    }
    for (const auto& h : unconstrained.heatmap) {
        if (!model_stability_oracle({h.kp, h.ki, pc.plant_dt}, plant).stable)
            ++unconstrained_unstable;
    }

    {
        const double ki_max = cfg.get_double("pitune", "boundary_ki_max", 4.0);
        const double kp_max = cfg.get_double("pitune", "boundary_kp_max", 4.0);
        const int points = static_cast<int>(cfg.get_int("pitune", "boundary_points", 40));
        std::vector<double> ki_values;
        for (int i = 0; i <= points; ++i) ki_values.push_back(ki_max * i / points);
        const auto boundary = stability_boundary(plant, pc.plant_dt, ki_values, kp_max);
        CsvWriter csv(opt.out_dir / "pi_boundary.csv", {"kp", "ki"});
        for (const auto& [kp, ki] : boundary) csv.row(std::vector<double>{kp, ki});

        if (opt.plots) {
            SvgLinePlot plot("PI stability boundary and visited parameters", "kp", "ki");
            std::vector<double> bx, by;
            for (const auto& [kp, ki] : boundary) {
                bx.push_back(kp);
                by.push_back(ki);
            }
            plot.add_series("boundary", bx, by);
            std::vector<double> px, py;
            for (const auto& h : constrained.heatmap) {
                if (!h.post) continue;
                px.push_back(h.kp);
                py.push_back(h.ki);
            }
            plot.add_series("post-projection", px, py);
            plot.write(opt.out_dir / "pi_heatmap.svg");
        }
    }

    std::cout << "pi-tune: constrained oracle-unstable visits (post-projection): "
              << constrained_unstable
              << ", unconstrained oracle-unstable visits: " << unconstrained_unstable << "\n";
    return 0;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Data-driven stabilizing control experiments"};
    app.require_subcommand(1);

    std::string config_path;
    CliOptions opt;
    std::string out_dir = "out";
    app.add_option("--config", config_path, "INI config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", opt.seed, "master seed");
    app.add_flag("--plots", opt.plots, "write SVG line plots");
    app.add_flag("--quick", opt.quick, "smoke-scale overrides");
    app.add_option("--threads", opt.threads, "worker threads (0 = auto)");

    auto* sim = app.add_subcommand("sim-check", "oracle-equivalence suites");
    auto* rand = app.add_subcommand("rand-hankel", "random Hankel Monte Carlo");
    auto* tank = app.add_subcommand("train-tank", "two-tank training protocol");
    auto* pi = app.add_subcommand("pi-tune", "constrained PI tuning");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        opt.out_dir = out_dir;
        std::filesystem::create_directories(opt.out_dir);
        const IniConfig cfg = config_path.empty() ? IniConfig::parse_string("")
                                                  : IniConfig::parse_file(config_path);
        if (sim->parsed()) return cmd_sim_check(cfg, opt);
        if (rand->parsed()) return cmd_rand_hankel(cfg, opt);
        if (tank->parsed()) return cmd_train_tank(cfg, opt);
        if (pi->parsed()) return cmd_pi_tune(cfg, opt);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ykrl
