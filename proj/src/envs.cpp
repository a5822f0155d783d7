#include "ykrl/envs.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "ykrl/errors.hpp"
#include "ykrl/rng.hpp"

namespace ykrl {

StateSpaceModel::StateSpaceModel(MatrixXd A_, VectorXd B_, RowVectorXd C_, double dt_)
    : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), dt(dt_) {
    if (A.rows() != A.cols() || B.size() != A.rows() || C.size() != A.rows())
        throw DimensionError("StateSpaceModel: inconsistent dimensions");
    if (dt <= 0) throw std::invalid_argument("StateSpaceModel: dt must be positive");
    x = VectorXd::Zero(A.rows());
}

double StateSpaceModel::step(double u) {
    const double y = C.dot(x);
    x = A * x + B * u;
    return y;
}

void StateSpaceModel::reset() { x.setZero(); }

std::pair<MatrixXd, VectorXd> discretize_zoh(const MatrixXd& Ac, const VectorXd& Bc, double dt) {
    if (dt <= 0) throw std::invalid_argument("discretize_zoh: dt must be positive");
    const Eigen::Index n = Ac.rows();
    if (Ac.cols() != n || Bc.size() != n) throw DimensionError("discretize_zoh: dimension mismatch");
    MatrixXd M = MatrixXd::Zero(n + 1, n + 1);
    M.topLeftCorner(n, n) = Ac;
    M.topRightCorner(n, 1) = Bc;
    MatrixXd E = (M * dt).exp();
    return {E.topLeftCorner(n, n), E.topRightCorner(n, 1)};
}

StateSpaceModel nonminimum_phase_plant(double dt) {
    // Controllable canonical form of (1 - s) / (s^3 + 3 s^2 + 3 s + 1).
    MatrixXd Ac(3, 3);
    Ac << -3, -3, -1, 1, 0, 0, 0, 1, 0;
    VectorXd Bc(3);
    Bc << 1, 0, 0;
    RowVectorXd C(3);
    C << 0, -1, 1;
    auto [Ad, Bd] = discretize_zoh(Ac, Bc, dt);
    return StateSpaceModel(Ad, Bd, C, dt);
}

StateSpaceModel random_stable_plant(std::mt19937_64& rng, int order, double rho_max, double dt) {
    if (order < 1) throw std::invalid_argument("random_stable_plant: order must be >= 1");
    MatrixXd A = gauss_matrix(rng, order, order);
    const double rho = spectral_radius(A);
    std::uniform_real_distribution<double> target(0.5 * rho_max, rho_max);
    if (rho > 1e-12) A *= target(rng) / rho;
    VectorXd B = gauss_vector(rng, order);
    RowVectorXd C = gauss_vector(rng, order).transpose();
    return StateSpaceModel(A, B, C, dt);
}

double PidController::step(double e) { return step_with_offset(e, 0.0); }

double PidController::step_with_offset(double e, double delta_u_extra) {
    double du = kp * (e - e_prev) + ki * e * dt + delta_u_extra;
    if (kd != 0.0) du += kd * (e - 2.0 * e_prev + e_prev2) / dt;
    double u = u_prev + du;
    u = std::min(std::max(u, u_min), u_max);
    e_prev2 = e_prev;
    e_prev = e;
    u_prev = u;
    return u;
}

void PidController::reset(double u0) {
    e_prev = e_prev2 = 0.0;
    u_prev = u0;
}

namespace {

double tank_outflow_target(const TankParams& p, double level) {
    return M_PI * p.r_pipe * p.r_pipe * p.f_c * std::sqrt(2.0 * p.g * std::max(level, 0.0));
}

struct TankDeriv {
    double dp, dfin, dfout, dlevel, dm;
};

TankDeriv tank_rhs(const TankState& s, const TankParams& p, double p_sp) {
    TankDeriv d;
    d.dp = (p_sp - s.p) / p.tau_p;
    d.dfin = (p.f_max * (s.p / 100.0) - s.f_in) / p.tau_in;
    d.dfout = (tank_outflow_target(p, s.level) - s.f_out) / p.tau_out;
    d.dlevel = (s.f_in - s.f_out) / (M_PI * p.r_tank * p.r_tank);
    d.dm = (s.level - s.m) / p.tau_m;
    return d;
}

TankState add_scaled(const TankState& s, const TankDeriv& d, double h) {
    TankState r = s;
    r.p += h * d.dp;
    r.f_in += h * d.dfin;
    r.f_out += h * d.dfout;
    r.level += h * d.dlevel;
    r.m += h * d.dm;
    return r;
}

void clamp_state(TankState& s) {
    s.p = std::min(std::max(s.p, 0.0), 100.0);
    s.f_in = std::max(s.f_in, 0.0);
    s.f_out = std::max(s.f_out, 0.0);
    s.level = std::max(s.level, 0.0);
}

}  // namespace

double tank_equilibrium_inflow(const TankParams& params, double level) {
    return tank_outflow_target(params, level);
}

TankState tank_equilibrium(const TankParams& params, double level) {
    TankState s;
    s.level = level;
    s.m = level;
    s.f_out = tank_outflow_target(params, level);
    s.f_in = s.f_out;
    s.p = 100.0 * s.f_in / params.f_max;
    if (s.p > 100.0) throw std::invalid_argument("tank_equilibrium: level beyond pump capacity");
    return s;
}

TankState tank_advance(const TankState& state, const TankParams& params, double pump_setpoint) {
    TankState s = state;
    const double h = params.dt / params.substeps;
    for (int i = 0; i < params.substeps; ++i) {
        const TankDeriv k1 = tank_rhs(s, params, pump_setpoint);
        const TankDeriv k2 = tank_rhs(add_scaled(s, k1, h / 2.0), params, pump_setpoint);
        const TankDeriv k3 = tank_rhs(add_scaled(s, k2, h / 2.0), params, pump_setpoint);
        const TankDeriv k4 = tank_rhs(add_scaled(s, k3, h), params, pump_setpoint);
        s.p += h / 6.0 * (k1.dp + 2 * k2.dp + 2 * k3.dp + k4.dp);
        s.f_in += h / 6.0 * (k1.dfin + 2 * k2.dfin + 2 * k3.dfin + k4.dfin);
        s.f_out += h / 6.0 * (k1.dfout + 2 * k2.dfout + 2 * k3.dfout + k4.dfout);
        s.level += h / 6.0 * (k1.dlevel + 2 * k2.dlevel + 2 * k3.dlevel + k4.dlevel);
        s.m += h / 6.0 * (k1.dm + 2 * k2.dm + 2 * k3.dm + k4.dm);
        clamp_state(s);
    }
    if (!std::isfinite(s.level) || !std::isfinite(s.m))
        throw NonFiniteSignalError("tank_advance: non-finite state", 0);
    return s;
}

TankStepResult tank_step(const TankState& state, const TankParams& params,
                         PidController& level_pid, PidController& flow_pid, double level_sp,
                         double delta_u_q, std::mt19937_64& rng) {
    TankStepResult out;
    // Cascade, evaluated once per sample and held over the RK4 substeps.
    const double flow_sp = level_pid.step_with_offset(level_sp - state.m, delta_u_q);
    const double pump_sp = flow_pid.step(flow_sp - state.f_in);
    out.flow_setpoint = flow_sp;
    out.pump_setpoint = pump_sp;
    out.state = tank_advance(state, params, pump_sp);
    out.measured_level = out.state.m + gauss(rng, std::sqrt(params.noise_var));
    return out;
}

RewardFn make_reward(const std::string& kind, const RewardParams& cfg) {
    if (kind == "sparse") {
        const double delta = cfg.delta;
        return [delta](double e, double) { return std::abs(e) < delta ? 1.0 : 0.0; };
    }
    if (kind == "tank") {
        const double lambda = cfg.lambda;
        return [lambda](double e, double du) { return -std::abs(e) - lambda * std::abs(du); };
    }
    if (kind == "banded") {
        const double lambda = cfg.lambda;
        const double scale = cfg.e_scale;
        return [lambda, scale](double e, double du) {
            return std::max(0.0, 1.0 - std::abs(e) / scale) - lambda * std::abs(du);
        };
    }
    throw std::invalid_argument("make_reward: unknown kind '" + kind + "'");
}

LtiEnv::LtiEnv(StateSpaceModel plant, double noise_std)
    : plant_(std::move(plant)), noise_std_(noise_std) {
    reset(0);
}

void LtiEnv::reset(std::uint64_t seed) {
    plant_.reset();
    rng_ = make_rng(seed, {0x17});
    last_u_ = 0.0;
    y_meas_ = noise_std_ > 0 ? gauss(rng_, noise_std_) : 0.0;
}

double LtiEnv::apply(double action) {
    last_u_ = action;
    plant_.step(action);
    y_meas_ = plant_.output() + (noise_std_ > 0 ? gauss(rng_, noise_std_) : 0.0);
    return y_meas_;
}

TankEnv::TankEnv(TankParams params, PidController level_pid, PidController flow_pid,
                 double initial_level)
    : params_(params),
      level_pid_proto_(level_pid),
      flow_pid_proto_(flow_pid),
      initial_level_(initial_level) {
    reset(0);
}

void TankEnv::reset(std::uint64_t seed) {
    rng_ = make_rng(seed, {0x7a});
    state_ = tank_equilibrium(params_, initial_level_);
    level_pid_ = level_pid_proto_;
    flow_pid_ = flow_pid_proto_;
    // Bumpless start: both loops resume from the equilibrium actuation.
    level_pid_.reset(state_.f_in);
    flow_pid_.reset(state_.p);
    last_flow_sp_ = state_.f_in;
    level_sp_ = initial_level_;
    step_count_ = 0;
    measured_ = state_.m + gauss(rng_, std::sqrt(params_.noise_var));
}

double TankEnv::apply(double delta_u_q) {
    if (profile_) level_sp_ = profile_(step_count_);
    ++step_count_;
    TankStepResult r =
        tank_step(state_, params_, level_pid_, flow_pid_, level_sp_, delta_u_q, rng_);
    state_ = r.state;
    measured_ = r.measured_level;
    last_flow_sp_ = r.flow_setpoint;
    return measured_;
}

PidController default_level_pid(const TankParams& params) {
    PidController pid;
    pid.kp = 2e-3;
    pid.ki = 4e-4;
    pid.dt = params.dt;
    pid.u_min = 0.0;
    pid.u_max = params.f_max;
    return pid;
}

PidController default_flow_pid(const TankParams& params) {
    PidController pid;
    pid.kp = 1200.0;
    pid.ki = 900.0;
    pid.dt = params.dt;
    pid.u_min = 0.0;
    pid.u_max = 100.0;
    return pid;
}

}  // namespace ykrl
