#include "ykrl/hankel.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "ykrl/csv.hpp"
#include "ykrl/errors.hpp"

namespace ykrl {

void Trajectory::validate() const {
    if (inputs.size() != outputs.size())
        throw DimensionError("Trajectory: inputs and outputs must have equal length");
    if (inputs.empty()) throw DimensionError("Trajectory: at least one sample required");
    if (!(dt > 0)) throw std::invalid_argument("Trajectory: dt must be positive");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!std::isfinite(inputs[i]) || !std::isfinite(outputs[i]))
            throw std::invalid_argument("Trajectory: non-finite sample at index " +
                                        std::to_string(i));
    }
}

void Trajectory::write_csv(const std::filesystem::path& path) const {
    CsvWriter csv(path, {"t", "u", "y"});
    for (std::size_t i = 0; i < inputs.size(); ++i)
        csv.row(std::vector<double>{static_cast<double>(i) * dt, inputs[i], outputs[i]});
}

Trajectory Trajectory::read_csv(const std::filesystem::path& path) {
    CsvTable table = read_csv_table(path);
    Trajectory traj;
    if (table.rows.size() >= 2) {
        const double t0 = std::stod(table.rows[0][0]);
        const double t1 = std::stod(table.rows[1][0]);
        traj.dt = t1 - t0;
    }
    for (const auto& row : table.rows) {
        if (row.size() != 3) throw std::runtime_error("trajectory csv: expected 3 columns");
        traj.inputs.push_back(std::stod(row[1]));
        traj.outputs.push_back(std::stod(row[2]));
    }
    traj.validate();
    return traj;
}

void Window::push(double u_next, double y_next) {
    const int L = length();
    for (int i = 0; i + 1 < L; ++i) {
        u(i) = u(i + 1);
        y(i) = y(i + 1);
    }
    u(L - 1) = u_next;
    y(L - 1) = y_next;
}

VectorXd Window::stacked() const {
    VectorXd s(u.size() + y.size());
    s << u, y;
    return s;
}

MatrixXd build_hankel(std::span<const double> z, int L) {
    const int len = static_cast<int>(z.size());
    if (L < 1 || L > len)
        throw DimensionError("build_hankel: L = " + std::to_string(L) +
                             " out of range for sequence of length " + std::to_string(len));
    MatrixXd H(L, len - L + 1);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j <= len - L; ++j) H(i, j) = z[static_cast<std::size_t>(i + j)];
    return H;
}

PersistencyReport check_persistent_excitation(std::span<const double> z, int L, double rank_tol) {
    if (rank_tol <= 0) throw std::invalid_argument("check_persistent_excitation: rank_tol > 0");
    MatrixXd H = build_hankel(z, L);
    VectorXd sigma = singular_values(H);
    PersistencyReport report;
    report.required = L;
    const double cutoff = sigma.size() > 0 ? rank_tol * sigma(0) : 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > cutoff && sigma(i) > 0.0) ++report.rank;
    report.satisfied = report.rank == L;
    return report;
}

namespace {

PseudoInverse make_stack_pinv(const MatrixXd& H, double tol) { return PseudoInverse(H, tol); }

}  // namespace

HankelSystem::HankelSystem(const Trajectory& data, const Options& options)
    : options_(options),
      dt_(data.dt),
      Hu_(),
      Hy_(),
      Hu_shift_(),
      Hy_shift_(),
      H_(),
      H_shift_(),
      H_pinv_(MatrixXd::Zero(1, 1)) {
    data.validate();
    const int M = static_cast<int>(data.length());
    const int L = options_.L;
    if (L < 1 || L + 1 > M)
        throw DimensionError("HankelSystem: need at least L + 1 = " + std::to_string(L + 1) +
                             " samples, got " + std::to_string(M));

    std::span<const double> u(data.inputs);
    std::span<const double> y(data.outputs);
    Hu_ = build_hankel(u.first(M - 1), L);
    Hy_ = build_hankel(y.first(M - 1), L);
    Hu_shift_ = build_hankel(u.subspan(1), L);
    Hy_shift_ = build_hankel(y.subspan(1), L);

    H_.resize(2 * L, Hu_.cols());
    H_ << Hu_, Hy_;
    H_shift_.resize(2 * L, Hu_.cols());
    H_shift_ << Hu_shift_, Hy_shift_;
    H_pinv_ = make_stack_pinv(H_, options_.svd_rel_tol);

    if (options_.declared_order >= 0) {
        pe_order_checked_ = L + 1 + options_.declared_order;
        pe_report_ = check_persistent_excitation(u, pe_order_checked_, options_.pe_rank_tol);
        if (options_.enforce_pe && !pe_report_.satisfied)
            throw std::invalid_argument(
                "HankelSystem: input not persistently exciting of order " +
                std::to_string(pe_order_checked_) + " (rank " + std::to_string(pe_report_.rank) +
                ")");
    }
}

AlphaSolution HankelSystem::solve_alpha(const Window& window) const {
    if (window.length() != options_.L)
        throw DimensionError("solve_alpha: window length " + std::to_string(window.length()) +
                             " does not match L = " + std::to_string(options_.L));
    AlphaSolution sol;
    const VectorXd rhs = window.stacked();
    sol.alpha = H_pinv_.apply(rhs);
    sol.residual = (H_ * sol.alpha - rhs).norm() / std::max(1.0, rhs.norm());
    if (sol.residual > options_.consistency_tol) {
        if (options_.noisy) {
            ++consistency_warnings;
        } else {
            throw InconsistentTrajectoryError(
                "solve_alpha: window is not a trajectory of the stored data (relative residual " +
                    std::to_string(sol.residual) + ")",
                sol.residual);
        }
    }
    return sol;
}

double HankelSystem::predict_next(const Window& window) const {
    const AlphaSolution sol = solve_alpha(window);
    return Hy_shift_.row(Hy_shift_.rows() - 1).dot(sol.alpha);
}

Trajectory HankelSystem::data_driven_simulate(
    const Window& init, const std::function<double(int, double)>& input_source, int steps) const {
    if (steps < 1) throw std::invalid_argument("data_driven_simulate: steps must be >= 1");
    Window window = init;
    Trajectory out;
    out.dt = dt_;
    out.inputs.reserve(steps);
    out.outputs.reserve(steps);
    for (int t = 0; t < steps; ++t) {
        const double y_next = predict_next(window);
        const double u_next = input_source(t, y_next);
        if (!std::isfinite(y_next) || !std::isfinite(u_next))
            throw NonFiniteSignalError("data_driven_simulate: non-finite signal", t);
        out.inputs.push_back(u_next);
        out.outputs.push_back(y_next);
        window.push(u_next, y_next);
    }
    return out;
}

FreeResponse HankelSystem::free_response_rollout(const VectorXd& alpha0, int steps,
                                                 double divergence_factor) const {
    if (alpha0.size() != num_columns())
        throw DimensionError("free_response_rollout: alpha0 length " +
                             std::to_string(alpha0.size()) + " != " +
                             std::to_string(num_columns()));
    FreeResponse out;
    const int L = options_.L;
    const double w0_norm = std::max(1.0, (H_ * alpha0).norm());
    VectorXd alpha = alpha0;
    for (int t = 0; t < steps; ++t) {
        alpha = H_pinv_.apply(VectorXd(H_shift_ * alpha));
        const VectorXd w = H_ * alpha;
        if (!w.allFinite() || w.norm() > divergence_factor * w0_norm) {
            out.diverged = true;
            out.abort_step = t;
            break;
        }
        out.alphas.push_back(alpha);
        Window win;
        win.u = w.head(L);
        win.y = w.tail(L);
        out.windows.push_back(std::move(win));
    }
    return out;
}

double HankelSystem::stability_radius() const {
    // Nonzero eigenvalues of H^+ H' and H' H^+ agree; the latter is 2L x 2L.
    const MatrixXd small = H_shift_ * H_pinv_.dense();
    return spectral_radius(small);
}

}  // namespace ykrl
