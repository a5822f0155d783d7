#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ykrl/linalg.hpp"

namespace ykrl {

// SISO input-output record with a fixed sample time.
struct Trajectory {
    std::vector<double> inputs;
    std::vector<double> outputs;
    double dt = 1.0;

    std::size_t length() const { return inputs.size(); }
    void validate() const;  // equal lengths >= 1, dt > 0, finite entries

    // CSV with header t,u,y; t carries the dt spacing.
    void write_csv(const std::filesystem::path& path) const;
    static Trajectory read_csv(const std::filesystem::path& path);
};

// Length-L window pair forming the right-hand side of the behavioral solve.
struct Window {
    VectorXd u;
    VectorXd y;

    static Window zeros(int L) { return {VectorXd::Zero(L), VectorXd::Zero(L)}; }
    int length() const { return static_cast<int>(u.size()); }
    void push(double u_next, double y_next);  // slide by one sample
    VectorXd stacked() const;
};

// Order-L Hankel matrix of z: entry (i, j) = z[i + j], shape L x (len - L + 1).
MatrixXd build_hankel(std::span<const double> z, int L);

struct PersistencyReport {
    int rank = 0;
    int required = 0;
    bool satisfied = false;
};

// Rank counts singular values above rank_tol * sigma_max; for scalar signals
// persistency of excitation of order L means rank == L.
PersistencyReport check_persistent_excitation(std::span<const double> z, int L,
                                              double rank_tol = 1e-9);

struct AlphaSolution {
    VectorXd alpha;
    double residual = 0.0;  // ||H alpha - rhs|| / max(1, ||rhs||)
};

struct FreeResponse {
    std::vector<VectorXd> alphas;       // alpha_1, alpha_2, ...
    std::vector<Window> windows;        // reconstructed H alpha_t
    bool diverged = false;
    int abort_step = -1;
};

// Immutable Hankel representation of one exploration record: the stacked
// input/output matrices, their one-sample-shifted pair, and a truncated
// pseudo-inverse of the stack. Safe to share across threads once built.
class HankelSystem {
  public:
    struct Options {
        int L = 0;
        bool noisy = false;           // disables the consistency error (counts warnings instead)
        double svd_rel_tol = 1e-10;   // min-norm solve truncation
        double consistency_tol = 1e-6;
        int declared_order = -1;      // upper bound on the plant order, if known
        bool enforce_pe = true;       // reject data failing the declared-order check
        double pe_rank_tol = 1e-9;
    };

    HankelSystem(const Trajectory& data, const Options& options);

    int window_length() const { return options_.L; }
    Eigen::Index num_columns() const { return Hu_.cols(); }
    int pe_order_checked() const { return pe_order_checked_; }
    const PersistencyReport& pe_report() const { return pe_report_; }
    bool noisy() const { return options_.noisy; }
    double dt() const { return dt_; }

    const MatrixXd& Hu() const { return Hu_; }
    const MatrixXd& Hy() const { return Hy_; }
    const MatrixXd& Hu_shift() const { return Hu_shift_; }
    const MatrixXd& Hy_shift() const { return Hy_shift_; }
    const MatrixXd& stacked() const { return H_; }
    const MatrixXd& stacked_shift() const { return H_shift_; }

    // Minimum-norm least-squares solution of [Hu; Hy] alpha = [u; y].
    // Throws InconsistentTrajectoryError when the relative residual exceeds
    // consistency_tol and the data are not flagged noisy.
    AlphaSolution solve_alpha(const Window& window) const;

    // Last entry of Hy_shift * alpha: the unique next output.
    double predict_next(const Window& window) const;

    // Alg.-style continuation: per step solve alpha, predict, query the input
    // source (which sees the step index and the predicted output), slide.
    Trajectory data_driven_simulate(const Window& init,
                                    const std::function<double(int, double)>& input_source,
                                    int steps) const;

    // Free response of the alpha recursion: alpha_{t+1} = H^+ (H' alpha_t).
    // Divergence (non-finite entries or window norm above divergence_factor
    // times max(1, initial norm)) stops the iteration and is reported.
    FreeResponse free_response_rollout(const VectorXd& alpha0, int steps,
                                       double divergence_factor = 1e9) const;

    // Spectral radius of H^+ H' (computed through the equal nonzero spectrum
    // of H' H^+, which is small).
    double stability_radius() const;

    mutable long consistency_warnings = 0;  // noisy-mode residual exceedances

  private:
    Options options_;
    double dt_;
    MatrixXd Hu_, Hy_, Hu_shift_, Hy_shift_;
    MatrixXd H_, H_shift_;
    PseudoInverse H_pinv_;
    PersistencyReport pe_report_;
    int pe_order_checked_ = -1;
};

}  // namespace ykrl
