#pragma once

#include <vector>

#include <Eigen/Core>

namespace ykrl {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

// Moore-Penrose pseudo-inverse through a truncated SVD. Singular values below
// rel_tol * sigma_max are dropped, which keeps rank-deficient systems (noise-free
// behavioral data, all-zero data) well defined.
class PseudoInverse {
  public:
    explicit PseudoInverse(const MatrixXd& A, double rel_tol = 1e-10);

    VectorXd apply(const VectorXd& b) const;  // A^+ b
    MatrixXd apply(const MatrixXd& B) const;  // A^+ B
    MatrixXd dense() const;                   // A^+ as a matrix
    Eigen::Index rank() const { return rank_; }
    Eigen::Index rows() const { return v_.rows(); }  // rows of A^+
    Eigen::Index cols() const { return u_.rows(); }

  private:
    MatrixXd u_;          // left singular vectors (thin)
    MatrixXd v_;          // right singular vectors (thin)
    VectorXd inv_sigma_;  // truncated reciprocal singular values
    Eigen::Index rank_;
};

double spectral_radius(const MatrixXd& A);

// Largest eigenvalue of a symmetric matrix.
double max_eigenvalue_sym(const MatrixXd& S);
double min_eigenvalue_sym(const MatrixXd& S);

VectorXd singular_values(const MatrixXd& A);

// Solves A X A^T - X = -Q for X (discrete Lyapunov). Requires rho(A) < 1.
MatrixXd solve_discrete_lyapunov(const MatrixXd& A, const MatrixXd& Q);

struct Realization {
    MatrixXd A;
    VectorXd B;
    RowVectorXd C;
    double D = 0.0;
};

// Ho-Kalman realization of the given order from an impulse response
// (h[0] is the feedthrough term).
Realization realize_impulse_response(const std::vector<double>& h, int order);

std::vector<double> impulse_response(const Realization& r, int steps);

}  // namespace ykrl
