#include "ykrl/linalg.hpp"

#include <algorithm>
#include <stdexcept>

#include <Eigen/Dense>

namespace ykrl {

PseudoInverse::PseudoInverse(const MatrixXd& A, double rel_tol) {
    Eigen::BDCSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& sigma = svd.singularValues();
    const double cutoff = sigma.size() > 0 ? rel_tol * sigma(0) : 0.0;
    rank_ = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff && sigma(i) > 0.0) ++rank_;
    }
    u_ = svd.matrixU();
    v_ = svd.matrixV();
    inv_sigma_ = VectorXd::Zero(sigma.size());
    for (Eigen::Index i = 0; i < rank_; ++i) inv_sigma_(i) = 1.0 / sigma(i);
}

VectorXd PseudoInverse::apply(const VectorXd& b) const {
    return v_ * (inv_sigma_.asDiagonal() * (u_.transpose() * b));
}

MatrixXd PseudoInverse::apply(const MatrixXd& B) const {
    return v_ * (inv_sigma_.asDiagonal() * (u_.transpose() * B));
}

MatrixXd PseudoInverse::dense() const {
    return v_ * inv_sigma_.asDiagonal() * u_.transpose();
}

double spectral_radius(const MatrixXd& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("spectral_radius: matrix must be square");
    if (A.rows() == 0) return 0.0;
    Eigen::EigenSolver<MatrixXd> eig(A, /*computeEigenvectors=*/false);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double max_eigenvalue_sym(const MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
}

double min_eigenvalue_sym(const MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

VectorXd singular_values(const MatrixXd& A) {
    Eigen::BDCSVD<MatrixXd> svd(A);
    return svd.singularValues();
}

MatrixXd solve_discrete_lyapunov(const MatrixXd& A, const MatrixXd& Q) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || Q.rows() != n || Q.cols() != n)
        throw std::invalid_argument("solve_discrete_lyapunov: dimension mismatch");
    // vec(X) = (I - A (x) A)^{-1} vec(Q)
    MatrixXd K = MatrixXd::Identity(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            K.block(i * n, j * n, n, n) -= A(i, j) * A;
    Eigen::Map<const VectorXd> q(Q.data(), n * n);
    VectorXd x = K.partialPivLu().solve(q);
    // Eigen matrices are column-major, matching vec().
    MatrixXd X = Eigen::Map<const MatrixXd>(x.data(), n, n);
    return 0.5 * (X + X.transpose());
}

Realization realize_impulse_response(const std::vector<double>& h, int order) {
    if (order < 1) throw std::invalid_argument("realize_impulse_response: order must be >= 1");
    const int T = static_cast<int>(h.size());
    const int m = (T - 1) / 2;
    if (m < order)
        throw std::invalid_argument("realize_impulse_response: impulse response too short");
    MatrixXd Hk(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) Hk(i, j) = h[1 + i + j];
    Eigen::BDCSVD<MatrixXd> svd(Hk, Eigen::ComputeThinU | Eigen::ComputeThinV);
    VectorXd s = svd.singularValues().head(order);
    VectorXd sqrt_s = s.cwiseMax(0.0).cwiseSqrt();
    MatrixXd Ob = svd.matrixU().leftCols(order) * sqrt_s.asDiagonal();
    MatrixXd Cb = sqrt_s.asDiagonal() * svd.matrixV().leftCols(order).transpose();

    PseudoInverse obs_up(Ob.topRows(m - 1), 1e-12);
    Realization r;
    r.A = obs_up.apply(MatrixXd(Ob.bottomRows(m - 1)));
    r.B = Cb.col(0);
    r.C = Ob.row(0);
    r.D = h[0];
    return r;
}

std::vector<double> impulse_response(const Realization& r, int steps) {
    std::vector<double> h(static_cast<std::size_t>(std::max(steps, 0)));
    VectorXd x = VectorXd::Zero(r.A.rows());
    for (int t = 0; t < steps; ++t) {
        h[t] = r.C.dot(x) + (t == 0 ? r.D : 0.0);
        x = r.A * x + (t == 0 ? VectorXd(r.B) : VectorXd(VectorXd::Zero(r.B.size())));
    }
    return h;
}

}  // namespace ykrl
