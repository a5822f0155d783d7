#include "ykrl/stable_ops.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "ykrl/errors.hpp"
#include "ykrl/rng.hpp"

namespace ykrl {

namespace {
constexpr double kDiagFloor = 1e-6;
}

double positive_diagonal_map(double raw) {
    // softplus with a floor; numerically safe for large |raw|
    const double sp = raw > 0 ? raw + std::log1p(std::exp(-raw)) : std::log1p(std::exp(raw));
    return sp + kDiagFloor;
}

double positive_diagonal_unmap(double positive) {
    const double sp = positive - kDiagFloor;
    if (!(sp > 0)) throw ParameterizationError("positive_diagonal_unmap: value below floor");
    // inverse of softplus: log(exp(x) - 1), stable for large x
    return sp > 30.0 ? sp : std::log(std::expm1(sp));
}

StableMatrixParams StableMatrixParams::zeros(int n) {
    return {MatrixXd::Zero(n, n), MatrixXd::Zero(n, n)};
}

StableMatrixParams StableMatrixParams::random(int n, std::mt19937_64& rng, double scale) {
    return {gauss_matrix(rng, n, n, scale), gauss_matrix(rng, n, n, scale)};
}

MatrixXd stable_matrix_scaling(const StableMatrixParams& params) {
    const int n = params.n();
    MatrixXd T = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) T(i, j) = params.T_raw(i, j);
        T(i, i) = positive_diagonal_map(params.T_raw(i, i));
        if (!(T(i, i) > 0) || !std::isfinite(T(i, i)))
            throw ParameterizationError("stable_matrix: scaling diagonal not positive");
    }
    return T;
}

MatrixXd stable_matrix(const StableMatrixParams& params) {
    if (!params.M_raw.allFinite() || !params.T_raw.allFinite())
        throw ParameterizationError("stable_matrix: non-finite parameters");
    if (params.M_raw.rows() != params.M_raw.cols() ||
        params.T_raw.rows() != params.T_raw.cols() || params.M_raw.rows() != params.T_raw.rows())
        throw ParameterizationError("stable_matrix: square matrices of equal size required");

    Eigen::JacobiSVD<MatrixXd> svd(params.M_raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd s = svd.singularValues();
    // tanh saturates to 1.0 in double precision near |x| ~ 19; the cap keeps
    // the contraction strict for every finite parameter value
    for (Eigen::Index i = 0; i < s.size(); ++i)
        s(i) = std::min(std::tanh(s(i)), 1.0 - 1e-9);
    const MatrixXd M = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();

    const MatrixXd T = stable_matrix_scaling(params);
    // A = T^{-1} (M T), via a triangular solve
    return T.triangularView<Eigen::Lower>().solve(M * T);
}

StableMatrixParams stable_matrix_params_for(const MatrixXd& A) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n) throw ParameterizationError("stable_matrix_params_for: square matrix");
    const double rho = spectral_radius(A);
    if (!(rho < 1.0))
        throw ParameterizationError("stable_matrix_params_for: spectral radius " +
                                    std::to_string(rho) + " >= 1");

    // P solving A P A^T - P = -I certifies the decrease; factor P^{-1} = T^T T
    // with T lower triangular and positive diagonal.
    const MatrixXd P = solve_discrete_lyapunov(A, MatrixXd::Identity(n, n));
    const MatrixXd Pinv = P.llt().solve(MatrixXd::Identity(n, n));
    // Reverse-order Cholesky: J Pinv J = C C^T (C lower) gives
    // Pinv = (J C J)(J C J)^T with J C J upper, so T = (J C J)^T is lower.
    MatrixXd J = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) J(i, n - 1 - i) = 1.0;
    const MatrixXd JPJ = J * ((Pinv + Pinv.transpose()) * 0.5) * J;
    Eigen::LLT<MatrixXd> llt(JPJ);
    if (llt.info() != Eigen::Success)
        throw ParameterizationError("stable_matrix_params_for: Lyapunov factorization failed");
    const MatrixXd C = llt.matrixL();
    MatrixXd T = (J * C * J).transpose();
    // Normalize to a positive diagonal (column signs are free).
    for (int i = 0; i < n; ++i) {
        if (T(i, i) < 0) T.row(i) *= -1.0;
        if (!(T(i, i) > kDiagFloor))
            throw ParameterizationError("stable_matrix_params_for: scaling diagonal underflow");
    }

    const MatrixXd M = T * A * T.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(n, n));
    Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (!(s(i) < 1.0))
            throw ParameterizationError("stable_matrix_params_for: non-contractive factor");
        s(i) = std::atanh(std::min(s(i), 1.0 - 1e-15));
    }

    StableMatrixParams params;
    params.M_raw = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    params.T_raw = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) params.T_raw(i, j) = T(i, j);
        params.T_raw(i, i) = positive_diagonal_unmap(T(i, i));
    }
    return params;
}

// --------------------------------------------------------------------------

Mlp Mlp::zeros(const std::vector<int>& sizes) {
    if (sizes.size() < 2) throw std::invalid_argument("Mlp: need input and output sizes");
    Mlp net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        net.weights.push_back(MatrixXd::Zero(sizes[l + 1], sizes[l]));
        net.biases.push_back(VectorXd::Zero(sizes[l + 1]));
    }
    return net;
}

Mlp Mlp::random(const std::vector<int>& sizes, std::mt19937_64& rng, double scale) {
    Mlp net = zeros(sizes);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const double fan = std::sqrt(static_cast<double>(net.weights[l].cols()));
        net.weights[l] = gauss_matrix(rng, net.weights[l].rows(), net.weights[l].cols(),
                                      scale / fan);
        net.biases[l] = gauss_vector(rng, net.biases[l].size(), 0.1 * scale);
    }
    return net;
}

VectorXd Mlp::operator()(const VectorXd& x) const {
    VectorXd h = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        h = weights[l] * h + biases[l];
        if (l + 1 < weights.size()) h = h.array().tanh();
    }
    return h;
}

int Mlp::param_count() const {
    int count = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        count += static_cast<int>(weights[l].size() + biases[l].size());
    return count;
}

// --------------------------------------------------------------------------

double smooth_relu(double x, double d) {
    if (x <= 0) return 0.0;
    if (x >= d) return x - d / 2.0;
    return x * x / (2.0 * d);
}

LyapunovNet::LyapunovNet(int input_dim, const std::vector<int>& hidden, double eps_quad)
    : input_dim_(input_dim), eps_quad_(eps_quad) {
    int prev = 0;
    std::vector<int> layout = hidden;
    layout.push_back(1);  // scalar output
    for (int width : layout) {
        Wz_raw_.push_back(MatrixXd::Zero(width, std::max(prev, 0)));
        Wy_.push_back(MatrixXd::Zero(width, input_dim));
        b_.push_back(VectorXd::Zero(width));
        prev = width;
    }
}

LyapunovNet LyapunovNet::random(int input_dim, const std::vector<int>& hidden,
                                std::mt19937_64& rng, double scale, double eps_quad) {
    LyapunovNet net(input_dim, hidden, eps_quad);
    for (std::size_t l = 0; l < net.Wy_.size(); ++l) {
        if (net.Wz_raw_[l].cols() > 0)
            net.Wz_raw_[l] = gauss_matrix(rng, net.Wz_raw_[l].rows(), net.Wz_raw_[l].cols(),
                                          scale);
        net.Wy_[l] = gauss_matrix(rng, net.Wy_[l].rows(), net.Wy_[l].cols(), scale);
        net.b_[l] = gauss_vector(rng, net.b_[l].size(), 0.1 * scale);
    }
    return net;
}

double LyapunovNet::raw_network(const VectorXd& z) const {
    VectorXd h;
    for (std::size_t l = 0; l < Wy_.size(); ++l) {
        VectorXd pre = Wy_[l] * z + b_[l];
        if (Wz_raw_[l].cols() > 0) {
            MatrixXd Wz_pos = Wz_raw_[l].unaryExpr([](double w) {
                return w > 0 ? w + std::log1p(std::exp(-w)) : std::log1p(std::exp(w));
            });
            pre += Wz_pos * h;
        }
        if (l + 1 < Wy_.size()) {
            h = pre.unaryExpr([](double x) { return smooth_relu(x); });
        } else {
            h = pre;
        }
    }
    return h(0);
}

double LyapunovNet::operator()(const VectorXd& z) const {
    if (z.size() != input_dim_) throw DimensionError("LyapunovNet: input dimension mismatch");
    const double g0 = raw_network(VectorXd::Zero(input_dim_));
    return smooth_relu(raw_network(z) - g0) + eps_quad_ * z.squaredNorm();
}

int LyapunovNet::param_count() const {
    int count = 0;
    for (std::size_t l = 0; l < Wy_.size(); ++l)
        count += static_cast<int>(Wz_raw_[l].size() + Wy_[l].size() + b_[l].size());
    return count;
}

void LyapunovNet::flatten_into(VectorXd& out, int& offset) const {
    auto put_matrix = [&](const MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) out(offset++) = m(i, j);
    };
    for (std::size_t l = 0; l < Wy_.size(); ++l) {
        put_matrix(Wz_raw_[l]);
        put_matrix(Wy_[l]);
        for (Eigen::Index i = 0; i < b_[l].size(); ++i) out(offset++) = b_[l](i);
    }
}

void LyapunovNet::unflatten_from(const VectorXd& in, int& offset) {
    auto take_matrix = [&](MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = in(offset++);
    };
    for (std::size_t l = 0; l < Wy_.size(); ++l) {
        take_matrix(Wz_raw_[l]);
        take_matrix(Wy_[l]);
        for (Eigen::Index i = 0; i < b_[l].size(); ++i) b_[l](i) = in(offset++);
    }
}

double lyapunov_scale(double v_z, double v_fz, double beta, double eps) {
    if (v_fz < eps) return beta * v_z < eps ? 0.0 : 1.0;
    // branch form of (beta V - relu(beta V - V(fz))) / V(fz); exact 1 when the
    // decrease already holds
    if (v_fz <= beta * v_z) return 1.0;
    return beta * v_z / v_fz;
}

// --------------------------------------------------------------------------

double StableLinearOperator::step(double r_hat) {
    const double u = C_q.dot(z) + D_q * r_hat;
    z = A_q * z + B_q * r_hat;
    return u;
}

void StableLinearOperator::reset() { z.setZero(); }

VectorXd StableNonlinearOperator::stable_step(const VectorXd& state) const {
    const VectorXd fz = f_hat(state);
    const double gamma = lyapunov_scale(V(state), V(fz), beta);
    return gamma * fz;
}

double StableNonlinearOperator::step(double r_hat) {
    const double u = C_q.dot(z) + D_q * r_hat;
    z = stable_step(z) + B_q * r_hat;
    return u;
}

void StableNonlinearOperator::reset() { z.setZero(); }

double q_lti_step(StableLinearOperator& op, double r_hat) { return op.step(r_hat); }
double q_nonlinear_step(StableNonlinearOperator& op, double r_hat) { return op.step(r_hat); }
double lyapunov_eval(const LyapunovNet& V, const VectorXd& z) { return V(z); }

// --------------------------------------------------------------------------

QLtiParams QLtiParams::zeros(int n) {
    QLtiParams p;
    p.core = StableMatrixParams::zeros(n);
    p.B = VectorXd::Zero(n);
    p.C = RowVectorXd::Zero(n);
    p.D = 0.0;
    return p;
}

QLtiParams QLtiParams::random(int n, std::mt19937_64& rng, double scale) {
    QLtiParams p;
    p.core = StableMatrixParams::random(n, rng, scale);
    p.B = gauss_vector(rng, n, scale);
    p.C = gauss_vector(rng, n, scale).transpose();
    p.D = gauss(rng, scale);
    return p;
}

int QLtiParams::param_count() const {
    const int n = core.n();
    return n * n + n * (n + 1) / 2 + 2 * n + 1;
}

VectorXd QLtiParams::flatten() const {
    const int n = core.n();
    VectorXd theta(param_count());
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) theta(k++) = core.M_raw(i, j);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) theta(k++) = core.T_raw(i, j);
    for (int i = 0; i < n; ++i) theta(k++) = B(i);
    for (int i = 0; i < n; ++i) theta(k++) = C(i);
    theta(k++) = D;
    return theta;
}

void QLtiParams::unflatten(const VectorXd& theta) {
    const int n = core.n();
    if (theta.size() != param_count())
        throw DimensionError("QLtiParams::unflatten: wrong parameter count");
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) core.M_raw(i, j) = theta(k++);
    core.T_raw.setZero();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) core.T_raw(i, j) = theta(k++);
    for (int i = 0; i < n; ++i) B(i) = theta(k++);
    for (int i = 0; i < n; ++i) C(i) = theta(k++);
    D = theta(k++);
}

StableLinearOperator QLtiParams::realize() const {
    StableLinearOperator op;
    op.A_q = stable_matrix(core);
    op.B_q = B;
    op.C_q = C;
    op.D_q = D;
    op.z = VectorXd::Zero(core.n());
    return op;
}

QNonlinearParams QNonlinearParams::random(int n, const std::vector<int>& f_hidden,
                                          const std::vector<int>& v_hidden, std::mt19937_64& rng,
                                          double scale, double beta) {
    QNonlinearParams p;
    std::vector<int> sizes;
    sizes.push_back(n);
    sizes.insert(sizes.end(), f_hidden.begin(), f_hidden.end());
    sizes.push_back(n);
    p.f_hat = Mlp::random(sizes, rng, scale);
    p.V = LyapunovNet::random(n, v_hidden, rng, scale);
    p.beta = beta;
    p.B = gauss_vector(rng, n, scale);
    p.C = gauss_vector(rng, n, scale).transpose();
    p.D = gauss(rng, scale);
    return p;
}

int QNonlinearParams::param_count() const {
    return static_cast<int>(2 * B.size()) + 1 + f_hat.param_count() + V.param_count();
}

VectorXd QNonlinearParams::flatten() const {
    VectorXd theta(param_count());
    int k = 0;
    for (Eigen::Index i = 0; i < B.size(); ++i) theta(k++) = B(i);
    for (Eigen::Index i = 0; i < C.size(); ++i) theta(k++) = C(i);
    theta(k++) = D;
    for (std::size_t l = 0; l < f_hat.weights.size(); ++l) {
        const MatrixXd& W = f_hat.weights[l];
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j) theta(k++) = W(i, j);
        for (Eigen::Index i = 0; i < f_hat.biases[l].size(); ++i) theta(k++) = f_hat.biases[l](i);
    }
    V.flatten_into(theta, k);
    return theta;
}

void QNonlinearParams::unflatten(const VectorXd& theta) {
    if (theta.size() != param_count())
        throw DimensionError("QNonlinearParams::unflatten: wrong parameter count");
    int k = 0;
    for (Eigen::Index i = 0; i < B.size(); ++i) B(i) = theta(k++);
    for (Eigen::Index i = 0; i < C.size(); ++i) C(i) = theta(k++);
    D = theta(k++);
    for (std::size_t l = 0; l < f_hat.weights.size(); ++l) {
        MatrixXd& W = f_hat.weights[l];
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = theta(k++);
        for (Eigen::Index i = 0; i < f_hat.biases[l].size(); ++i) f_hat.biases[l](i) = theta(k++);
    }
    V.unflatten_from(theta, k);
}

StableNonlinearOperator QNonlinearParams::realize() const {
    StableNonlinearOperator op;
    op.f_hat = f_hat;
    op.V = V;
    op.beta = beta;
    op.B_q = B;
    op.C_q = C;
    op.D_q = D;
    op.z = VectorXd::Zero(B.size());
    return op;
}

}  // namespace ykrl
