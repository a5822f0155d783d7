#pragma once

#include <random>
#include <vector>

#include <Eigen/Core>

#include "ykrl/linalg.hpp"

namespace ykrl {

// ---------------------------------------------------------------------------
// Schur-stable matrices in closed form.
//
// An unconstrained pair (M_raw, T_raw) maps onto A = T^{-1} U tanh(S) V^T T
// where U S V^T is the SVD of M_raw and T is lower triangular with a positive
// diagonal derived from T_raw. Every finite parameter value yields rho(A) < 1
// and the quadratic decrease A P A^T - P < 0 with P = T^{-1} T^{-T}.
// ---------------------------------------------------------------------------

struct StableMatrixParams {
    MatrixXd M_raw;  // n x n, unconstrained
    MatrixXd T_raw;  // n x n, strict lower part free; diagonal through a softplus map

    int n() const { return static_cast<int>(M_raw.rows()); }
    static StableMatrixParams zeros(int n);
    static StableMatrixParams random(int n, std::mt19937_64& rng, double scale = 1.0);
};

// Diagonal positivity map and its inverse.
double positive_diagonal_map(double raw);
double positive_diagonal_unmap(double positive);

MatrixXd stable_matrix(const StableMatrixParams& params);
// The triangular scaling T; P = T^{-1} T^{-T} certifies the decrease.
MatrixXd stable_matrix_scaling(const StableMatrixParams& params);

// Exact right inverse of stable_matrix: parameters reproducing the given
// Schur-stable matrix (up to floating point). Throws ParameterizationError
// when rho(A) >= 1.
StableMatrixParams stable_matrix_params_for(const MatrixXd& A);

// ---------------------------------------------------------------------------
// Feedforward pieces for the nonlinear operator.
// ---------------------------------------------------------------------------

// Smooth feedforward network with tanh hidden activations and a linear output
// layer. An empty hidden list gives a plain affine map.
struct Mlp {
    std::vector<MatrixXd> weights;
    std::vector<VectorXd> biases;

    static Mlp zeros(const std::vector<int>& sizes);
    static Mlp random(const std::vector<int>& sizes, std::mt19937_64& rng, double scale = 1.0);

    VectorXd operator()(const VectorXd& x) const;
    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }
    int param_count() const;
};

// Input-convex Lyapunov candidate:
//   V(z) = srelu(g(z) - g(0)) + eps_quad ||z||^2
// with g an input-convex network (nonnegative hidden-to-hidden weights through
// a softplus map, convex nondecreasing smoothed-ReLU activations). The outer
// rectifier keeps V(0) = 0 and V >= eps_quad ||z||^2 without constraining the
// raw weights.
class LyapunovNet {
  public:
    LyapunovNet() = default;
    LyapunovNet(int input_dim, const std::vector<int>& hidden, double eps_quad = 1e-3);

    static LyapunovNet random(int input_dim, const std::vector<int>& hidden,
                              std::mt19937_64& rng, double scale = 1.0, double eps_quad = 1e-3);

    double operator()(const VectorXd& z) const;
    double eps_quad() const { return eps_quad_; }
    int input_dim() const { return input_dim_; }

    int param_count() const;
    void flatten_into(VectorXd& out, int& offset) const;
    void unflatten_from(const VectorXd& in, int& offset);

  private:
    double raw_network(const VectorXd& z) const;

    int input_dim_ = 0;
    double eps_quad_ = 1e-3;
    // Layer l: h_{l+1} = act(softplus(Wz_raw[l]) h_l + Wy[l] z + b[l]); the
    // first layer has no h input, the last produces a scalar.
    std::vector<MatrixXd> Wz_raw_;
    std::vector<MatrixXd> Wy_;
    std::vector<VectorXd> b_;
};

// Smoothed ReLU: 0 for x <= 0, quadratic on [0, d], affine beyond. Convex,
// nondecreasing, C^1.
double smooth_relu(double x, double d = 0.1);

// Scaling factor gamma = (beta V(z) - relu(beta V(z) - V(fz))) / V(fz), with
// the 0/0 guard: V(fz) below eps returns 0 when beta V(z) is also below eps,
// else 1 (the decrease already holds).
double lyapunov_scale(double v_z, double v_fz, double beta, double eps = 1e-12);

// ---------------------------------------------------------------------------
// The Q operators.
// ---------------------------------------------------------------------------

struct StableLinearOperator {
    MatrixXd A_q;
    VectorXd B_q;
    RowVectorXd C_q;
    double D_q = 0.0;
    VectorXd z;

    // u = C z + D r_hat, then z <- A z + B r_hat.
    double step(double r_hat);
    void reset();
    int order() const { return static_cast<int>(A_q.rows()); }
};

struct StableNonlinearOperator {
    Mlp f_hat;       // n -> n proposed transition
    LyapunovNet V;
    double beta = 0.99;
    VectorXd B_q;
    RowVectorXd C_q;
    double D_q = 0.0;
    VectorXd z;

    // Lyapunov-scaled autonomous transition gamma * f_hat(z).
    VectorXd stable_step(const VectorXd& state) const;
    // u = C z + D r_hat, then z <- stable_step(z) + B r_hat.
    double step(double r_hat);
    void reset();
    int order() const { return static_cast<int>(B_q.size()); }
};

double q_lti_step(StableLinearOperator& op, double r_hat);
double q_nonlinear_step(StableNonlinearOperator& op, double r_hat);
double lyapunov_eval(const LyapunovNet& V, const VectorXd& z);

// ---------------------------------------------------------------------------
// Trainable parameter records. Flat ordering: M_raw row-major, T_raw lower
// triangle row-major, B_q, C_q, D_q, then network weights layer-major
// (f_hat first, then the Lyapunov net) for the nonlinear record.
// ---------------------------------------------------------------------------

struct QLtiParams {
    StableMatrixParams core;
    VectorXd B;
    RowVectorXd C;
    double D = 0.0;

    static QLtiParams zeros(int n);
    static QLtiParams random(int n, std::mt19937_64& rng, double scale = 1.0);

    int param_count() const;
    VectorXd flatten() const;
    void unflatten(const VectorXd& theta);
    StableLinearOperator realize() const;
};

struct QNonlinearParams {
    Mlp f_hat;
    LyapunovNet V;
    double beta = 0.99;
    VectorXd B;
    RowVectorXd C;
    double D = 0.0;

    static QNonlinearParams random(int n, const std::vector<int>& f_hidden,
                                   const std::vector<int>& v_hidden, std::mt19937_64& rng,
                                   double scale = 1.0, double beta = 0.99);

    int param_count() const;
    VectorXd flatten() const;
    void unflatten(const VectorXd& theta);
    StableNonlinearOperator realize() const;
};

}  // namespace ykrl
