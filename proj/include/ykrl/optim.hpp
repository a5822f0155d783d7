#pragma once

#include <functional>

#include <Eigen/Core>

namespace ykrl {

struct NelderMeadOptions {
    int max_evals = 500;
    int restarts = 1;          // re-seeded simplex around the incumbent
    double initial_step = 0.1;
    double f_tol = 1e-12;      // spread of simplex values at which to stop
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

// Derivative-free simplex minimizer with restarts.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {});

}  // namespace ykrl
