#include "ykrl/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace ykrl {

namespace {

struct Simplex {
    std::vector<Eigen::VectorXd> x;
    std::vector<double> f;
};

NelderMeadResult run_once(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& x0, double step, int max_evals, double f_tol) {
    const int n = static_cast<int>(x0.size());
    NelderMeadResult res;
    res.x = x0;
    res.value = f(x0);
    res.evaluations = 1;
    if (!std::isfinite(res.value)) res.value = std::numeric_limits<double>::max();

    Simplex s;
    s.x.push_back(x0);
    s.f.push_back(res.value);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd xi = x0;
        xi(i) += (xi(i) != 0.0 ? step * std::abs(xi(i)) : step);
        double fi = f(xi);
        ++res.evaluations;
        if (!std::isfinite(fi)) fi = std::numeric_limits<double>::max();
        s.x.push_back(xi);
        s.f.push_back(fi);
    }

    auto order = [&]() {
        std::vector<int> idx(s.x.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return s.f[a] < s.f[b]; });
        Simplex t;
        for (int i : idx) {
            t.x.push_back(s.x[i]);
            t.f.push_back(s.f[i]);
        }
        s = std::move(t);
    };
    auto eval = [&](const Eigen::VectorXd& x) {
        double v = f(x);
        ++res.evaluations;
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    while (res.evaluations < max_evals) {
        order();
        if (s.f.back() - s.f.front() < f_tol) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += s.x[i];
        centroid /= static_cast<double>(n);

        Eigen::VectorXd xr = centroid + alpha * (centroid - s.x.back());
        double fr = eval(xr);
        if (fr < s.f.front()) {
            Eigen::VectorXd xe = centroid + gamma * (centroid - s.x.back());
            double fe = eval(xe);
            if (fe < fr) {
                s.x.back() = xe;
                s.f.back() = fe;
            } else {
                s.x.back() = xr;
                s.f.back() = fr;
            }
        } else if (fr < s.f[n - 1]) {
            s.x.back() = xr;
            s.f.back() = fr;
        } else {
            Eigen::VectorXd xc = centroid + rho * (s.x.back() - centroid);
            double fc = eval(xc);
            if (fc < s.f.back()) {
                s.x.back() = xc;
                s.f.back() = fc;
            } else {
                for (std::size_t i = 1; i < s.x.size(); ++i) {
                    s.x[i] = s.x[0] + sigma * (s.x[i] - s.x[0]);
                    s.f[i] = eval(s.x[i]);
                }
            }
        }
    }
    order();
    if (s.f.front() < res.value) {
        res.value = s.f.front();
        res.x = s.x.front();
    }
    return res;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opt) {
    NelderMeadResult best;
    best.x = x0;
    best.value = std::numeric_limits<double>::max();
    int evals_left = opt.max_evals;
    double step = opt.initial_step;
    Eigen::VectorXd start = x0;
    for (int r = 0; r < std::max(opt.restarts, 1) && evals_left > 0; ++r) {
        NelderMeadResult res = run_once(f, start, step, evals_left, opt.f_tol);
        evals_left -= res.evaluations;
        if (res.value < best.value) {
            best.x = res.x;
            best.value = res.value;
            best.converged = res.converged;
        }
        best.evaluations += res.evaluations;
        start = best.x;
        step *= 0.25;
    }
    return best;
}

}  // namespace ykrl
