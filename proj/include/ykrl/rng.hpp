#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace ykrl {

// splitmix64 finalizer; used to derive independent streams from one master
// seed so that trial i is reproducible regardless of execution order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
    std::uint64_t s = splitmix64(seed);
    for (std::uint64_t v : stream) {
        s = splitmix64(s ^ (v + 0x9e3779b97f4a7c15ULL));
    }
    return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
    return std::mt19937_64(mix_seed(seed, stream));
}

inline double gauss(std::mt19937_64& rng, double stddev = 1.0) {
    if (stddev <= 0.0) return 0.0;
    std::normal_distribution<double> dist(0.0, stddev);
    return dist(rng);
}

inline Eigen::VectorXd gauss_vector(std::mt19937_64& rng, Eigen::Index n, double stddev = 1.0) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    if (stddev <= 0.0) return v;
    std::normal_distribution<double> dist(0.0, stddev);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

inline Eigen::MatrixXd gauss_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                                    double stddev = 1.0) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
    if (stddev <= 0.0) return m;
    std::normal_distribution<double> dist(0.0, stddev);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

inline std::vector<double> gauss_sequence(std::mt19937_64& rng, std::size_t n, double stddev = 1.0) {
    std::vector<double> v(n, 0.0);
    if (stddev <= 0.0) return v;
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& x : v) x = dist(rng);
    return v;
}

// Gaussian truncated to +-clip standard deviations (resampling).
inline double truncated_gauss(std::mt19937_64& rng, double clip = 3.0) {
    std::normal_distribution<double> dist(0.0, 1.0);
    double x = dist(rng);
    while (std::abs(x) > clip) x = dist(rng);
    return x;
}

}  // namespace ykrl
