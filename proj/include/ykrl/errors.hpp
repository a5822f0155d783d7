#pragma once

#include <stdexcept>
#include <string>

namespace ykrl {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a window cannot be matched to the stored data within the
// consistency tolerance (noise-free mode only).
struct InconsistentTrajectoryError : std::runtime_error {
    InconsistentTrajectoryError(const std::string& what, double residual)
        : std::runtime_error(what), residual(residual) {}
    double residual;
};

struct ParameterizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A simulated signal left the finite range at a known step.
struct NonFiniteSignalError : std::runtime_error {
    NonFiniteSignalError(const std::string& what, int step)
        : std::runtime_error(what + " at step " + std::to_string(step)), step(step) {}
    int step;
};

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& what, int line = -1)
        : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line(line) {}
    int line;
};

struct InfeasibleProjectionError : std::runtime_error {
    InfeasibleProjectionError(const std::string& what, double kp, double ki)
        : std::runtime_error(what), best_kp(kp), best_ki(ki) {}
    double best_kp;
    double best_ki;
};

}  // namespace ykrl
