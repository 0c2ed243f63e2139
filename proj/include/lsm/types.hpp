#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace lsm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Raised for invalid arguments, malformed configs, contract violations.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised for filesystem and parse failures; message carries file (and line).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a numerical procedure fails (non-PD solve, diverged values).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace lsm
