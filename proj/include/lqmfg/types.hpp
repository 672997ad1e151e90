#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace lqmfg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Model data violate the standing assumptions (coercivity, PSD-ness, ...).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The fixed-point iteration failed to contract, or a strict-mode bound
/// check failed.
struct SolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed model file or expression string.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace lqmfg
