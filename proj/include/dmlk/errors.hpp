#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dmlk {

// Input or configuration violates a documented precondition.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical failure discovered at runtime (matrix not positive definite,
// degenerate score, ...).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or unreadable data (CSV schema mismatch, unparsable cell, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative solver hit its iteration cap. Carries the last iterate and the
// worst stationarity violation so callers can inspect how close it got.
struct ConvergenceError : NumericError {
    ConvergenceError(const std::string& what, std::vector<double> last, double kkt)
        : NumericError(what), last_coefficients(std::move(last)), max_kkt_violation(kkt) {}

    std::vector<double> last_coefficients;
    double max_kkt_violation = 0.0;
};

}  // namespace dmlk
