// SPDX-License-Identifier: Apache-2.0
//
// simfas: outage analysis toolkit for stacked-metasurface transmitters with
// fluid-antenna receivers.

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace simfas {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

// Invalid or inconsistent user-facing configuration (geometry, config files,
// CLI arguments). Maps to exit code 1 in the CLI.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure during evaluation (non-finite intermediate, indefinite
// correlation matrix, ...). Maps to exit code 2 in the CLI.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quadrature did not reach the requested tolerance. Carries the best
// estimate so callers can decide whether to accept it.
struct ConvergenceError : NumericError {
    ConvergenceError(const std::string& msg, double estimate_, double error_estimate_)
        : NumericError(msg), estimate(estimate_), error_estimate(error_estimate_) {}
    double estimate;
    double error_estimate;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

} // namespace simfas
