#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace impulse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using ScalarFn = std::function<double(const Vec&)>;
using VectorFn = std::function<Vec(const Vec&)>;
using MatrixFn = std::function<Mat(const Vec&)>;
using JumpFn = std::function<Vec(const Vec& x, const Vec& z)>;

/// Raised when a model or measure violates one of the standing assumptions
/// (Lipschitz data, integrability, discount margin, ellipticity).
class AssumptionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an iterative method exhausts its budget. `history` carries the
/// monitored quantity per iteration.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history(std::move(history)) {}
    std::vector<double> history;
};

}  // namespace impulse
