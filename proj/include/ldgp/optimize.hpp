#pragma once

#include <Eigen/Dense>

#include <functional>

namespace ldgp {

/// Objective returning f(x) and writing its gradient. Returning a non-finite
/// value marks x as infeasible.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BoxBfgsOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-6;
  double relative_tolerance = 1e-10;
};

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool finite = false;
};

/// Minimizes f over lower <= x <= upper with a projected BFGS iteration and
/// Armijo backtracking along the projected path.
OptimizeResult minimize_box(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const BoxBfgsOptions& options = {});

}  // namespace ldgp
