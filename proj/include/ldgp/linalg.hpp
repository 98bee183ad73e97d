#pragma once

#include <Eigen/Dense>

namespace ldgp {

struct CholeskyFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd inverse() const;
  double log_det() const;
};

/// Cholesky of A + jitter*I, trying 1e-10 then 1e-8. Throws NumericalError
/// when both fail.
CholeskyFactor robust_cholesky(const Eigen::MatrixXd& A);

/// Same as robust_cholesky but reports failure through the return flag.
bool try_robust_cholesky(const Eigen::MatrixXd& A, CholeskyFactor& out);

}  // namespace ldgp
