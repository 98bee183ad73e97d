#include "ldgp/linalg.hpp"

#include "ldgp/errors.hpp"

#include <cmath>

namespace ldgp {

namespace {
constexpr double kJitters[] = {1e-10, 1e-8};
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd z = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(z);
}

Eigen::MatrixXd CholeskyFactor::inverse() const {
  const Eigen::Index n = lower.rows();
  Eigen::MatrixXd inv = lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  return inv.transpose() * inv;
}

double CholeskyFactor::log_det() const { return 2.0 * lower.diagonal().array().log().sum(); }

bool try_robust_cholesky(const Eigen::MatrixXd& A, CholeskyFactor& out) {
  const Eigen::Index n = A.rows();
  for (double jitter : kJitters) {
    Eigen::MatrixXd B = A;
    B.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(B);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd L = llt.matrixL();
    bool ok = true;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(L(i, i) > 0.0) || !std::isfinite(L(i, i))) ok = false;
    if (!ok) continue;
    out.lower = std::move(L);
    out.jitter = jitter;
    return true;
  }
  return false;
}

CholeskyFactor robust_cholesky(const Eigen::MatrixXd& A) {
  CholeskyFactor f;
  if (!try_robust_cholesky(A, f)) throw NumericalError("correlation matrix is singular after jitter escalation");
  return f;
}

}  // namespace ldgp
