#include "ldgp/kernel.hpp"

#include "ldgp/errors.hpp"

#include <cmath>

namespace ldgp {

namespace {

constexpr double kSqrt5 = 2.23606797749978969641;

void check_dims(const KernelConfig& config, Eigen::Index d, const char* what) {
  if (config.dims() != d)
    throw ValidationError(std::string(what) + ": input has " + std::to_string(d) + " columns, kernel expects " +
                          std::to_string(config.dims()));
}

void check_finite(const Eigen::Ref<const Eigen::MatrixXd>& X, const char* what) {
  if (!X.allFinite()) throw ValidationError(std::string(what) + ": non-finite input");
}

double corr_no_nugget(const KernelConfig& c, const Eigen::Ref<const Eigen::RowVectorXd>& a,
                      const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  if (c.family == KernelFamily::SquaredExponential) {
    double s = 0.0;
    for (Eigen::Index d = 0; d < a.size(); ++d) {
      const double z = (a[d] - b[d]) / c.lengthscales[d];
      s += z * z;
    }
    return std::exp(-s);
  }
  double k = 1.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) k *= kernel_1d(c.family, c.lengthscales[d], std::abs(a[d] - b[d]));
  return k;
}

}  // namespace

std::string to_string(KernelFamily family) {
  return family == KernelFamily::SquaredExponential ? "squared-exponential" : "matern-2.5";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "squared-exponential" || name == "sexp" || name == "se") return KernelFamily::SquaredExponential;
  if (name == "matern-2.5" || name == "matern2.5") return KernelFamily::Matern25;
  throw ValidationError("unknown kernel family '" + name + "'");
}

void KernelConfig::validate() const {
  if (lengthscales.size() == 0) throw ValidationError("kernel: no lengthscales");
  for (Eigen::Index d = 0; d < lengthscales.size(); ++d)
    if (!std::isfinite(lengthscales[d]) || lengthscales[d] <= 0.0)
      throw ValidationError("kernel: lengthscales must be finite and positive");
  if (!std::isfinite(scale) || scale <= 0.0) throw ValidationError("kernel: scale must be positive");
  if (!std::isfinite(nugget) || nugget < 0.0 || nugget > 1e6) throw ValidationError("kernel: nugget outside [0, 1e6]");
}

double kernel_1d(KernelFamily family, double lengthscale, double r) {
  if (family == KernelFamily::SquaredExponential) {
    const double z = r / lengthscale;
    return std::exp(-z * z);
  }
  const double a = kSqrt5 * r / lengthscale;
  return (1.0 + a + a * a / 3.0) * std::exp(-a);
}

double correlation(const KernelConfig& config, const Eigen::Ref<const Eigen::RowVectorXd>& a,
                   const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  double k = corr_no_nugget(config, a, b);
  if (config.nugget > 0.0 && a == b) k += config.nugget;
  return k;
}

Eigen::MatrixXd corr_matrix(const KernelConfig& config, const Eigen::MatrixXd& X) {
  check_dims(config, X.cols(), "corr_matrix");
  check_finite(X, "corr_matrix");
  const Eigen::Index m = X.rows();
  Eigen::MatrixXd R(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    R(i, i) = 1.0 + config.nugget;
    for (Eigen::Index j = 0; j < i; ++j) {
      double k = corr_no_nugget(config, X.row(i), X.row(j));
      if (config.nugget > 0.0 && X.row(i) == X.row(j)) k += config.nugget;
      R(i, j) = k;
      R(j, i) = k;
    }
  }
  return R;
}

Eigen::VectorXd cross_corr(const KernelConfig& config, const Eigen::MatrixXd& X,
                           const Eigen::Ref<const Eigen::RowVectorXd>& xstar) {
  check_dims(config, X.cols(), "cross_corr");
  if (xstar.size() != X.cols()) throw ValidationError("cross_corr: query dimension mismatch");
  check_finite(xstar, "cross_corr");
  Eigen::VectorXd r(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) r[i] = correlation(config, X.row(i), xstar);
  return r;
}

std::vector<Eigen::MatrixXd> corr_matrix_log_gradients(const KernelConfig& config, const Eigen::MatrixXd& X,
                                                       bool with_nugget) {
  check_dims(config, X.cols(), "corr_matrix_log_gradients");
  const Eigen::Index m = X.rows();
  const Eigen::Index dims = X.cols();
  std::vector<Eigen::MatrixXd> grads(dims + (with_nugget ? 1 : 0), Eigen::MatrixXd::Zero(m, m));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double k = corr_no_nugget(config, X.row(i), X.row(j));
      for (Eigen::Index d = 0; d < dims; ++d) {
        const double r = std::abs(X(i, d) - X(j, d));
        const double g = config.lengthscales[d];
        double factor;
        if (config.family == KernelFamily::SquaredExponential) {
          factor = 2.0 * r * r / (g * g);
        } else {
          // d log k / d log gamma for the Matern-2.5 factor.
          const double a = kSqrt5 * r / g;
          factor = (a * a / 3.0) * (1.0 + a) / (1.0 + a + a * a / 3.0);
        }
        grads[d](i, j) = grads[d](j, i) = k * factor;
      }
    }
  }
  if (with_nugget) {
    auto& gn = grads.back();
    for (Eigen::Index i = 0; i < m; ++i) {
      gn(i, i) = config.nugget;
      for (Eigen::Index j = 0; j < i; ++j)
        if (X.row(i) == X.row(j)) gn(i, j) = gn(j, i) = config.nugget;
    }
  }
  return grads;
}

double xi(double gamma, double mu, double var, double x) {
  if (!(gamma > 0.0)) throw ValidationError("xi: lengthscale must be positive");
  if (!(var >= 0.0)) throw ValidationError("xi: variance must be non-negative");
  const double g2 = gamma * gamma;
  const double d = x - mu;
  return std::exp(-d * d / (g2 + 2.0 * var)) / std::sqrt(1.0 + 2.0 * var / g2);
}

double zeta(double gamma, double mu, double var, double xi_pt, double xj_pt) {
  if (!(gamma > 0.0)) throw ValidationError("zeta: lengthscale must be positive");
  if (!(var >= 0.0)) throw ValidationError("zeta: variance must be non-negative");
  const double g2 = gamma * gamma;
  const double diff = xi_pt - xj_pt;
  const double mid = 0.5 * (xi_pt + xj_pt) - mu;
  return std::exp(-diff * diff / (2.0 * g2) - mid * mid / (0.5 * g2 + 2.0 * var)) / std::sqrt(1.0 + 4.0 * var / g2);
}

}  // namespace ldgp
