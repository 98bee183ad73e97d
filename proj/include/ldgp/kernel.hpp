#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ldgp {

enum class KernelFamily { SquaredExponential, Matern25 };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Hyperparameters of one GP node.
///
/// The correlation between two inputs is prod_d k_d(|x_d - x'_d|) plus the
/// nugget when the inputs coincide exactly. The squared-exponential factor is
/// k_d(r) = exp(-r^2 / gamma_d^2); Matern-2.5 is
/// (1 + sqrt5 r/gamma + 5r^2/(3 gamma^2)) exp(-sqrt5 r/gamma).
struct KernelConfig {
  KernelFamily family = KernelFamily::SquaredExponential;
  Eigen::VectorXd lengthscales;
  double scale = 1.0;   // sigma^2
  double nugget = 0.0;  // eta

  Eigen::Index dims() const { return lengthscales.size(); }
  /// Throws ValidationError on non-positive lengthscales or scale, or a nugget outside [0, 1e6].
  void validate() const;
};

/// One-dimensional correlation factor at distance r >= 0.
double kernel_1d(KernelFamily family, double lengthscale, double r);

/// Correlation between two points, nugget indicator included.
double correlation(const KernelConfig& config, const Eigen::Ref<const Eigen::RowVectorXd>& a,
                   const Eigen::Ref<const Eigen::RowVectorXd>& b);

Eigen::MatrixXd corr_matrix(const KernelConfig& config, const Eigen::MatrixXd& X);

Eigen::VectorXd cross_corr(const KernelConfig& config, const Eigen::MatrixXd& X,
                           const Eigen::Ref<const Eigen::RowVectorXd>& xstar);

/// Derivatives of corr_matrix with respect to log lengthscale (one matrix per
/// dimension) followed, when with_nugget is set, by d/d(log eta).
std::vector<Eigen::MatrixXd> corr_matrix_log_gradients(const KernelConfig& config, const Eigen::MatrixXd& X,
                                                       bool with_nugget);

/// E[k(w, x)] for w ~ N(mu, var) under the squared-exponential factor.
double xi(double gamma, double mu, double var, double x);

/// E[k(w, xi_pt) k(w, xj_pt)] for w ~ N(mu, var) under the squared-exponential factor.
double zeta(double gamma, double mu, double var, double xi_pt, double xj_pt);

}  // namespace ldgp
