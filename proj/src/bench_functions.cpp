#include "ldgp/bench.hpp"

#include "ldgp/errors.hpp"

#include <cmath>
#include <numbers>

namespace ldgp {

double f1(double x) { return (std::sin(7.5 * x) + 1.0) / 2.0; }

double f2(double x) {
  const double u = 2.0 * x - 1.0;
  return std::sin(4.0 * x - 4.0) / 3.0 + 2.0 / 3.0 * std::exp(-120.0 * u * u) + 1.0 / 3.0;
}

double f3(double x) {
  const double q = std::pow(0.4 * x - 0.85, 4);
  return -5.0 / 6.0 * (std::sin(40.0 * q) * std::cos(x - 2.375) + 0.2 * x + 0.55) + 1.0;
}

double synthetic_chain(double x) { return f3(f2(f1(x))); }

namespace {

void check_option(double S, double K, double tau, double v) {
  if (!(S > 0.0) || !(K > 0.0) || !(tau > 0.0) || !(v > 0.0))
    throw ValidationError("black-scholes: S, K, tau and v must be positive");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

double bs_d1(double S, double K, double tau, double r, double v) {
  check_option(S, K, tau, v);
  return (std::log(S / K) + (r + 0.5 * v * v) * tau) / (v * std::sqrt(tau));
}

double bs_call(double S, double K, double tau, double r, double v) {
  const double d1 = bs_d1(S, K, tau, r, v);
  const double d2 = d1 - v * std::sqrt(tau);
  return S * normal_cdf(d1) - K * std::exp(-r * tau) * normal_cdf(d2);
}

double bs_delta(double S, double K, double tau, double r, double v) { return normal_cdf(bs_d1(S, K, tau, r, v)); }

double bs_vega(double S, double K, double tau, double r, double v) {
  return S * std::sqrt(tau) * normal_pdf(bs_d1(S, K, tau, r, v));
}

double vega_strategy(double V1, double V2, double eps) {
  if (!std::isfinite(V1) || !std::isfinite(V2)) throw ValidationError("vega_strategy: non-finite input");
  if (std::abs(V2) <= eps) throw NumericalError("vega_strategy: near-singular hedge, |V2| <= eps");
  return -V1 / V2;
}

double delta_strategy(double D1, double D2, double P2) {
  if (!std::isfinite(D1) || !std::isfinite(D2) || !std::isfinite(P2))
    throw ValidationError("delta_strategy: non-finite input");
  return -(D1 + D2 * P2);
}

double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth) {
  if (predictions.size() != truth.size() || truth.size() == 0)
    throw ValidationError("rmse: predictions and truth must be non-empty and of equal length");
  return std::sqrt((predictions - truth).squaredNorm() / static_cast<double>(truth.size()));
}

double nrmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth) {
  const double e = rmse(predictions, truth);
  const double range = truth.maxCoeff() - truth.minCoeff();
  if (!(range > 0.0)) throw ValidationError("nrmse: truth has zero range");
  return e / range * 100.0;
}

}  // namespace ldgp
