#include "ldgp/optimize.hpp"

#include <cmath>
#include <limits>

namespace ldgp {

namespace {

Eigen::VectorXd project(Eigen::VectorXd x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Gradient with components that point out of the box at an active bound removed.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] <= lo[i] && g[i] > 0.0) pg[i] = 0.0;
    if (x[i] >= hi[i] && g[i] < 0.0) pg[i] = 0.0;
  }
  return pg;
}

}  // namespace

OptimizeResult minimize_box(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const BoxBfgsOptions& options) {
  const Eigen::Index n = x0.size();
  OptimizeResult res;
  Eigen::VectorXd x = project(std::move(x0), lower, upper);
  Eigen::VectorXd g(n);
  double fx = f(x, g);
  res.x = x;
  res.value = fx;
  if (!std::isfinite(fx) || !g.allFinite()) return res;
  res.finite = true;

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  for (int it = 0; it < options.max_iterations; ++it) {
    res.iterations = it + 1;
    Eigen::VectorXd pg = projected_gradient(x, g, lower, upper);
    if (pg.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) break;

    Eigen::VectorXd dir = -H * g;
    for (Eigen::Index i = 0; i < n; ++i)
      if ((x[i] <= lower[i] && dir[i] < 0.0) || (x[i] >= upper[i] && dir[i] > 0.0)) dir[i] = 0.0;
    if (dir.dot(g) >= 0.0) {
      H.setIdentity();
      dir = -pg;
    }
    // Cap the first step so a unit-Hessian start does not jump across the box.
    const double dn = dir.norm();
    if (dn > 2.0) dir *= 2.0 / dn;

    double step = 1.0;
    Eigen::VectorXd xn, gn(n);
    double fn = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      xn = project(x + step * dir, lower, upper);
      fn = f(xn, gn);
      if (std::isfinite(fn) && gn.allFinite() && fn <= fx + 1e-4 * g.dot(xn - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (H.isIdentity()) break;
      H.setIdentity();
      continue;
    }

    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    const double prev = fx;
    x = xn;
    g = gn;
    fx = fn;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (std::abs(prev - fx) <= options.relative_tolerance * (1.0 + std::abs(fx))) break;
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace ldgp
