#pragma once

#include "ldgp/errors.hpp"
#include "ldgp/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace ldgp {

struct EssResult {
  Eigen::MatrixXd state;
  double log_likelihood = 0.0;
  double threshold = 0.0;
  int proposals = 0;
};

/// One elliptical slice sampling update of a zero-mean Gaussian-prior state.
///
/// prior_draw is a fresh draw from the prior (one column per width
/// component); every component moves on the same ellipse angle. The slice
/// threshold is the current log likelihood plus log u. The bracket starts at
/// [theta - 2pi, theta] and shrinks toward zero until a proposal clears the
/// threshold.
template <class LogLik>
EssResult ess_update(const Eigen::MatrixXd& current, double current_log_likelihood,
                     const Eigen::MatrixXd& prior_draw, LogLik&& log_likelihood, Rng& rng,
                     int max_proposals = 100000) {
  if (!std::isfinite(current_log_likelihood))
    throw NumericalError("ess_update: log likelihood of the current state is not finite");
  const double two_pi = 2.0 * std::numbers::pi;
  EssResult r;
  r.threshold = current_log_likelihood + std::log(uniform01(rng));
  double theta = uniform(rng, 0.0, two_pi);
  double lo = theta - two_pi;
  double hi = theta;
  for (int k = 0; k < max_proposals; ++k) {
    Eigen::MatrixXd proposal = current * std::cos(theta) + prior_draw * std::sin(theta);
    const double ll = log_likelihood(proposal);
    ++r.proposals;
    if (ll > r.threshold) {
      r.state = std::move(proposal);
      r.log_likelihood = ll;
      return r;
    }
    if (theta < 0.0)
      lo = theta;
    else
      hi = theta;
    theta = uniform(rng, lo, hi);
  }
  // Bracket collapsed onto theta = 0, i.e. the current state.
  r.state = current;
  r.log_likelihood = current_log_likelihood;
  return r;
}

}  // namespace ldgp
