#include "ess_fixtures.hpp"
#include "ldgp/deep.hpp"
#include "ldgp/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ldgp;

namespace {

// Straightforward slice-on-ellipse sampler written from the algorithm statement.
Eigen::MatrixXd reference_ess(const Eigen::MatrixXd& f, const Eigen::MatrixXd& nu,
                              const std::function<double(const Eigen::MatrixXd&)>& L, Rng& rng, int* tries) {
  const double log_y = L(f) + std::log(uniform01(rng));
  double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  double a = theta - 2.0 * std::numbers::pi, b = theta;
  *tries = 0;
  while (true) {
    const Eigen::MatrixXd g = f * std::cos(theta) + nu * std::sin(theta);
    ++*tries;
    if (L(g) > log_y) return g;
    if (theta < 0.0)
      a = theta;
    else
      b = theta;
    theta = uniform(rng, a, b);
  }
}

}  // namespace

TEST_SUITE("ess") {

TEST_CASE("constant likelihood reproduces the prior") {
  const auto r = fixture::prior_reproduction(3000, 30, 99);
  CHECK(r.worst_mean_z < 4.0);
  CHECK(r.worst_var_z < 4.0);
}

TEST_CASE("accepted states clear the slice threshold") {
  const auto r = fixture::threshold_property(2000, 5);
  CHECK(r.violations == 0);
}

TEST_CASE("matches an independent implementation on a peaked three-point problem") {
  const Eigen::Vector3d peak(0.2, -0.1, 0.05);
  auto L = [&](const Eigen::MatrixXd& w) { return -0.5 * (w.col(0) - peak).squaredNorm() / 1e-4; };
  Rng a(42), b(42), draws(7);
  Eigen::MatrixXd s1 = Eigen::Vector3d(0.3, 0.0, 0.0), s2 = s1;
  for (int k = 0; k < 200; ++k) {
    const Eigen::MatrixXd nu = Eigen::Vector3d(standard_normal(draws), standard_normal(draws), standard_normal(draws));
    const EssResult r = ess_update(s1, L(s1), nu, L, a);
    int tries = 0;
    s2 = reference_ess(s2, nu, L, b, &tries);
    CHECK(r.proposals == tries);
    CHECK((r.state - s2).cwiseAbs().maxCoeff() == 0.0);
    s1 = r.state;
  }
}

TEST_CASE("first proposal accepted when it clears the threshold") {
  // The likelihood is flat except far away, so the first point on the ellipse always clears.
  auto L = [](const Eigen::MatrixXd& w) { return w.norm() < 100.0 ? 0.0 : -1e300; };
  Rng rng(1);
  const EssResult r = ess_update(Eigen::MatrixXd::Ones(3, 1), 0.0, Eigen::MatrixXd::Ones(3, 1), L, rng);
  CHECK(r.proposals == 1);
}

TEST_CASE("non-finite current likelihood is an error") {
  Rng rng(1);
  auto L = [](const Eigen::MatrixXd&) { return 0.0; };
  CHECK_THROWS_AS(ess_update(Eigen::MatrixXd::Zero(2, 1), -INFINITY, Eigen::MatrixXd::Ones(2, 1), L, rng),
                  NumericalError);
}

TEST_CASE("sampler prior draw has the conditional covariance") {
  Eigen::MatrixXd X(4, 1);
  X << 0.0, 0.3, 0.6, 1.0;
  Eigen::MatrixXd Y = X.array().sin();
  std::vector<std::vector<KernelConfig>> configs(2);
  KernelConfig c;
  c.lengthscales = Eigen::VectorXd::Constant(1, 0.5);
  c.nugget = 1e-6;
  configs[0] = {c};
  configs[1] = {c};
  LatentSampler sampler(X, Y, configs);
  std::vector<Eigen::MatrixXd> state{X};
  Rng rng(3);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(4, 4);
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const Eigen::MatrixXd d = sampler.prior_draw(0, state, rng);
    S += d * d.transpose();
  }
  S /= n;
  const Eigen::MatrixXd K = corr_matrix(c, X);
  CHECK((S - K).cwiseAbs().maxCoeff() < 0.05);
}

}
