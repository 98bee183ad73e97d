#include "ldgp/errors.hpp"
#include "ldgp/gp.hpp"
#include "ldgp/linalg.hpp"
#include "ldgp/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace ldgp;

namespace {

Eigen::MatrixXd random_inputs(int m, int d, Rng& rng) {
  Eigen::MatrixXd X(m, d);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = uniform01(rng);
  return X;
}

// Dense squared-exponential correlation written out independently of the library.
Eigen::MatrixXd se_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::VectorXd& gamma) {
  Eigen::MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index d = 0; d < A.cols(); ++d) s += std::pow((A(i, d) - B(j, d)) / gamma[d], 2);
      K(i, j) = std::exp(-s);
    }
  return K;
}

// Draw from a zero-mean GP prior at X.
Eigen::VectorXd gp_sample(const Eigen::MatrixXd& X, double gamma, Rng& rng) {
  Eigen::MatrixXd K = se_matrix(X, X, Eigen::VectorXd::Constant(X.cols(), gamma));
  K.diagonal().array() += 1e-8;
  const Eigen::MatrixXd L = K.llt().matrixL();
  Eigen::VectorXd z(X.rows());
  for (auto& v : z) v = standard_normal(rng);
  return L * z;
}

}  // namespace

TEST_SUITE("gp") {

TEST_CASE("cholesky jitter escalation") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Ones(3, 3);
  const CholeskyFactor f = robust_cholesky(A);
  CHECK(f.jitter > 0.0);
  CHECK((f.lower * f.lower.transpose() - A).cwiseAbs().maxCoeff() <= 1e-8 + 1e-15);
  Eigen::MatrixXd N = -Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(robust_cholesky(N), NumericalError);
  CholeskyFactor out;
  CHECK_FALSE(try_robust_cholesky(N, out));
}

TEST_CASE("prediction matches the dense-inverse formula") {
  Rng rng(3);
  const Eigen::MatrixXd Xs = random_inputs(12, 2, rng);
  Eigen::VectorXd ys(12);
  for (Eigen::Index i = 0; i < 12; ++i) ys[i] = std::sin(4 * Xs(i, 0)) + Xs(i, 1);
  KernelConfig c;
  c.lengthscales = Eigen::Vector2d(0.4, 0.9);
  c.scale = 1.3;
  c.nugget = 1e-4;
  const GPModel m = GPModel::assemble(Xs, ys, c, InputScaler::identity(2), OutputScaler{});
  Eigen::MatrixXd K = se_matrix(Xs, Xs, c.lengthscales);
  K.diagonal().array() += c.nugget + 1e-10;  // first jitter level
  const Eigen::MatrixXd Kinv = K.inverse();
  for (int k = 0; k < 20; ++k) {
    const Eigen::MatrixXd x = random_inputs(1, 2, rng);
    const Eigen::VectorXd r = se_matrix(Xs, x, c.lengthscales).col(0);
    const double mean = r.dot(Kinv * ys);
    const double var = c.scale * (1.0 + c.nugget + 1e-10 - r.dot(Kinv * r));
    const Prediction p = m.predict(x.row(0));
    CHECK(p.mean == doctest::Approx(mean).epsilon(1e-9));
    CHECK(p.var == doctest::Approx(var).epsilon(1e-7).scale(1e-9));
  }
}

TEST_CASE("log likelihood gradient matches finite differences") {
  Rng rng(8);
  const Eigen::MatrixXd Xs = random_inputs(15, 2, rng);
  Eigen::VectorXd ys(15);
  for (Eigen::Index i = 0; i < 15; ++i) ys[i] = std::cos(3 * Xs(i, 0)) * Xs(i, 1);
  for (bool profile : {true, false}) {
    KernelConfig c;
    c.lengthscales = Eigen::Vector2d(0.5, 0.7);
    c.nugget = 1e-3;
    c.scale = 0.8;
    Eigen::VectorXd g;
    likelihood_with_gradient(c, Xs, ys, profile, true, &g);
    REQUIRE(g.size() == 3);
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      KernelConfig up = c, dn = c;
      up.scale = dn.scale = 0.8;
      if (k < 2) {
        up.lengthscales[k] *= std::exp(h);
        dn.lengthscales[k] *= std::exp(-h);
      } else {
        up.nugget *= std::exp(h);
        dn.nugget *= std::exp(-h);
      }
      const double fd = (likelihood_with_gradient(up, Xs, ys, profile, true, nullptr) -
                         likelihood_with_gradient(dn, Xs, ys, profile, true, nullptr)) /
                        (2 * h);
      CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5).scale(1e-6));
    }
  }
}

TEST_CASE("training points are interpolated") {
  Rng rng(21);
  const Eigen::MatrixXd X = random_inputs(25, 2, rng) * 10.0;
  Eigen::VectorXd y(25);
  for (Eigen::Index i = 0; i < 25; ++i) y[i] = 5.0 + std::sin(X(i, 0)) * std::cos(0.3 * X(i, 1));
  const GPModel m = train_gp(X, y, KernelFamily::SquaredExponential);
  const double sd = std::sqrt((y.array() - y.mean()).square().sum() / (y.size() - 1));
  for (Eigen::Index i = 0; i < 25; ++i) CHECK(std::abs(m.predict(X.row(i)).mean - y[i]) < 1e-6 * sd);
  for (int k = 0; k < 500; ++k) CHECK(m.predict(random_inputs(1, 2, rng).row(0) * 10.0).var >= 0.0);
}

TEST_CASE("lengthscale recovered from a GP sample") {
  Rng rng(5);
  const Eigen::MatrixXd X = random_inputs(60, 1, rng);
  const Eigen::VectorXd y = gp_sample(X, 0.2, rng);
  TrainOptions o;
  o.scale_inputs = false;
  o.standardize_output = false;
  const HyperFit fit = fit_hyperparameters(X, y, KernelFamily::SquaredExponential, o);
  CHECK(std::abs(std::log(fit.config.lengthscales[0] / 0.2)) < 0.3);
}

TEST_CASE("matern model trains and predicts") {
  Rng rng(6);
  const Eigen::MatrixXd X = random_inputs(20, 1, rng);
  Eigen::VectorXd y = (6.0 * X.col(0).array()).sin();
  const GPModel m = train_gp(X, y, KernelFamily::Matern25);
  CHECK(m.config().family == KernelFamily::Matern25);
  CHECK(std::abs(m.predict(Eigen::RowVectorXd::Constant(1, 0.5)).mean - std::sin(3.0)) < 0.05);
}

TEST_CASE("training rejects bad data") {
  Eigen::MatrixXd X(3, 1);
  X << 0.0, 0.5, 0.5;
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(train_gp(X, y, KernelFamily::SquaredExponential), ValidationError);
  X << 0.0, 0.5, 1.0;
  CHECK_THROWS_AS(train_gp(X, Eigen::VectorXd::Constant(3, 2.0), KernelFamily::SquaredExponential), ValidationError);
  CHECK_THROWS_AS(train_gp(X.topRows(1), y.head(1), KernelFamily::SquaredExponential), ValidationError);
  y[1] = std::nan("");
  CHECK_THROWS_AS(train_gp(X, y, KernelFamily::SquaredExponential), ValidationError);
}

TEST_CASE("estimated nugget absorbs noise") {
  Rng rng(9);
  const Eigen::MatrixXd X = random_inputs(40, 1, rng);
  Eigen::VectorXd y(40);
  for (Eigen::Index i = 0; i < 40; ++i) y[i] = std::sin(5 * X(i, 0)) + 0.1 * standard_normal(rng);
  TrainOptions o;
  o.estimate_nugget = true;
  const GPModel m = train_gp(X, y, KernelFamily::SquaredExponential, o);
  CHECK(m.config().nugget > 1e-4);
}

TEST_CASE("json round trip preserves predictions") {
  Rng rng(10);
  const Eigen::MatrixXd X = random_inputs(10, 2, rng);
  Eigen::VectorXd y = X.col(0).array().square() + X.col(1).array();
  const GPModel m = train_gp(X, y, KernelFamily::SquaredExponential);
  const GPModel back = gp_from_json(json::parse(to_json(m).dump()));
  for (int k = 0; k < 10; ++k) {
    const Eigen::MatrixXd x = random_inputs(1, 2, rng);
    CHECK(std::abs(back.predict(x.row(0)).mean - m.predict(x.row(0)).mean) <= 1e-12);
    CHECK(std::abs(back.predict(x.row(0)).var - m.predict(x.row(0)).var) <= 1e-12);
  }
  CHECK(to_json(back).dump() == to_json(m).dump());
}

TEST_CASE("json with a wrong kernel dimension is rejected") {
  Rng rng(12);
  const Eigen::MatrixXd X = random_inputs(6, 2, rng);
  const GPModel m = train_gp(X, X.col(0) + X.col(1), KernelFamily::SquaredExponential);
  json j = to_json(m);
  j["gamma"] = json::array({0.5});
  CHECK_THROWS(gp_from_json(j));
}

}
