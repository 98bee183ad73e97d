#include "ldgp/errors.hpp"
#include "ldgp/kernel.hpp"
#include "ldgp/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace ldgp;

TEST_SUITE("kernel") {

TEST_CASE("one-dimensional factors") {
  CHECK(kernel_1d(KernelFamily::SquaredExponential, 2.0, 0.0) == 1.0);
  CHECK(kernel_1d(KernelFamily::SquaredExponential, 2.0, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  const double s5 = std::sqrt(5.0);
  CHECK(kernel_1d(KernelFamily::Matern25, 0.7, 0.7) ==
        doctest::Approx((1.0 + s5 + 5.0 / 3.0) * std::exp(-s5)).epsilon(1e-14));
  CHECK(kernel_1d(KernelFamily::Matern25, 0.7, 0.0) == 1.0);
}

TEST_CASE("family names round trip") {
  for (auto f : {KernelFamily::SquaredExponential, KernelFamily::Matern25})
    CHECK(kernel_family_from_string(to_string(f)) == f);
  CHECK(kernel_family_from_string("se") == KernelFamily::SquaredExponential);
  CHECK_THROWS_AS(kernel_family_from_string("linear"), ValidationError);
}

TEST_CASE("validation rejects bad hyperparameters") {
  KernelConfig c;
  c.lengthscales = Eigen::VectorXd::Constant(2, 0.5);
  CHECK_NOTHROW(c.validate());
  c.lengthscales[1] = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.lengthscales[1] = 0.5;
  c.scale = -1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.scale = 1.0;
  c.nugget = -1e-9;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("nugget only on coincident inputs") {
  KernelConfig c;
  c.lengthscales = Eigen::VectorXd::Constant(2, 0.5);
  c.nugget = 0.1;
  Eigen::MatrixXd X(3, 2);
  X << 0.0, 0.0, 0.5, 0.2, 0.5, 0.2;
  const Eigen::MatrixXd R = corr_matrix(c, X);
  CHECK(R(0, 0) == doctest::Approx(1.1));
  CHECK(R(1, 2) == doctest::Approx(1.1));
  const double expected = std::exp(-0.25 / 0.25) * std::exp(-0.04 / 0.25);
  CHECK(R(0, 1) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(cross_corr(c, X, X.row(1))[1] == doctest::Approx(1.1));
}

TEST_CASE("log-lengthscale gradients match finite differences") {
  Rng rng(4);
  for (auto fam : {KernelFamily::SquaredExponential, KernelFamily::Matern25}) {
    KernelConfig c;
    c.family = fam;
    c.lengthscales = Eigen::Vector3d(0.3, 0.8, 1.7);
    c.nugget = 1e-3;
    Eigen::MatrixXd X(6, 3);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = uniform01(rng);
    const auto grads = corr_matrix_log_gradients(c, X, true);
    REQUIRE(grads.size() == 4);
    const double h = 1e-6;
    for (int d = 0; d < 3; ++d) {
      KernelConfig up = c, dn = c;
      up.lengthscales[d] *= std::exp(h);
      dn.lengthscales[d] *= std::exp(-h);
      const Eigen::MatrixXd fd = (corr_matrix(up, X) - corr_matrix(dn, X)) / (2 * h);
      CHECK((fd - grads[static_cast<std::size_t>(d)]).cwiseAbs().maxCoeff() < 1e-7);
    }
    KernelConfig up = c, dn = c;
    up.nugget *= std::exp(h);
    dn.nugget *= std::exp(-h);
    const Eigen::MatrixXd fd = (corr_matrix(up, X) - corr_matrix(dn, X)) / (2 * h);
    CHECK((fd - grads[3]).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("xi and zeta reduce to kernel values at zero variance") {
  CHECK(xi(0.4, 0.3, 0.0, 0.1) == doctest::Approx(oracle::se_kernel(0.4, 0.3, 0.1)).epsilon(1e-15));
  CHECK(zeta(0.4, 0.3, 0.0, 0.1, 0.6) ==
        doctest::Approx(oracle::se_kernel(0.4, 0.3, 0.1) * oracle::se_kernel(0.4, 0.3, 0.6)).epsilon(1e-15));
}

TEST_CASE("xi and zeta agree with Gauss-Hermite quadrature") {
  const auto q = oracle::gauss_hermite(400);
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const double gamma = uniform(rng, 0.2, 2.0);
    const double mu = uniform(rng, -0.5, 1.5);
    const double var = std::pow(uniform(rng, 0.0, 0.5), 2);
    const double a = uniform(rng, 0.0, 1.0), b = uniform(rng, 0.0, 1.0);
    const double xi_ref = oracle::normal_expectation(q, mu, var, [&](double w) { return oracle::se_kernel(gamma, w, a); });
    const double zeta_ref = oracle::normal_expectation(
        q, mu, var, [&](double w) { return oracle::se_kernel(gamma, w, a) * oracle::se_kernel(gamma, w, b); });
    CHECK(std::abs(xi(gamma, mu, var, a) / xi_ref - 1.0) < 1e-8);
    CHECK(std::abs(zeta(gamma, mu, var, a, b) / zeta_ref - 1.0) < 1e-8);
  }
}

}
