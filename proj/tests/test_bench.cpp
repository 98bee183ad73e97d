#include "ldgp/bench.hpp"
#include "ldgp/errors.hpp"
#include "ldgp/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace ldgp;

TEST_SUITE("bench") {

TEST_CASE("synthetic functions at known points") {
  CHECK(f1(0.0) == 0.5);
  CHECK(f2(0.5) == doctest::Approx(1.0 - std::sin(2.0) / 3.0).epsilon(1e-15));
  CHECK(f2(0.5) == doctest::Approx(0.6969008577247727).epsilon(1e-14));
  CHECK(f3(0.3) == doctest::Approx(0.11541261128611957).epsilon(1e-13));
  CHECK(synthetic_chain(0.25) == doctest::Approx(f3(f2(f1(0.25)))).epsilon(1e-15));
}

TEST_CASE("ranges over a dense grid") {
  struct Range {
    double (*f)(double);
    double lo, hi;
  };
  const Range fixtures[] = {{f1, 3.035799389650151e-11, 0.9999999999966269},
                            {f2, 0.0010909056020452224, 0.6971432583981076},
                            {f3, -0.015521347988087797, 1.1333879038350592}};
  for (const auto& r : fixtures) {
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i <= 100000; ++i) {
      const double v = r.f(i / 100000.0);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(lo == doctest::Approx(r.lo).epsilon(1e-9).scale(1e-9));
    CHECK(hi == doctest::Approx(r.hi).epsilon(1e-9));
  }
}

TEST_CASE("closed-form Greeks against the PDE oracle") {
  const double r = kHedgeRate, v = kHedgeVolatility;
  const double cases[][3] = {{100.0, 100.0, 1.0}, {60.0, 140.0, 2.0}, {150.0, 55.0, 1.5}, {90.0, 120.0, 1.2}};
  for (const auto& c : cases) {
    const double S = c[0], K = c[1], tau = c[2];
    CHECK(std::abs(bs_delta(S, K, tau, r, v) / oracle::pde_delta_extrapolated(S, K, tau, r, v) - 1.0) < 1e-3);
    CHECK(std::abs(bs_vega(S, K, tau, r, v) / oracle::pde_vega_extrapolated(S, K, tau, r, v) - 1.0) < 1e-3);
    CHECK(std::abs(bs_call(S, K, tau, r, v) / oracle::pde_price(S, K, tau, r, v, 800, 800) - 1.0) < 1e-3);
  }
}

TEST_CASE("Greek ranges") {
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const double S = uniform(rng, 50, 150), K = uniform(rng, 50, 150), tau = uniform(rng, 1, 2);
    const double d = bs_delta(S, K, tau, kHedgeRate, kHedgeVolatility);
    CHECK(d > 0.0);
    CHECK(d < 1.0);
    CHECK(bs_vega(S, K, tau, kHedgeRate, kHedgeVolatility) > 0.0);
  }
  CHECK_THROWS_AS(bs_delta(-1.0, 100.0, 1.0, 0.05, 0.32), ValidationError);
  CHECK_THROWS_AS(bs_vega(100.0, 100.0, 0.0, 0.05, 0.32), ValidationError);
}

TEST_CASE("hedge positions neutralize the portfolio") {
  Rng rng(4);
  for (int k = 0; k < 1000; ++k) {
    const double S = uniform(rng, 50, 150), K1 = uniform(rng, 50, 150), K2 = uniform(rng, 50, 150);
    const double t1 = uniform(rng, 1, 2), t2 = uniform(rng, 1, 2);
    const double V1 = bs_vega(S, K1, t1, kHedgeRate, kHedgeVolatility);
    const double V2 = bs_vega(S, K2, t2, kHedgeRate, kHedgeVolatility);
    const double D1 = bs_delta(S, K1, t1, kHedgeRate, kHedgeVolatility);
    const double D2 = bs_delta(S, K2, t2, kHedgeRate, kHedgeVolatility);
    const double P2 = vega_strategy(V1, V2);
    const double Ps = delta_strategy(D1, D2, P2);
    CHECK(std::abs(V1 + P2 * V2) <= 1e-12 * std::max(1.0, std::abs(V1)));
    CHECK(std::abs(D1 + P2 * D2 + Ps) <= 1e-12 * std::max(1.0, std::abs(P2)));
  }
  CHECK_THROWS_AS(vega_strategy(1.0, 1e-9), NumericalError);
}

TEST_CASE("error metrics") {
  Eigen::VectorXd t(4), p(4);
  t << 0.0, 1.0, 2.0, 4.0;
  p << 0.0, 1.0, 2.0, 2.0;
  CHECK(rmse(p, t) == doctest::Approx(1.0));
  CHECK(nrmse(p, t) == doctest::Approx(25.0));
  CHECK_THROWS_AS(nrmse(p, Eigen::VectorXd::Constant(4, 1.0)), ValidationError);
  CHECK_THROWS_AS(rmse(p, t.head(2)), ValidationError);
}

TEST_CASE("hedging network is valid") {
  const NetworkSpec s = hedging_network();
  CHECK(validate_network(s).empty());
  CHECK(s.global_dims() == 5);
  CHECK(terminal_nodes(s).size() == 1);
  const DesignBox b = hedging_global_box();
  CHECK(b.lower[0] == 50.0);
  CHECK(b.upper[4] == 2.0);
}

TEST_CASE("small synthetic run reports every emulator") {
  SyntheticConfig c;
  c.seed = 3;
  c.budget = 7;
  c.test_points = 50;
  c.dgp.iterations = 20;
  c.dgp.burn_in = 10;
  c.dgp.imputations = 4;
  c.dgp.spacing = 1;
  c.dgp.sweeps = 2;
  c.sequential.dgp_step_iterations = 5;
  const SyntheticReport r = run_synthetic(c);
  CHECK(r.nrmse.size() == 4);
  for (const auto& [name, v] : r.nrmse) CHECK(std::isfinite(v));
  const json j = to_json(r);
  CHECK(j.at("nrmse").size() == 4);
  CHECK(curve_rows(r).size() == 1 + 4 * 50);
}

}
