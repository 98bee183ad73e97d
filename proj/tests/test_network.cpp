#include "ldgp/errors.hpp"
#include "ldgp/network.hpp"
#include "network_fixtures.hpp"

#include <doctest.h>

#include <algorithm>

using namespace ldgp;
using fixture::node;

namespace {

bool has_kind(const std::vector<Violation>& v, const std::string& kind) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.kind == kind; });
}

NetworkSpec chain() {
  NetworkSpec s;
  s.global_inputs = 1;
  s.nodes = {node("f1", 1, {InputSource::global(0)}), node("f2", 2, {InputSource::from("f1")}),
             node("f3", 3, {InputSource::from("f2")})};
  return s;
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("valid chain has no violations") {
  const NetworkSpec s = chain();
  CHECK(validate_network(s).empty());
  CHECK(terminal_nodes(s) == std::vector<std::string>{"f3"});
  CHECK(node_ref(s, "f2") == NodeRef{2, 1});
  CHECK(s.global_dims() == 1);
}

TEST_CASE("structural violations are reported") {
  NetworkSpec s = chain();
  s.nodes[1].inputs = {InputSource::from("missing")};
  CHECK(has_kind(validate_network(s), "dangling-source"));

  s = chain();
  s.nodes[0].inputs.push_back(InputSource::from("f3"));
  const auto v = validate_network(s);
  CHECK(has_kind(v, "cycle"));

  s = chain();
  s.nodes[2].id = "f2";
  CHECK(has_kind(validate_network(s), "duplicate-id"));

  s = chain();
  s.nodes[2].layer = 2;
  CHECK(has_kind(validate_network(s), "layer-order"));

  s = chain();
  s.nodes[1].inputs = {InputSource::from("f1", 3)};
  CHECK(has_kind(validate_network(s), "width-mismatch"));

  s = chain();
  s.nodes[1].family = KernelFamily::Matern25;
  CHECK(has_kind(validate_network(s), "illegal-family"));

  s = chain();
  s.nodes[0].family = KernelFamily::Matern25;
  CHECK(validate_network(s).empty());

  s = chain();
  s.nodes[1].inputs = {InputSource::from("f2")};
  CHECK(has_kind(validate_network(s), "cycle"));
  CHECK_THROWS_AS(evaluation_order(s), ValidationError);
}

TEST_CASE("spec json round trip") {
  NetworkSpec s = chain();
  s.nodes[1].emulator = EmulatorKind::DGP;
  const NetworkSpec back = network_from_json(json::parse(to_json(s).dump()));
  CHECK(to_json(back) == to_json(s));
  CHECK(back.nodes[1].emulator == EmulatorKind::DGP);
}

TEST_CASE("zero input variance reduces to prediction") {
  Rng rng(1);
  const auto m = fixture::random_node(2, 0.0, 1.0, rng);
  const Eigen::Vector2d mean(0.3, 0.7);
  const Prediction p = m->predict(mean.transpose());
  const Prediction l = link_moments(*m, mean, Eigen::Vector2d::Zero());
  CHECK(l.mean == doctest::Approx(p.mean).epsilon(1e-12));
  CHECK(l.var == doctest::Approx(p.var).epsilon(1e-9).scale(1e-12));
}

TEST_CASE("short lengthscale with wide input stays finite and matches quadrature") {
  Eigen::MatrixXd X(5, 1);
  X << 0.0, 0.25, 0.5, 0.75, 1.0;
  Eigen::VectorXd y = (3.0 * X.col(0)).array().sin();
  KernelConfig c;
  c.lengthscales = Eigen::VectorXd::Constant(1, 0.01);
  c.nugget = 1e-8;
  const GPModel m = GPModel::assemble(X, y, c, InputScaler::identity(1), OutputScaler{});
  const double mu = 0.504, var = 3.5e-5;
  const Prediction l = link_moments(m, Eigen::VectorXd::Constant(1, mu), Eigen::VectorXd::Constant(1, var));
  REQUIRE(std::isfinite(l.mean));
  REQUIRE(std::isfinite(l.var));
  const auto q = oracle::gauss_hermite(400);
  auto at = [&](double w) { return m.predict(Eigen::RowVectorXd::Constant(1, w)); };
  const double e1 = oracle::normal_expectation(q, mu, var, [&](double w) { return at(w).mean; });
  const double e2 = oracle::normal_expectation(q, mu, var, [&](double w) {
    const Prediction p = at(w);
    return p.mean * p.mean + p.var;
  });
  CHECK(l.mean == doctest::Approx(e1).epsilon(1e-8));
  CHECK(l.var == doctest::Approx(e2 - e1 * e1).epsilon(1e-6));
}

TEST_CASE("linked moments agree with Monte Carlo") {
  Rng rng(2024);
  for (int k = 0; k < 4; ++k) {
    const auto net = fixture::random_network(k, rng);
    const Eigen::RowVectorXd x = Eigen::RowVector2d(uniform01(rng), uniform01(rng));
    for (const auto& c : fixture::monte_carlo_check(net, x, 20000, rng)) {
      INFO("network " << k << " node " << c.id);
      CHECK(c.mean_z < 4.0);
      CHECK(c.var_z < 4.0);
    }
  }
}

TEST_CASE("node order in the spec does not change predictions") {
  Rng rng(7);
  const auto net = fixture::random_network(3, rng);
  auto shuffled = net;
  std::reverse(shuffled.spec.nodes.begin(), shuffled.spec.nodes.end());
  const LinkedGP a(net.spec, net.models), b(shuffled.spec, shuffled.models);
  for (int k = 0; k < 5; ++k) {
    const Eigen::RowVectorXd x = Eigen::RowVector2d(uniform01(rng), uniform01(rng));
    const auto ra = a.propagate(x), rb = b.propagate(x);
    for (const auto& [id, p] : ra.nodes) {
      CHECK(rb.nodes.at(id)[0].mean == p[0].mean);
      CHECK(rb.nodes.at(id)[0].var == p[0].var);
    }
  }
}

TEST_CASE("model dimension mismatch is rejected") {
  Rng rng(3);
  NetworkSpec s = chain();
  std::map<std::string, std::vector<std::shared_ptr<const GPModel>>> models;
  models["f1"] = {fixture::random_node(1, 0.0, 1.0, rng)};
  models["f2"] = {fixture::random_node(2, 0.0, 1.0, rng)};
  models["f3"] = {fixture::random_node(1, 0.0, 1.0, rng)};
  CHECK_THROWS_AS(LinkedGP(s, models), ValidationError);
  models.erase("f2");
  CHECK_THROWS_AS(LinkedGP(s, models), ValidationError);
}

TEST_CASE("outside-box flag") {
  Rng rng(5);
  NetworkSpec s;
  s.global_inputs = 1;
  s.nodes = {node("a", 1, {InputSource::global(0)})};
  std::map<std::string, std::vector<std::shared_ptr<const GPModel>>> models;
  models["a"] = {fixture::random_node(1, 0.0, 1.0, rng)};
  const LinkedGP lgp(s, models);
  CHECK(lgp.propagate(Eigen::RowVectorXd::Constant(1, 5.0)).outside_box);
}

}
