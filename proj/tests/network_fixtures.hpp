#pragma once

#include "ldgp/gp.hpp"
#include "ldgp/network.hpp"
#include "ldgp/rng.hpp"
#include "oracles.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace fixture {

using namespace ldgp;

struct RandomNetwork {
  NetworkSpec spec;
  std::map<std::string, std::vector<std::shared_ptr<const GPModel>>> models;
};

// GP of a random smooth function over a box; inputs [lo, hi] per dimension.
inline std::shared_ptr<const GPModel> random_node(int dims, double lo, double hi, Rng& rng) {
  const int m = 8 + static_cast<int>(rng() % 8);
  Eigen::MatrixXd X(m, dims);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = uniform(rng, lo, hi);
  Eigen::VectorXd w(dims), phase(dims);
  for (int d = 0; d < dims; ++d) {
    w[d] = uniform(rng, 1.0, 4.0) / (hi - lo);
    phase[d] = uniform(rng, 0.0, 3.0);
  }
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int d = 0; d < dims; ++d) s += std::sin(w[d] * X(i, d) + phase[d]);
    y[i] = s;
  }
  TrainOptions o;
  o.seed = rng();
  o.starts = 3;
  return std::make_shared<const GPModel>(train_gp(X, y, KernelFamily::SquaredExponential, o));
}

inline NetworkNode node(std::string id, int layer, std::vector<InputSource> in) {
  NetworkNode n;
  n.id = std::move(id);
  n.layer = layer;
  n.inputs = std::move(in);
  return n;
}

// Even k: two nodes. Odd k: three nodes, alternating between a chain and two
// independent parents feeding one child.
inline RandomNetwork random_network(int k, Rng& rng) {
  RandomNetwork r;
  r.spec.global_inputs = 2;
  r.spec.nodes.push_back(node("a", 1, {InputSource::global(0), InputSource::global(1)}));
  r.models["a"] = {random_node(2, 0.0, 1.0, rng)};
  const double span = 2.5;
  if (k % 2 == 0) {
    r.spec.nodes.push_back(node("b", 2, {InputSource::from("a"), InputSource::global(1)}));
    r.models["b"] = {random_node(2, -span, span, rng)};
  } else if (k % 4 == 1) {
    r.spec.nodes.push_back(node("b", 2, {InputSource::from("a")}));
    r.spec.nodes.push_back(node("c", 3, {InputSource::from("b")}));
    r.models["b"] = {random_node(1, -span, span, rng)};
    r.models["c"] = {random_node(1, -span, span, rng)};
  } else {
    r.spec.nodes.push_back(node("b", 1, {InputSource::global(1)}));
    r.spec.nodes.push_back(node("c", 2, {InputSource::from("a"), InputSource::from("b")}));
    r.models["b"] = {random_node(1, 0.0, 1.0, rng)};
    r.models["c"] = {random_node(2, -span, span, rng)};
  }
  return r;
}

struct NodeCheck {
  std::string id;
  double mean_z = 0.0;  // |linked - MC| in MC standard errors
  double var_z = 0.0;
};

// Samples every node output given normal inputs carrying the linked moments
// of its upstream nodes, and compares with the linked moments of the node.
inline std::vector<NodeCheck> monte_carlo_check(const RandomNetwork& net, const Eigen::RowVectorXd& x,
                                                int samples, Rng& rng) {
  const LinkedGP lgp(net.spec, net.models);
  const LinkedResult linked = lgp.propagate(x);
  std::vector<NodeCheck> out;
  for (const auto& n : net.spec.nodes) {
    const GPModel& model = *net.models.at(n.id)[0];
    std::vector<double> draws(static_cast<std::size_t>(samples));
    Eigen::RowVectorXd w(static_cast<Eigen::Index>(n.inputs.size()));
    for (int s = 0; s < samples; ++s) {
      for (std::size_t d = 0; d < n.inputs.size(); ++d) {
        const auto& in = n.inputs[d];
        if (in.kind == InputSource::Kind::Global) {
          w[static_cast<Eigen::Index>(d)] = x[in.global_dim];
        } else {
          const Prediction& up = linked.nodes.at(in.node)[static_cast<std::size_t>(in.out)];
          w[static_cast<Eigen::Index>(d)] = up.mean + std::sqrt(up.var) * standard_normal(rng);
        }
      }
      const Prediction p = model.predict(w);
      draws[static_cast<std::size_t>(s)] = p.mean + std::sqrt(p.var) * standard_normal(rng);
    }
    const oracle::SampleMoments m = oracle::sample_moments(draws);
    const Prediction& l = linked.nodes.at(n.id)[0];
    NodeCheck c;
    c.id = n.id;
    c.mean_z = std::abs(l.mean - m.mean) / m.mean_se;
    c.var_z = std::abs(l.var - m.var) / m.var_se;
    out.push_back(c);
  }
  return out;
}

}  // namespace fixture
