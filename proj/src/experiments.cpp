#include "ldgp/bench.hpp"

#include "ldgp/errors.hpp"
#include "ldgp/parallel.hpp"
#include "ldgp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace ldgp {

namespace {

constexpr std::uint64_t kSyntheticTag = 0x73796e;
constexpr std::uint64_t kHedgingTag = 0x68656467;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Simulator scalar(double (*f)(double)) {
  return [f](const Eigen::RowVectorXd& x) { return Eigen::VectorXd::Constant(1, f(x[0])); };
}

Eigen::MatrixXd evaluate(const Simulator& sim, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Y;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd y = sim(X.row(i));
    if (i == 0) Y.resize(X.rows(), y.size());
    Y.row(i) = y.transpose();
  }
  return Y;
}

NetworkSpec chain_network(EmulatorKind kind) {
  NetworkSpec spec;
  spec.global_inputs = 1;
  spec.nodes = {{"f1", 1, {InputSource::global(0)}, kind, 1, {}, {}},
                {"f2", 2, {InputSource::from("f1")}, kind, 1, {}, {}},
                {"f3", 3, {InputSource::from("f2")}, kind, 1, {}, {}}};
  return spec;
}

bool wanted(const std::vector<std::string>& list, const std::string& name) {
  return std::find(list.begin(), list.end(), name) != list.end();
}

}  // namespace

SyntheticReport run_synthetic(const SyntheticConfig& config) {
  const DesignBox box = DesignBox::unit(1);
  const Eigen::MatrixXd grid = uniform_grid(config.test_points, box);
  const Eigen::MatrixXd X0 = uniform_grid(config.initial, box);

  SyntheticReport report;
  report.seed = config.seed;
  report.x = grid.col(0);
  report.truth.resize(grid.rows());
  for (Eigen::Index i = 0; i < grid.rows(); ++i) report.truth[i] = synthetic_chain(grid(i, 0));

  auto seq_for = [&](std::uint64_t k) {
    SequentialOptions s = config.sequential;
    s.budget = config.budget;
    s.criterion = config.criterion;
    s.seed = derive_seed(config.seed, {kSyntheticTag, k});
    return s;
  };
  auto train_for = [&](std::uint64_t k) {
    TrainOptions o;
    o.seed = derive_seed(config.seed, {kSyntheticTag, k, 1});
    return o;
  };
  auto dgp_for = [&](std::uint64_t k) {
    DGPTrainOptions o = config.dgp;
    o.seed = derive_seed(config.seed, {kSyntheticTag, k, 2});
    return o;
  };
  const DGPArchitecture arch = DGPArchitecture::standard(1, 2, 1);
  const Simulator chain = scalar(&synthetic_chain);
  const std::vector<Simulator> parts{scalar(&f1), scalar(&f2), scalar(&f3)};

  auto record = [&](const std::string& name, auto&& predict) {
    Curve c{Eigen::VectorXd(grid.rows()), Eigen::VectorXd(grid.rows())};
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
      const Prediction p = predict(grid.row(i));
      c.mean[i] = p.mean;
      c.sd[i] = std::sqrt(clamp_variance(p.var));
    }
    report.nrmse[name] = nrmse(c.mean, report.truth);
    report.curves[name] = std::move(c);
  };

  if (wanted(config.emulators, "CGP")) {
    const GPDesign d = enrich_gp(X0, evaluate(chain, X0).col(0), chain, box, KernelFamily::SquaredExponential,
                                 seq_for(1), train_for(1));
    record("CGP", [&](const Eigen::RowVectorXd& x) { return d.model.predict(x); });
  }
  if (wanted(config.emulators, "CDGP")) {
    const DGPDesign d = enrich_dgp(X0, evaluate(chain, X0), chain, box, arch, seq_for(2), dgp_for(2));
    record("CDGP", [&](const Eigen::RowVectorXd& x) {
      return predict_dgp(d.model, x, d.model.imputation_count())[0];
    });
  }
  for (const auto kind : {EmulatorKind::GP, EmulatorKind::DGP}) {
    const std::string name = kind == EmulatorKind::GP ? "LGP" : "LDGP";
    if (!wanted(config.emulators, name)) continue;
    std::map<std::string, NodeEmulator> nodes;
    int imputations = 1;
    for (std::uint64_t k = 0; k < 3; ++k) {
      const std::string id = "f" + std::to_string(k + 1);
      const std::uint64_t key = (kind == EmulatorKind::GP ? 10 : 20) + k;
      const Eigen::MatrixXd Y0 = evaluate(parts[k], X0);
      if (kind == EmulatorKind::GP) {
        GPDesign d = enrich_gp(X0, Y0.col(0), parts[k], box, KernelFamily::SquaredExponential, seq_for(key),
                               train_for(key));
        nodes.emplace(id, NodeEmulator::gp(std::move(d.model)));
      } else {
        DGPDesign d = enrich_dgp(X0, Y0, parts[k], box, arch, seq_for(key), dgp_for(key));
        imputations = d.model.imputation_count();
        nodes.emplace(id, NodeEmulator::dgp(std::make_shared<const DGPModel>(std::move(d.model))));
      }
    }
    const LDGPEmulator em = link_ldgp(std::move(nodes), chain_network(kind), imputations);
    record(name, [&](const Eigen::RowVectorXd& x) { return em.predict(x).nodes.at("f3")[0]; });
  }
  return report;
}

json to_json(const SyntheticReport& report) {
  json j;
  j["experiment"] = "synthetic";
  j["seed"] = report.seed;
  j["test_points"] = report.x.size();
  j["nrmse"] = json::object();
  for (const auto& [name, v] : report.nrmse) j["nrmse"][name] = v;
  return j;
}

std::vector<std::vector<std::string>> curve_rows(const SyntheticReport& report) {
  std::vector<std::vector<std::string>> rows{{"emulator", "x", "truth", "mean", "sd"}};
  for (const auto& [name, c] : report.curves)
    for (Eigen::Index i = 0; i < report.x.size(); ++i)
      rows.push_back({name, fmt(report.x[i]), fmt(report.truth[i]), fmt(c.mean[i]), fmt(c.sd[i])});
  return rows;
}

// ---------------------------------------------------------------------------
// Hedging
// ---------------------------------------------------------------------------

DesignBox hedging_global_box() {
  return DesignBox::of({{50, 150}, {50, 150}, {50, 150}, {1, 2}, {1, 2}});
}

NetworkSpec hedging_network() {
  using S = InputSource;
  NetworkSpec spec;
  spec.global_inputs = 5;
  spec.nodes = {
      {"V1", 1, {S::global(0), S::global(1), S::global(3)}, EmulatorKind::GP, 1, {}, {}},
      {"V2", 1, {S::global(0), S::global(2), S::global(4)}, EmulatorKind::GP, 1, {}, {}},
      {"D1", 1, {S::global(0), S::global(1), S::global(3)}, EmulatorKind::GP, 1, {}, {}},
      {"D2", 1, {S::global(0), S::global(2), S::global(4)}, EmulatorKind::GP, 1, {}, {}},
      {"HV", 2, {S::from("V1"), S::from("V2")}, EmulatorKind::GP, 1, {}, {}},
      {"HD", 3, {S::from("D1"), S::from("D2"), S::from("HV")}, EmulatorKind::GP, 1, {}, {}},
  };
  return spec;
}

namespace {

double hedge_p2(const Eigen::RowVectorXd& g) {
  const double r = kHedgeRate, v = kHedgeVolatility;
  return vega_strategy(bs_vega(g[0], g[1], g[3], r, v), bs_vega(g[0], g[2], g[4], r, v));
}

double hedge_ps(const Eigen::RowVectorXd& g) {
  const double r = kHedgeRate, v = kHedgeVolatility;
  return delta_strategy(bs_delta(g[0], g[1], g[3], r, v), bs_delta(g[0], g[2], g[4], r, v), hedge_p2(g));
}

// One node of the hedging network: its training box, simulator and initial size.
struct HedgeNode {
  std::string name;
  DesignBox box;
  Simulator sim;
  int initial;
};

std::vector<HedgeNode> hedge_nodes(const HedgingConfig& config) {
  const double r = kHedgeRate, v = kHedgeVolatility;
  const DesignBox option = DesignBox::of({{50, 150}, {50, 150}, {1, 2}});
  auto one = [](double y) { return Eigen::VectorXd::Constant(1, y); };
  // H_V returns the magnitude |P2|; H_Delta takes it and applies the short sign.
  return {
      {"V", option, [=](const Eigen::RowVectorXd& x) { return one(bs_vega(x[0], x[1], x[2], r, v)); },
       config.node_initial[0]},
      {"D", option, [=](const Eigen::RowVectorXd& x) { return one(bs_delta(x[0], x[1], x[2], r, v)); },
       config.node_initial[1]},
      {"HV", DesignBox::of({{0, 78}, {0, 78}}),
       [=](const Eigen::RowVectorXd& x) { return one(-vega_strategy(x[0], x[1])); }, config.node_initial[2]},
      {"HD", DesignBox::of({{0, 1}, {0, 1}, {0, 100}}),
       [=](const Eigen::RowVectorXd& x) { return one(delta_strategy(x[0], x[1], -x[2])); }, config.node_initial[3]},
  };
}

struct Candidate {
  NodeEmulator emulator;
  double rmse = 0.0;
};

double validation_rmse(const NodeEmulator& e, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::VectorXd pred(X.rows());
  parallel_for(static_cast<std::size_t>(X.rows()), [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    pred[r] = e.kind() == EmulatorKind::GP
                  ? e.gp_outputs()[0]->predict(X.row(r)).mean
                  : predict_dgp(*e.dgp_model(), X.row(r), e.dgp_model()->imputation_count())[0].mean;
  });
  return rmse(pred, y);
}

}  // namespace

HedgingReport run_hedging(const HedgingConfig& config) {
  if (config.trials < 1) throw ValidationError("hedging: need at least one trial");
  if (config.node_initial.size() != 4) throw ValidationError("hedging: need four initial design sizes");
  HedgingReport report;
  const std::uint64_t base = derive_seed(config.seed, {kHedgingTag});
  for (int t = 0; t < config.trials; ++t) report.seeds.push_back(config.seed + static_cast<std::uint64_t>(t));

  const std::vector<HedgeNode> nodes = hedge_nodes(config);
  const DesignBox global = hedging_global_box();
  const std::vector<std::pair<std::string, double (*)(const Eigen::RowVectorXd&)>> targets{{"P2", &hedge_p2},
                                                                                        {"Ps", &hedge_ps}};

  auto validation_set = [&](const DesignBox& box, const Simulator& sim, std::uint64_t key) {
    Rng rng = make_stream(base, {1, key});
    Eigen::MatrixXd X = random_lhs(config.validation_points, box, rng);
    return std::pair{X, Eigen::VectorXd(evaluate(sim, X).col(0))};
  };

  // best[node][kind]
  std::map<std::string, std::map<std::string, Candidate>> best;
  auto consider = [&](const std::string& node, const std::string& kind, NodeEmulator e, double rmse_value) {
    report.per_node_rmse[node][kind].push_back(rmse_value);
    auto& slot = best[node];
    auto it = slot.find(kind);
    if (it == slot.end() || rmse_value < it->second.rmse) slot.insert_or_assign(kind, Candidate{std::move(e), rmse_value});
  };

  for (std::size_t k = 0; k < nodes.size() + targets.size(); ++k) {
    const bool is_node = k < nodes.size();
    const std::string name = is_node ? nodes[k].name : "C" + targets[k - nodes.size()].first;
    const DesignBox& box = is_node ? nodes[k].box : global;
    const Simulator sim = is_node ? nodes[k].sim
                                  : Simulator([f = targets[k - nodes.size()].second](const Eigen::RowVectorXd& x) {
                                      return Eigen::VectorXd::Constant(1, f(x));
                                    });
    const int initial = is_node ? nodes[k].initial : config.global_initial;
    const auto [Xv, yv] = validation_set(box, sim, k);
    const DGPArchitecture arch = DGPArchitecture::standard(static_cast<int>(box.dims()), 2, 1);

    for (int t = 0; t < config.trials; ++t) {
      const std::uint64_t ts = derive_seed(base, {2, k, static_cast<std::uint64_t>(t)});
      const Eigen::MatrixXd X0 = lhs_maximin(initial, box, ts);
      const Eigen::MatrixXd Y0 = evaluate(sim, X0);
      SequentialOptions seq = config.sequential;
      seq.budget = config.budget;
      seq.criterion = config.criterion;
      seq.seed = derive_seed(ts, {3});
      TrainOptions to;
      to.seed = derive_seed(ts, {4});
      DGPTrainOptions dto = config.dgp;
      dto.seed = derive_seed(ts, {5});

      GPDesign g = enrich_gp(X0, Y0.col(0), sim, box, KernelFamily::SquaredExponential, seq, to);
      NodeEmulator ge = NodeEmulator::gp(std::move(g.model));
      const double g_rmse = validation_rmse(ge, Xv, yv);
      if (name == "HD") {
        Eigen::VectorXd pred(Xv.rows());
        for (Eigen::Index i = 0; i < Xv.rows(); ++i) pred[i] = ge.gp_outputs()[0]->predict(Xv.row(i)).mean;
        const double n = nrmse(pred, yv);
        report.h_delta_gp_nrmse = t == 0 ? n : std::min(report.h_delta_gp_nrmse, n);
      }
      consider(name, "GP", std::move(ge), g_rmse);

      DGPDesign d = enrich_dgp(X0, Y0, sim, box, arch, seq, dto);
      NodeEmulator de = NodeEmulator::dgp(std::make_shared<const DGPModel>(std::move(d.model)));
      const double d_rmse = validation_rmse(de, Xv, yv);
      consider(name, "DGP", std::move(de), d_rmse);
    }
  }

  // Linked emulators: LGP uses the best GP of every node, LDGP the best of either kind.
  auto linked = [&](bool allow_dgp) {
    NetworkSpec spec = hedging_network();
    std::map<std::string, NodeEmulator> ems;
    int imputations = config.dgp.imputations;
    for (auto& n : spec.nodes) {
      // V1 and V2 share the Vega emulator, D1 and D2 the Delta emulator.
      const std::string node = n.id[0] == 'H' ? n.id : n.id.substr(0, 1);
      const auto& slot = best.at(node);
      const Candidate& gp = slot.at("GP");
      const Candidate& dgp = slot.at("DGP");
      const bool use_dgp = allow_dgp && dgp.rmse < gp.rmse;
      const NodeEmulator& e = use_dgp ? dgp.emulator : gp.emulator;
      n.emulator = e.kind();
      if (allow_dgp) report.selected[node] = use_dgp ? "DGP" : "GP";
      if (use_dgp) imputations = std::min(imputations, e.dgp_model()->imputation_count());
      ems.emplace(n.id, e);
    }
    return link_ldgp(std::move(ems), std::move(spec), std::max(1, imputations));
  };
  const LDGPEmulator lgp = linked(false);
  const LDGPEmulator ldgp = linked(true);

  Rng test_rng = make_stream(base, {6});
  const Eigen::MatrixXd Xt = random_lhs(config.test_points, global, test_rng);
  Eigen::VectorXd p2(Xt.rows()), ps(Xt.rows());
  for (Eigen::Index i = 0; i < Xt.rows(); ++i) {
    p2[i] = hedge_p2(Xt.row(i));
    ps[i] = hedge_ps(Xt.row(i));
  }

  const std::vector<std::string> names{"CGP", "CDGP", "LGP", "LDGP"};
  std::vector<Eigen::VectorXd> pred_p2(names.size(), Eigen::VectorXd(Xt.rows()));
  std::vector<Eigen::VectorXd> pred_ps(names.size(), Eigen::VectorXd(Xt.rows()));
  auto single = [](const NodeEmulator& e, const Eigen::RowVectorXd& x) {
    return e.kind() == EmulatorKind::GP
               ? e.gp_outputs()[0]->predict(x).mean
               : predict_dgp(*e.dgp_model(), x, e.dgp_model()->imputation_count())[0].mean;
  };
  parallel_for(static_cast<std::size_t>(Xt.rows()), [&](std::size_t s) {
    const auto i = static_cast<Eigen::Index>(s);
    const Eigen::RowVectorXd x = Xt.row(i);
    pred_p2[0][i] = single(best.at("CP2").at("GP").emulator, x);
    pred_ps[0][i] = single(best.at("CPs").at("GP").emulator, x);
    pred_p2[1][i] = single(best.at("CP2").at("DGP").emulator, x);
    pred_ps[1][i] = single(best.at("CPs").at("DGP").emulator, x);
    for (std::size_t k = 0; k < 2; ++k) {
      const LinkedResult r = (k == 0 ? lgp : ldgp).predict(x);
      pred_p2[2 + k][i] = -r.nodes.at("HV")[0].mean;
      pred_ps[2 + k][i] = r.nodes.at("HD")[0].mean;
    }
  });
  for (std::size_t k = 0; k < names.size(); ++k) {
    report.p2_nrmse[names[k]] = nrmse(pred_p2[k], p2);
    report.ps_nrmse[names[k]] = nrmse(pred_ps[k], ps);
  }
  return report;
}

json to_json(const HedgingReport& report) {
  json j;
  j["experiment"] = "hedging";
  j["seeds"] = report.seeds;
  j["per_node_rmse"] = json::object();
  for (const auto& [node, kinds] : report.per_node_rmse)
    for (const auto& [kind, v] : kinds) j["per_node_rmse"][node][kind] = v;
  j["selected"] = report.selected;
  j["h_delta_gp_nrmse"] = report.h_delta_gp_nrmse;
  j["P2"] = report.p2_nrmse;
  j["Ps"] = report.ps_nrmse;
  return j;
}

std::vector<std::vector<std::string>> rmse_rows(const HedgingReport& report) {
  std::vector<std::vector<std::string>> rows{{"node", "emulator", "trial", "rmse"}};
  for (const auto& [node, kinds] : report.per_node_rmse)
    for (const auto& [kind, v] : kinds)
      for (std::size_t t = 0; t < v.size(); ++t) rows.push_back({node, kind, std::to_string(t), fmt(v[t])});
  return rows;
}

}  // namespace ldgp
