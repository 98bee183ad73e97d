#include "ldgp/bench.hpp"
#include "ldgp/design.hpp"
#include "ldgp/errors.hpp"
#include "ldgp/io.hpp"
#include "ldgp/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace ldgp;

namespace {

struct TrainArgs {
  std::string data, arch = "gp", kernel = "squared-exponential", out;
  std::uint64_t seed = 0;
  int outputs = 1;
  bool estimate_nugget = false;
  int iterations = 200, imputations = 50;
};

KernelFamily parse_kernel(const std::string& s) {
  if (s == "se" || s == "sexp") return KernelFamily::SquaredExponential;
  if (s == "matern" || s == "matern25") return KernelFamily::Matern25;
  return kernel_family_from_string(s);
}

int cmd_train(const TrainArgs& a) {
  const Table t = read_csv(a.data);
  const auto cols = t.values.cols();
  if (a.outputs < 1 || a.outputs >= cols)
    throw ValidationError("--outputs must leave at least one input column (csv has " + std::to_string(cols) +
                          " columns)");
  const Eigen::MatrixXd X = t.values.leftCols(cols - a.outputs);
  const Eigen::MatrixXd Y = t.values.rightCols(a.outputs);
  const KernelFamily family = parse_kernel(a.kernel);

  std::ostringstream summary;
  json model;
  if (a.arch == "gp") {
    std::vector<std::shared_ptr<const GPModel>> outs;
    for (int q = 0; q < a.outputs; ++q) {
      TrainOptions o;
      o.seed = derive_seed(a.seed, {static_cast<std::uint64_t>(q)});
      o.estimate_nugget = a.estimate_nugget;
      auto m = std::make_shared<const GPModel>(train_gp(X, Y.col(q), family, o));
      summary << "output " << t.header[static_cast<std::size_t>(cols - a.outputs + q)] << ": gamma = ["
              << m->config().lengthscales.transpose() << "], sigma2 = " << m->config().scale
              << ", eta = " << m->config().nugget << ", loglik = " << m->log_likelihood() << "\n";
      outs.push_back(std::move(m));
    }
    model = to_json(NodeEmulator::gp(std::move(outs)));
  } else if (a.arch.rfind("dgp:", 0) == 0) {
    int depth = 0;
    try {
      depth = std::stoi(a.arch.substr(4));
    } catch (const std::exception&) {
      throw ValidationError("--arch dgp:L needs an integer depth");
    }
    DGPArchitecture arch = DGPArchitecture::standard(static_cast<int>(X.cols()), depth, a.outputs);
    arch.first_layer_family = family;
    DGPTrainOptions o;
    o.seed = a.seed;
    o.iterations = a.iterations;
    o.burn_in = std::min(o.burn_in, a.iterations * 3 / 4);
    o.imputations = a.imputations;
    o.estimate_output_nugget = a.estimate_nugget;
    const DGPModel m = sem_train(X, Y, arch, o);
    summary << "dgp depth " << depth << ", " << m.imputation_count() << " imputations\n";
    for (int l = 0; l < arch.depth(); ++l)
      for (const auto& c : m.configs()[static_cast<std::size_t>(l)])
        summary << "layer " << l + 1 << ": gamma = [" << c.lengthscales.transpose() << "], sigma2 = " << c.scale
                << "\n";
    model = to_json(m);
  } else {
    throw ValidationError("--arch must be gp or dgp:L");
  }
  write_json(a.out, model);
  std::cout << "trained on " << X.rows() << " points, " << X.cols() << " inputs, " << a.outputs << " outputs\n"
            << summary.str();
  return 0;
}

int cmd_link(const std::string& network, const std::string& models, const std::string& out, int imputations) {
  NetworkSpec spec = network_from_json(read_json(network));
  if (const auto v = validate_network(spec); !v.empty()) {
    std::cerr << format_violations(v);
    return 2;
  }
  std::map<std::string, NodeEmulator> ems;
  int available = imputations;
  for (const auto& n : spec.nodes) {
    const fs::path p = fs::path(models) / (n.model_path.empty() ? n.id + ".json" : n.model_path);
    NodeEmulator e = node_emulator_from_json(read_json(p));
    if (e.kind() == EmulatorKind::DGP) available = std::min(available, e.dgp_model()->imputation_count());
    ems.emplace(n.id, std::move(e));
  }
  const LDGPEmulator em = link_ldgp(std::move(ems), std::move(spec), std::max(1, available));
  write_json(out, bundle_to_json(em));
  const bool deep = std::any_of(em.spec().nodes.begin(), em.spec().nodes.end(),
                                [](const NetworkNode& n) { return n.emulator == EmulatorKind::DGP; });
  std::cout << (deep ? "LDGP" : "LGP") << " emulator with " << em.spec().nodes.size() << " nodes, "
            << em.imputations() << " imputations\n";
  return 0;
}

// Terminal outputs as (node id, output index, column stem).
std::vector<std::tuple<std::string, int, std::string>> terminal_columns(const LDGPEmulator& em) {
  std::vector<std::tuple<std::string, int, std::string>> cols;
  for (const auto& id : terminal_nodes(em.spec())) {
    const int w = em.spec().find(id)->output_width;
    for (int k = 0; k < w; ++k) cols.emplace_back(id, k, w == 1 ? id : id + "_" + std::to_string(k + 1));
  }
  return cols;
}

std::vector<LinkedResult> predict_rows(const LDGPEmulator& em, const Eigen::MatrixXd& Q, int n) {
  std::vector<LinkedResult> res(static_cast<std::size_t>(Q.rows()));
  parallel_for(res.size(), [&](std::size_t i) { res[i] = em.predict(Q.row(static_cast<Eigen::Index>(i)), n); });
  return res;
}

int resolve_imputations(const LDGPEmulator& em, int requested) {
  return requested <= 0 ? em.imputations() : requested;
}

int cmd_predict(const std::string& emulator, const std::string& queries, int n, const std::string& out) {
  const LDGPEmulator em = bundle_from_json(read_json(emulator));
  const Table t = read_csv(queries);
  if (t.header.size() != static_cast<std::size_t>(em.global_dims()))
    throw ValidationError("queries have " + std::to_string(t.header.size()) + " columns, emulator expects " +
                          std::to_string(em.global_dims()));
  const auto cols = terminal_columns(em);
  std::vector<std::string> header = t.header;
  for (const auto& [id, k, stem] : cols) {
    header.push_back(stem + "_mean");
    header.push_back(stem + "_sd");
  }
  const auto res = predict_rows(em, t.values, resolve_imputations(em, n));
  Eigen::MatrixXd values(t.values.rows(), static_cast<Eigen::Index>(header.size()));
  for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
    values.row(i).head(t.values.cols()) = t.values.row(i);
    Eigen::Index c = t.values.cols();
    for (const auto& [id, k, stem] : cols) {
      const Prediction& p = res[static_cast<std::size_t>(i)].nodes.at(id)[static_cast<std::size_t>(k)];
      values(i, c++) = p.mean;
      values(i, c++) = std::sqrt(clamp_variance(p.var));
    }
  }
  write_text(out, format_csv(header, values));
  return 0;
}

int cmd_validate(const std::string& emulator, const std::string& test, int n, const std::string& out) {
  const LDGPEmulator em = bundle_from_json(read_json(emulator));
  const Table t = read_csv(test);
  const auto cols = terminal_columns(em);
  const auto expected = static_cast<Eigen::Index>(em.global_dims() + static_cast<int>(cols.size()));
  if (t.values.cols() != expected)
    throw ValidationError("test data has " + std::to_string(t.values.cols()) + " columns, expected " +
                          std::to_string(expected) + " (inputs then terminal outputs)");
  if (t.values.rows() == 0) throw ValidationError("test data has no rows");
  const auto res = predict_rows(em, t.values.leftCols(em.global_dims()), resolve_imputations(em, n));
  json report = json::object();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto& [id, k, stem] = cols[c];
    const Eigen::VectorXd truth = t.values.col(em.global_dims() + static_cast<Eigen::Index>(c));
    Eigen::VectorXd mean(truth.size());
    int covered = 0;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
      const Prediction& p = res[static_cast<std::size_t>(i)].nodes.at(id)[static_cast<std::size_t>(k)];
      mean[i] = p.mean;
      if (std::abs(truth[i] - p.mean) <= 2.0 * std::sqrt(clamp_variance(p.var))) ++covered;
    }
    json m;
    m["rmse"] = rmse(mean, truth);
    const double range = truth.maxCoeff() - truth.minCoeff();
    m["nrmse"] = range > 0.0 ? json(nrmse(mean, truth)) : json(nullptr);
    m["coverage_2sd"] = static_cast<double>(covered) / static_cast<double>(truth.size());
    report[stem] = m;
  }
  const std::string text = report.dump(2) + "\n";
  if (out.empty())
    std::cout << text;
  else
    write_text(out, text);
  return 0;
}

Eigen::RowVectorXd parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ValidationError("bad number '" + item + "' in list");
    }
  }
  return Eigen::Map<Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int cmd_design(const std::string& lower, const std::string& upper, int n, std::uint64_t seed, bool grid,
               const std::string& out) {
  const DesignBox box{parse_list(lower), parse_list(upper)};
  box.validate();
  const Eigen::MatrixXd X = grid ? uniform_grid(n, box) : lhs_maximin(n, box, seed);
  std::vector<std::string> header;
  for (Eigen::Index d = 0; d < box.dims(); ++d) header.push_back("x" + std::to_string(d + 1));
  write_text(out, format_csv(header, X));
  return 0;
}

struct BenchArgs {
  std::string which, out = "bench_out", criterion;
  std::uint64_t seed = 0;
  int seeds = 10, budget = -1, trials = 1;
};

int cmd_bench(const BenchArgs& a) {
  const fs::path dir(a.out);
  const bool chosen = !a.criterion.empty();
  if (a.which == "synthetic") {
    const Criterion criterion = chosen ? criterion_from_string(a.criterion) : SyntheticConfig{}.criterion;
    if (a.seeds < 1) throw ValidationError("--seeds must be positive");
    std::vector<SyntheticReport> reports(static_cast<std::size_t>(a.seeds));
    parallel_for(reports.size(), [&](std::size_t s) {
      SyntheticConfig c;
      c.seed = a.seed + s;
      c.criterion = criterion;
      if (a.budget > 0) c.budget = a.budget;
      reports[s] = run_synthetic(c);
    });
    json j;
    j["experiment"] = "synthetic";
    j["criterion"] = to_string(criterion);
    j["runs"] = json::array();
    std::map<std::string, std::vector<double>> by_name;
    std::vector<std::vector<std::string>> nrmse_rows{{"seed", "emulator", "nrmse"}};
    std::vector<std::vector<std::string>> rows{{"seed", "emulator", "x", "truth", "mean", "sd"}};
    for (const auto& r : reports) {
      j["runs"].push_back(to_json(r));
      for (const auto& [name, v] : r.nrmse) {
        by_name[name].push_back(v);
        nrmse_rows.push_back({std::to_string(r.seed), name, format_number(v)});
      }
      auto curves = curve_rows(r);
      for (std::size_t i = 1; i < curves.size(); ++i) {
        curves[i].insert(curves[i].begin(), std::to_string(r.seed));
        rows.push_back(std::move(curves[i]));
      }
    }
    for (auto& [name, v] : by_name) {
      std::sort(v.begin(), v.end());
      const std::size_t m = v.size();
      j["median_nrmse"][name] = m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
    }
    write_json(dir / "synthetic.json", j);
    write_text(dir / "synthetic_nrmse.csv", format_csv(nrmse_rows));
    write_text(dir / "synthetic_curves.csv", format_csv(rows));
    std::cout << "emulator,median_nrmse\n";
    for (const auto& [name, v] : j["median_nrmse"].items()) std::cout << name << "," << v.get<double>() << "\n";
    return 0;
  }
  if (a.which == "hedging") {
    HedgingConfig c;
    c.seed = a.seed;
    if (chosen) c.criterion = criterion_from_string(a.criterion);
    c.trials = a.trials;
    if (a.budget > 0) c.budget = a.budget;
    const HedgingReport r = run_hedging(c);
    write_json(dir / "hedging.json", to_json(r));
    write_text(dir / "hedging_node_rmse.csv", format_csv(rmse_rows(r)));
    std::cout << "emulator,P2_nrmse,Ps_nrmse\n";
    for (const auto& [name, v] : r.p2_nrmse) std::cout << name << "," << v << "," << r.ps_nrmse.at(name) << "\n";
    return 0;
  }
  throw ValidationError("bench target must be synthetic or hedging");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linked deep Gaussian process emulation of computer model networks"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a GP or DGP emulator from a CSV data set");
  t->add_option("data", train.data, "CSV with header; inputs then outputs")->required();
  t->add_option("--arch", train.arch, "gp or dgp:L");
  t->add_option("--kernel", train.kernel, "squared-exponential (se) or matern-2.5 (matern)");
  t->add_option("--seed", train.seed);
  t->add_option("--outputs", train.outputs, "number of trailing output columns");
  t->add_flag("--estimate-nugget", train.estimate_nugget);
  t->add_option("--iterations", train.iterations, "SEM iterations for dgp");
  t->add_option("--imputations", train.imputations, "retained imputations for dgp");
  t->add_option("--out", train.out)->required();

  std::string network, models = ".", out;
  int imputations = 50;
  auto* l = app.add_subcommand("link", "Assemble a linked emulator from a network spec and trained models");
  l->add_option("network", network)->required();
  l->add_option("--models", models, "directory holding <id>.json models");
  l->add_option("--imputations", imputations);
  l->add_option("--out", out)->required();

  std::string emulator, data, pred_out, val_out;
  int n_imp = 0;
  auto* p = app.add_subcommand("predict", "Predict terminal outputs for query inputs");
  p->add_option("emulator", emulator)->required();
  p->add_option("queries", data)->required();
  p->add_option("--n-imputations", n_imp, "0 uses all");
  p->add_option("--out", pred_out)->required();

  auto* v = app.add_subcommand("validate", "RMSE, NRMSE and 2sd coverage on test data");
  v->add_option("emulator", emulator)->required();
  v->add_option("test", data)->required();
  v->add_option("--n-imputations", n_imp, "0 uses all");
  v->add_option("--out", val_out);

  std::string lower, upper, design_out;
  int n = 10;
  std::uint64_t design_seed = 0;
  bool grid = false;
  auto* d = app.add_subcommand("design", "Maximin Latin hypercube or uniform grid");
  d->add_option("--lower", lower, "comma-separated")->required();
  d->add_option("--upper", upper, "comma-separated")->required();
  d->add_option("-n", n);
  d->add_option("--seed", design_seed);
  d->add_flag("--grid", grid, "1-D uniform grid");
  d->add_option("--out", design_out)->required();

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Run the synthetic or hedging experiment");
  b->add_option("which", bench.which, "synthetic or hedging")->required();
  b->add_option("--seed", bench.seed);
  b->add_option("--seeds", bench.seeds, "synthetic: number of consecutive seeds");
  b->add_option("--trials", bench.trials, "hedging: training repeats per node");
  b->add_option("--budget", bench.budget);
  b->add_option("--criterion", bench.criterion, "alm or mice");
  b->add_option("--out", bench.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*t) return cmd_train(train);
    if (*l) return cmd_link(network, models, out, imputations);
    if (*p) return cmd_predict(emulator, data, n_imp, pred_out);
    if (*v) return cmd_validate(emulator, data, n_imp, val_out);
    if (*d) return cmd_design(lower, upper, n, design_seed, grid, design_out);
    if (*b) return cmd_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
