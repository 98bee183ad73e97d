#include "ldgp/deep.hpp"

#include "ldgp/errors.hpp"
#include "ldgp/ess.hpp"
#include "ldgp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ldgp {

namespace {

constexpr std::uint64_t kEssTag = 0x657373;
constexpr std::uint64_t kHarvestTag = 0x68617276;
constexpr std::uint64_t kMStepTag = 0x6d73746570;

std::string node_name(int l, int p) {
  return "node (" + std::to_string(l + 1) + "," + std::to_string(p + 1) + ")";
}

// Identity initialization of a hidden layer, or leading principal components
// of its input when the widths differ.
Eigen::MatrixXd initial_layer(const Eigen::MatrixXd& input, int width) {
  if (input.cols() == width) return input;
  Eigen::MatrixXd centered = input.rowwise() - input.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::MatrixXd proj = centered * svd.matrixV();
  Eigen::MatrixXd out(input.rows(), width);
  for (int p = 0; p < width; ++p) out.col(p) = proj.col(p % proj.cols());
  return out;
}

}  // namespace

DGPArchitecture DGPArchitecture::standard(int input_dims, int depth, int outputs) {
  DGPArchitecture a;
  a.widths.assign(static_cast<std::size_t>(std::max(depth, 1)), input_dims);
  a.widths.back() = outputs;
  return a;
}

void DGPArchitecture::validate() const {
  if (depth() < 2) throw ValidationError("DGP needs at least 2 layers");
  for (int w : widths)
    if (w < 1) throw ValidationError("DGP layer widths must be >= 1");
}

double gaussian_log_density(const KernelConfig& config, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  CholeskyFactor chol;
  if (!try_robust_cholesky(corr_matrix(config, X), chol)) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd z = chol.lower.triangularView<Eigen::Lower>().solve(y);
  const double m = static_cast<double>(y.size());
  return -0.5 * (z.squaredNorm() / config.scale + m * std::log(config.scale) + chol.log_det() +
                 m * std::log(2.0 * std::numbers::pi));
}

LatentSampler::LatentSampler(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Ys,
                             const std::vector<std::vector<KernelConfig>>& configs)
    : Xs_(Xs), Ys_(Ys), configs_(configs) {}

const Eigen::MatrixXd& LatentSampler::layer_input(int l, const std::vector<Eigen::MatrixXd>& state) const {
  return l == 0 ? Xs_ : state[static_cast<std::size_t>(l - 1)];
}

double LatentSampler::layer_log_likelihood(int l, const Eigen::MatrixXd& candidate,
                                           const std::vector<Eigen::MatrixXd>& state) const {
  const auto next = static_cast<std::size_t>(l + 1);
  const bool terminal = next + 1 == configs_.size();
  const Eigen::MatrixXd& target = terminal ? Ys_ : state[next];
  double ll = 0.0;
  for (std::size_t p = 0; p < configs_[next].size(); ++p) {
    ll += gaussian_log_density(configs_[next][p], candidate, target.col(static_cast<Eigen::Index>(p)));
    if (!std::isfinite(ll)) return -std::numeric_limits<double>::infinity();
  }
  return ll;
}

Eigen::MatrixXd LatentSampler::prior_draw(int l, const std::vector<Eigen::MatrixXd>& state, Rng& rng) const {
  const Eigen::MatrixXd& input = layer_input(l, state);
  const auto& layer = configs_[static_cast<std::size_t>(l)];
  Eigen::MatrixXd draw(input.rows(), static_cast<Eigen::Index>(layer.size()));
  for (std::size_t p = 0; p < layer.size(); ++p) {
    const CholeskyFactor chol = robust_cholesky(corr_matrix(layer[p], input));
    Eigen::VectorXd z(input.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = standard_normal(rng);
    draw.col(static_cast<Eigen::Index>(p)) = std::sqrt(layer[p].scale) * (chol.lower * z);
  }
  return draw;
}

void LatentSampler::sweep(std::vector<Eigen::MatrixXd>& state, Rng& rng) const {
  for (int l = 0; l + 1 < static_cast<int>(configs_.size()); ++l) {
    const Eigen::MatrixXd nu = prior_draw(l, state, rng);
    auto& current = state[static_cast<std::size_t>(l)];
    const double ll = layer_log_likelihood(l, current, state);
    auto loglik = [&](const Eigen::MatrixXd& cand) { return layer_log_likelihood(l, cand, state); };
    EssResult r = ess_update(current, ll, nu, loglik, rng);
    current = std::move(r.state);
  }
}

DGPModel sem_train(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const DGPArchitecture& arch,
                   const DGPTrainOptions& options, const DGPModel* warm_start) {
  arch.validate();
  if (X.rows() < 2) throw ValidationError("sem_train: need at least 2 design points");
  if (X.rows() != Y.rows()) throw ValidationError("sem_train: design and output sizes differ");
  if (Y.cols() != arch.outputs()) throw ValidationError("sem_train: output columns do not match architecture");
  if (!X.allFinite() || !Y.allFinite()) throw ValidationError("sem_train: non-finite data");
  if (options.imputations < 1) throw ValidationError("sem_train: need at least one imputation");

  const int depth = arch.depth();
  InputScaler in = InputScaler::fit(X);
  const Eigen::MatrixXd Xs = in.apply_rows(X);
  std::vector<OutputScaler> outs;
  Eigen::MatrixXd Ys(Y.rows(), Y.cols());
  for (Eigen::Index q = 0; q < Y.cols(); ++q) {
    outs.push_back(OutputScaler::fit(Y.col(q)));
    Ys.col(q) = (Y.col(q).array() - outs.back().mean) / outs.back().sd;
  }

  const bool warm = warm_start != nullptr && warm_start->arch().widths == arch.widths &&
                    warm_start->input_dims() == X.cols() && warm_start->imputation_count() > 0;

  std::vector<std::vector<KernelConfig>> configs(static_cast<std::size_t>(depth));
  for (int l = 0; l < depth; ++l) {
    const int in_dims = l == 0 ? static_cast<int>(X.cols()) : arch.widths[static_cast<std::size_t>(l - 1)];
    for (int p = 0; p < arch.widths[static_cast<std::size_t>(l)]; ++p) {
      KernelConfig c;
      c.family = l == 0 ? arch.first_layer_family : KernelFamily::SquaredExponential;
      c.lengthscales = Eigen::VectorXd::Ones(in_dims);
      c.scale = 1.0;
      c.nugget = l + 1 == depth ? options.output_nugget : options.hidden_nugget;
      if (warm) c = warm_start->configs()[static_cast<std::size_t>(l)][static_cast<std::size_t>(p)];
      configs[static_cast<std::size_t>(l)].push_back(c);
    }
  }

  std::vector<Eigen::MatrixXd> state;
  for (int l = 0; l + 1 < depth; ++l) {
    const Eigen::MatrixXd& input = l == 0 ? Xs : state.back();
    state.push_back(initial_layer(input, arch.widths[static_cast<std::size_t>(l)]));
  }
  if (warm) {
    const auto& prev = warm_start->imputations().back().hidden;
    const Eigen::Index rows = std::min<Eigen::Index>(prev.front().rows(), X.rows());
    for (std::size_t l = 0; l < state.size(); ++l) {
      state[l].topRows(rows) = prev[l].topRows(rows);
      if (rows == X.rows()) continue;
      // New rows start at the conditional mean of each hidden node given the old rows.
      const Eigen::MatrixXd& input = l == 0 ? Xs : state[l - 1];
      const Eigen::MatrixXd old_input = input.topRows(rows);
      for (std::size_t p = 0; p < configs[l].size(); ++p) {
        const CholeskyFactor chol = robust_cholesky(corr_matrix(configs[l][p], old_input));
        const Eigen::VectorXd a = chol.solve(prev[l].col(static_cast<Eigen::Index>(p)).head(rows));
        for (Eigen::Index i = rows; i < X.rows(); ++i)
          state[l](i, static_cast<Eigen::Index>(p)) = cross_corr(configs[l][p], old_input, input.row(i)).dot(a);
      }
    }
  }

  LatentSampler sampler(Xs, Ys, configs);
  std::vector<std::vector<KernelConfig>> sums = configs;
  int averaged = 0;

  auto m_step = [&](std::uint64_t key, int starts) {
    for (int l = 0; l < depth; ++l) {
      const Eigen::MatrixXd& input = sampler.layer_input(l, state);
      const bool terminal = l + 1 == depth;
      for (std::size_t p = 0; p < configs[static_cast<std::size_t>(l)].size(); ++p) {
        KernelConfig& c = configs[static_cast<std::size_t>(l)][p];
        const Eigen::VectorXd target =
            terminal ? Eigen::VectorXd(Ys.col(static_cast<Eigen::Index>(p)))
                     : Eigen::VectorXd(state[static_cast<std::size_t>(l)].col(static_cast<Eigen::Index>(p)));
        TrainOptions o;
        o.starts = starts;
        o.seed = derive_seed(options.seed, {kMStepTag, key, static_cast<std::uint64_t>(l), p});
        o.initial_lengthscales = c.lengthscales;
        o.nugget = c.nugget;
        o.estimate_nugget = terminal && options.estimate_output_nugget;
        o.initial_nugget = c.nugget;
        if (!terminal) o.fixed_scale = 1.0;
        o.scale_inputs = false;
        o.standardize_output = false;
        o.max_iterations = options.optimizer_iterations;
        o.lengthscale_prior = options.lengthscale_prior;
        try {
          c = fit_hyperparameters(input, target, c.family, o).config;
        } catch (const NumericalError& e) {
          throw NumericalError(node_name(l, static_cast<int>(p)) + ": " + e.what());
        }
      }
    }
  };

  // Fit the initial latent state before sampling from it.
  if (!warm) m_step(0, TrainOptions{}.starts);
  for (int t = 0; t < options.iterations; ++t) {
    Rng rng = make_stream(options.seed, {kEssTag, static_cast<std::uint64_t>(t)});
    for (int s = 0; s < std::max(1, options.sweeps); ++s) sampler.sweep(state, rng);
    m_step(static_cast<std::uint64_t>(t) + 1, 1);

    if (options.average_hyperparameters && t >= options.burn_in) {
      for (std::size_t l = 0; l < configs.size(); ++l)
        for (std::size_t p = 0; p < configs[l].size(); ++p) {
          KernelConfig& s = sums[l][p];
          const KernelConfig& c = configs[l][p];
          if (averaged == 0) {
            s = c;
          } else {
            s.lengthscales += c.lengthscales;
            s.scale += c.scale;
            s.nugget += c.nugget;
          }
        }
      ++averaged;
    }
  }
  if (averaged > 0) {
    for (std::size_t l = 0; l < configs.size(); ++l)
      for (std::size_t p = 0; p < configs[l].size(); ++p) {
        KernelConfig c = sums[l][p];
        c.lengthscales /= averaged;
        c.scale /= averaged;
        c.nugget /= averaged;
        configs[l][p] = c;
      }
  }

  std::vector<Imputation> imputations;
  for (int n = 0; n < options.imputations; ++n) {
    for (int s = 0; s < std::max(1, options.spacing); ++s) {
      Rng rng = make_stream(options.seed,
                            {kHarvestTag, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(s)});
      sampler.sweep(state, rng);
    }
    imputations.push_back({state});
  }

  return DGPModel::assemble(arch, Xs, Ys, std::move(in), std::move(outs), std::move(configs), std::move(imputations),
                            options.seed);
}

DGPModel DGPModel::assemble(DGPArchitecture arch, Eigen::MatrixXd Xs, Eigen::MatrixXd Ys, InputScaler input_scaler,
                            std::vector<OutputScaler> output_scalers, std::vector<std::vector<KernelConfig>> configs,
                            std::vector<Imputation> imputations, std::uint64_t seed) {
  arch.validate();
  const int depth = arch.depth();
  if (static_cast<int>(configs.size()) != depth) throw ValidationError("DGP: config layers do not match architecture");
  for (int l = 0; l < depth; ++l)
    if (static_cast<int>(configs[static_cast<std::size_t>(l)].size()) != arch.widths[static_cast<std::size_t>(l)])
      throw ValidationError("DGP: config widths do not match architecture");
  if (imputations.empty()) throw ValidationError("DGP: no imputations");
  if (static_cast<int>(output_scalers.size()) != arch.outputs() || Ys.cols() != arch.outputs())
    throw ValidationError("DGP: output width mismatch");
  for (const auto& imp : imputations) {
    if (static_cast<int>(imp.hidden.size()) != depth - 1) throw ValidationError("DGP: imputation depth mismatch");
    for (int l = 0; l + 1 < depth; ++l)
      if (imp.hidden[static_cast<std::size_t>(l)].rows() != Xs.rows() ||
          imp.hidden[static_cast<std::size_t>(l)].cols() != arch.widths[static_cast<std::size_t>(l)])
        throw ValidationError("DGP: imputation dimensions do not match design");
  }

  DGPModel m;
  m.arch_ = std::move(arch);
  m.Xs_ = std::move(Xs);
  m.Ys_ = std::move(Ys);
  m.input_scaler_ = std::move(input_scaler);
  m.output_scalers_ = std::move(output_scalers);
  m.configs_ = std::move(configs);
  m.imputations_ = std::move(imputations);
  m.seed_ = seed;

  auto compiled = std::make_shared<Compiled>();
  const auto count = m.imputations_.size();
  compiled->nodes.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& hidden = m.imputations_[i].hidden;
    auto& layers = compiled->nodes[i];
    layers.resize(static_cast<std::size_t>(depth));
    for (int l = 0; l < depth; ++l) {
      const Eigen::MatrixXd& input = l == 0 ? m.Xs_ : hidden[static_cast<std::size_t>(l - 1)];
      const bool terminal = l + 1 == depth;
      const Eigen::MatrixXd& target = terminal ? m.Ys_ : hidden[static_cast<std::size_t>(l)];
      for (int p = 0; p < m.arch_.widths[static_cast<std::size_t>(l)]; ++p) {
        InputScaler sc = l == 0 ? m.input_scaler_ : InputScaler::identity(input.cols());
        OutputScaler out = terminal ? m.output_scalers_[static_cast<std::size_t>(p)] : OutputScaler{};
        layers[static_cast<std::size_t>(l)].push_back(
            GPModel::assemble(input, target.col(p), m.configs_[static_cast<std::size_t>(l)][static_cast<std::size_t>(p)],
                              std::move(sc), out));
      }
    }
  }
  m.compiled_ = compiled;
  for (std::size_t i = 0; i < count; ++i) {
    FlatNetwork net;
    net.global_dims = m.input_dims();
    std::vector<FlatSource> sources;
    for (int d = 0; d < net.global_dims; ++d) sources.push_back({-1, d});
    compiled->terminals.push_back(m.expand(net, sources, static_cast<int>(i)));
    compiled->flats.push_back(std::move(net));
  }
  return m;
}

const GPModel& DGPModel::node(int imputation, int l, int p) const {
  return compiled_->nodes.at(static_cast<std::size_t>(imputation))
      .at(static_cast<std::size_t>(l))
      .at(static_cast<std::size_t>(p));
}

std::vector<int> DGPModel::expand(FlatNetwork& net, const std::vector<FlatSource>& sources, int imputation) const {
  if (imputation < 0 || imputation >= imputation_count()) throw ValidationError("DGP: imputation index out of range");
  if (static_cast<int>(sources.size()) != input_dims()) throw ValidationError("DGP: input count mismatch");
  std::vector<FlatSource> prev = sources;
  std::vector<int> idx;
  for (int l = 0; l < arch_.depth(); ++l) {
    std::vector<FlatSource> cur;
    idx.clear();
    for (int p = 0; p < arch_.widths[static_cast<std::size_t>(l)]; ++p) {
      net.nodes.push_back({&node(imputation, l, p), prev});
      idx.push_back(static_cast<int>(net.nodes.size()) - 1);
      cur.push_back({idx.back(), 0});
    }
    prev = std::move(cur);
  }
  return idx;
}

std::vector<std::vector<Prediction>> DGPModel::predict_components(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                                                  int n) const {
  if (n < 1 || n > imputation_count())
    throw ValidationError("requested " + std::to_string(n) + " imputations, model holds " +
                          std::to_string(imputation_count()));
  std::vector<std::vector<Prediction>> out(static_cast<std::size_t>(output_width()));
  for (int i = 0; i < n; ++i) {
    const Propagation p = propagate(compiled_->flats[static_cast<std::size_t>(i)], x);
    const auto& term = compiled_->terminals[static_cast<std::size_t>(i)];
    for (std::size_t q = 0; q < term.size(); ++q) out[q].push_back(p.nodes[static_cast<std::size_t>(term[q])]);
  }
  return out;
}

Prediction mixture(std::span<const Prediction> components) {
  if (components.empty()) throw ValidationError("mixture of zero components");
  const double n = static_cast<double>(components.size());
  double mean = 0.0;
  for (const auto& c : components) mean += c.mean;
  mean /= n;
  double within = 0.0, between = 0.0;
  for (const auto& c : components) {
    within += c.var;
    between += (c.mean - mean) * (c.mean - mean);
  }
  return {mean, clamp_variance(within / n + between / n)};
}

std::vector<Prediction> predict_dgp(const DGPModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x, int n) {
  const auto comps = model.predict_components(x, n);
  std::vector<Prediction> out;
  for (const auto& c : comps) out.push_back(mixture(c));
  return out;
}

json to_json(const DGPModel& model) {
  json nodes = json::array();
  for (const auto& layer : model.configs()) {
    json jl = json::array();
    for (const auto& c : layer) jl.push_back(to_json(c));
    nodes.push_back(std::move(jl));
  }
  json imps = json::array();
  for (const auto& imp : model.imputations()) {
    json layers = json::array();
    for (const auto& w : imp.hidden) layers.push_back(matrix_to_json(w));
    imps.push_back(std::move(layers));
  }
  json outs = json::array();
  for (const auto& s : model.output_scalers()) outs.push_back({{"mean", s.mean}, {"sd", s.sd}});
  return {{"kind", "dgp"},
          {"arch", {{"widths", model.arch().widths}, {"first_layer_family", to_string(model.arch().first_layer_family)}}},
          {"nodes", nodes},
          {"X", matrix_to_json(model.X())},
          {"Y", matrix_to_json(model.Y())},
          {"scalers", {{"input", to_json(model.input_scaler())}, {"outputs", outs}}},
          {"imputations", imps},
          {"seed_lineage", model.seed()}};
}

DGPModel dgp_from_json(const json& j) {
  try {
    DGPArchitecture arch;
    arch.widths = j.at("arch").at("widths").get<std::vector<int>>();
    arch.first_layer_family = kernel_family_from_string(j.at("arch").at("first_layer_family").get<std::string>());
    std::vector<std::vector<KernelConfig>> configs;
    for (const auto& jl : j.at("nodes")) {
      std::vector<KernelConfig> layer;
      for (const auto& jc : jl) layer.push_back(kernel_config_from_json(jc));
      configs.push_back(std::move(layer));
    }
    std::vector<Imputation> imps;
    for (const auto& ji : j.at("imputations")) {
      Imputation imp;
      for (const auto& jw : ji) imp.hidden.push_back(matrix_from_json(jw));
      imps.push_back(std::move(imp));
    }
    std::vector<OutputScaler> outs;
    for (const auto& js : j.at("scalers").at("outputs"))
      outs.push_back({js.at("mean").get<double>(), js.at("sd").get<double>()});
    return DGPModel::assemble(std::move(arch), matrix_from_json(j.at("X")), matrix_from_json(j.at("Y")),
                              input_scaler_from_json(j.at("scalers").at("input")), std::move(outs), std::move(configs),
                              std::move(imps), j.at("seed_lineage").get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed DGP model JSON: ") + e.what());
  }
}

NodeEmulator NodeEmulator::gp(std::vector<std::shared_ptr<const GPModel>> outputs) {
  if (outputs.empty()) throw ValidationError("GP emulator with no outputs");
  NodeEmulator e;
  e.kind_ = EmulatorKind::GP;
  e.gp_ = std::move(outputs);
  return e;
}

NodeEmulator NodeEmulator::gp(GPModel model) { return gp({std::make_shared<const GPModel>(std::move(model))}); }

NodeEmulator NodeEmulator::dgp(std::shared_ptr<const DGPModel> model) {
  if (!model) throw ValidationError("null DGP emulator");
  NodeEmulator e;
  e.kind_ = EmulatorKind::DGP;
  e.dgp_ = std::move(model);
  return e;
}

int NodeEmulator::input_dims() const {
  return kind_ == EmulatorKind::GP ? static_cast<int>(gp_.front()->dims()) : dgp_->input_dims();
}

int NodeEmulator::output_width() const {
  return kind_ == EmulatorKind::GP ? static_cast<int>(gp_.size()) : dgp_->output_width();
}

KernelFamily NodeEmulator::input_family() const {
  if (kind_ == EmulatorKind::DGP) {
    for (const auto& c : dgp_->configs().front())
      if (c.family != KernelFamily::SquaredExponential) return c.family;
    return KernelFamily::SquaredExponential;
  }
  for (const auto& m : gp_)
    if (m->config().family != KernelFamily::SquaredExponential) return m->config().family;
  return KernelFamily::SquaredExponential;
}

json to_json(const NodeEmulator& e) {
  if (e.kind() == EmulatorKind::DGP) return to_json(*e.dgp_model());
  if (e.gp_outputs().size() == 1) return to_json(*e.gp_outputs().front());
  json outs = json::array();
  for (const auto& m : e.gp_outputs()) outs.push_back(to_json(*m));
  return {{"kind", "gp"}, {"outputs", outs}};
}

NodeEmulator node_emulator_from_json(const json& j) {
  const std::string kind = j.value("kind", std::string("gp"));
  if (kind == "dgp") return NodeEmulator::dgp(std::make_shared<const DGPModel>(dgp_from_json(j)));
  if (kind != "gp") throw ValidationError("unknown model kind '" + kind + "'");
  if (j.contains("outputs")) {
    std::vector<std::shared_ptr<const GPModel>> outs;
    for (const auto& jo : j.at("outputs")) outs.push_back(std::make_shared<const GPModel>(gp_from_json(jo)));
    return NodeEmulator::gp(std::move(outs));
  }
  return NodeEmulator::gp(gp_from_json(j));
}

LDGPEmulator::LDGPEmulator(NetworkSpec spec, std::map<std::string, NodeEmulator> emulators, int imputations)
    : spec_(std::move(spec)), emulators_(std::move(emulators)), imputations_(imputations) {
  if (imputations_ < 1) throw ValidationError("need at least one imputation");
  if (std::none_of(emulators_.begin(), emulators_.end(),
                   [](const auto& kv) { return kv.second.kind() == EmulatorKind::DGP; }))
    imputations_ = 1;
  std::map<std::string, int> dims, widths;
  std::map<std::string, KernelFamily> families;
  for (auto& n : spec_.nodes) {
    auto it = emulators_.find(n.id);
    if (it == emulators_.end()) continue;
    const NodeEmulator& e = it->second;
    if (e.kind() != n.emulator)
      throw ValidationError("node '" + n.id + "': spec and attached emulator disagree on gp/dgp");
    if (e.kind() == EmulatorKind::DGP && e.dgp_model()->imputation_count() < imputations_)
      throw ValidationError("node '" + n.id + "': DGP holds " + std::to_string(e.dgp_model()->imputation_count()) +
                            " imputations, " + std::to_string(imputations_) + " requested");
    dims[n.id] = e.input_dims();
    widths[n.id] = e.output_width();
    families[n.id] = e.input_family();
  }
  check_spec_against_models(spec_, dims, widths, families);

  for (int i = 0; i < imputations_; ++i) {
    std::map<std::string, NodeExpander> expanders;
    for (const auto& [id, e] : emulators_) {
      const NodeEmulator* em = &e;
      expanders[id] = [em, i](FlatNetwork& net, const std::vector<FlatSource>& sources) {
        if (em->kind() == EmulatorKind::DGP) return em->dgp_model()->expand(net, sources, i);
        std::vector<int> outs;
        for (const auto& m : em->gp_outputs()) {
          net.nodes.push_back({m.get(), sources});
          outs.push_back(static_cast<int>(net.nodes.size()) - 1);
        }
        return outs;
      };
    }
    flats_.push_back(build_flat(spec_, expanders, outputs_));
  }
}

LinkedResult LDGPEmulator::predict_imputation(const Eigen::Ref<const Eigen::RowVectorXd>& x, int i) const {
  if (i < 0 || i >= imputations_) throw ValidationError("imputation index out of range");
  const Propagation p = propagate(flats_[static_cast<std::size_t>(i)], x);
  LinkedResult r;
  r.outside_box = p.outside_box;
  for (const auto& [id, idx] : outputs_)
    for (int k : idx) r.nodes[id].push_back(p.nodes[static_cast<std::size_t>(k)]);
  return r;
}

LinkedResult LDGPEmulator::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x, int n) const {
  if (n < 1 || n > imputations_)
    throw ValidationError("requested " + std::to_string(n) + " imputations, emulator holds " +
                          std::to_string(imputations_));
  std::map<std::string, std::vector<std::vector<Prediction>>> comps;
  LinkedResult r;
  for (int i = 0; i < n; ++i) {
    const Propagation p = propagate(flats_[static_cast<std::size_t>(i)], x);
    r.outside_box = r.outside_box || p.outside_box;
    for (const auto& [id, idx] : outputs_) {
      auto& slot = comps[id];
      slot.resize(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) slot[k].push_back(p.nodes[static_cast<std::size_t>(idx[k])]);
    }
  }
  for (const auto& [id, outs] : comps)
    for (const auto& c : outs) r.nodes[id].push_back(mixture(c));
  return r;
}

LDGPEmulator link_ldgp(std::map<std::string, NodeEmulator> emulators, NetworkSpec spec, int n) {
  return LDGPEmulator(std::move(spec), std::move(emulators), n);
}

}  // namespace ldgp
