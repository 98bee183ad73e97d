#include "ldgp/network.hpp"

#include "ldgp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ldgp {

int NetworkSpec::global_dims() const {
  if (global_inputs > 0) return global_inputs;
  int n = 0;
  for (const auto& node : nodes)
    for (const auto& in : node.inputs)
      if (in.kind == InputSource::Kind::Global) n = std::max(n, in.global_dim + 1);
  return n;
}

const NetworkNode* NetworkSpec::find(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

std::vector<Violation> validate_network(const NetworkSpec& spec) {
  std::vector<Violation> out;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    const auto& n = spec.nodes[i];
    if (n.id.empty()) out.push_back({"missing-id", "", "node " + std::to_string(i) + " has no id"});
    if (!index.emplace(n.id, i).second) out.push_back({"duplicate-id", n.id, "node id declared twice"});
    if (n.layer < 1) out.push_back({"invalid-layer", n.id, "layer must be >= 1"});
    if (n.output_width < 1) out.push_back({"width-mismatch", n.id, "output width must be >= 1"});
    if (n.inputs.empty()) out.push_back({"empty-inputs", n.id, "node has no inputs"});
  }

  const int gdims = spec.global_inputs;
  for (const auto& n : spec.nodes) {
    bool stochastic = false;
    for (const auto& in : n.inputs) {
      if (in.kind == InputSource::Kind::Global) {
        if (in.global_dim < 0 || (gdims > 0 && in.global_dim >= gdims))
          out.push_back({"dangling-source", n.id, "global dimension " + std::to_string(in.global_dim) +
                                                      " does not exist"});
        continue;
      }
      stochastic = true;
      if (in.node == n.id) {
        out.push_back({"cycle", n.id, "node consumes its own output"});
        continue;
      }
      const NetworkNode* up = spec.find(in.node);
      if (up == nullptr) {
        out.push_back({"dangling-source", n.id, "unknown upstream node '" + in.node + "'"});
        continue;
      }
      if (in.out < 0 || in.out >= up->output_width)
        out.push_back({"width-mismatch", n.id, "upstream '" + in.node + "' has no output " + std::to_string(in.out)});
      if (up->layer >= n.layer)
        out.push_back({"layer-order", n.id, "upstream '" + in.node + "' is not in an earlier layer"});
    }
    if (stochastic && n.family && *n.family != KernelFamily::SquaredExponential)
      out.push_back({"illegal-family", n.id, "nodes fed by upstream emulators must use the squared-exponential kernel"});
  }

  // Cycle detection over node-to-node edges (self loops already reported).
  enum Mark { White, Grey, Black };
  std::vector<Mark> mark(spec.nodes.size(), White);
  std::set<std::string> in_cycle;
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    mark[i] = Grey;
    for (const auto& in : spec.nodes[i].inputs) {
      if (in.kind != InputSource::Kind::Node || in.node == spec.nodes[i].id) continue;
      auto it = index.find(in.node);
      if (it == index.end()) continue;
      if (mark[it->second] == Grey) {
        in_cycle.insert(spec.nodes[i].id);
      } else if (mark[it->second] == White) {
        visit(it->second);
      }
    }
    mark[i] = Black;
  };
  for (std::size_t i = 0; i < spec.nodes.size(); ++i)
    if (mark[i] == White) visit(i);
  for (const auto& id : in_cycle) out.push_back({"cycle", id, "node lies on a dependency cycle"});
  return out;
}

std::string format_violations(const std::vector<Violation>& v) {
  std::ostringstream os;
  for (const auto& x : v) os << "  [" << x.kind << "] " << (x.node.empty() ? "-" : x.node) << ": " << x.message << "\n";
  return os.str();
}

std::vector<std::size_t> evaluation_order(const NetworkSpec& spec) {
  const auto v = validate_network(spec);
  if (!v.empty()) throw ValidationError("invalid network:\n" + format_violations(v));
  std::vector<std::size_t> order(spec.nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& na = spec.nodes[a];
    const auto& nb = spec.nodes[b];
    return na.layer != nb.layer ? na.layer < nb.layer : na.id < nb.id;
  });
  return order;
}

NodeRef node_ref(const NetworkSpec& spec, const std::string& id) {
  const NetworkNode* n = spec.find(id);
  if (n == nullptr) throw ValidationError("unknown node '" + id + "'");
  int rank = 1;
  for (const auto& other : spec.nodes)
    if (other.layer == n->layer && other.id < id) ++rank;
  return {n->layer, rank};
}

std::vector<std::string> terminal_nodes(const NetworkSpec& spec) {
  int last = 0;
  for (const auto& n : spec.nodes) last = std::max(last, n.layer);
  std::vector<std::string> ids;
  for (auto i : evaluation_order(spec))
    if (spec.nodes[i].layer == last) ids.push_back(spec.nodes[i].id);
  return ids;
}

json to_json(const NetworkSpec& spec) {
  json nodes = json::array();
  for (const auto& n : spec.nodes) {
    json inputs = json::array();
    for (const auto& in : n.inputs) {
      if (in.kind == InputSource::Kind::Global)
        inputs.push_back({{"type", "global"}, {"dim", in.global_dim}});
      else
        inputs.push_back({{"type", "node"}, {"id", in.node}, {"out", in.out}});
    }
    json node = {{"id", n.id},
                 {"layer", n.layer},
                 {"inputs", inputs},
                 {"emulator", n.emulator == EmulatorKind::GP ? "gp" : "dgp"},
                 {"output_width", n.output_width},
                 {"model_path", n.model_path}};
    if (n.family) node["kernel"] = to_string(*n.family);
    nodes.push_back(std::move(node));
  }
  json j = {{"nodes", nodes}};
  if (spec.global_inputs > 0) j["global_inputs"] = spec.global_inputs;
  return j;
}

NetworkSpec network_from_json(const json& j) {
  try {
    NetworkSpec spec;
    spec.global_inputs = j.value("global_inputs", 0);
    for (const auto& jn : j.at("nodes")) {
      NetworkNode n;
      n.id = jn.at("id").get<std::string>();
      n.layer = jn.at("layer").get<int>();
      const std::string kind = jn.value("emulator", std::string("gp"));
      if (kind == "gp")
        n.emulator = EmulatorKind::GP;
      else if (kind == "dgp")
        n.emulator = EmulatorKind::DGP;
      else
        throw ValidationError("node '" + n.id + "': unknown emulator '" + kind + "'");
      n.output_width = jn.value("output_width", 1);
      n.model_path = jn.value("model_path", std::string());
      if (jn.contains("kernel")) n.family = kernel_family_from_string(jn.at("kernel").get<std::string>());
      for (const auto& ji : jn.at("inputs")) {
        const std::string type = ji.at("type").get<std::string>();
        if (type == "global")
          n.inputs.push_back(InputSource::global(ji.at("dim").get<int>()));
        else if (type == "node")
          n.inputs.push_back(InputSource::from(ji.at("id").get<std::string>(), ji.value("out", 0)));
        else
          throw ValidationError("node '" + n.id + "': unknown input type '" + type + "'");
      }
      spec.nodes.push_back(std::move(n));
    }
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed network JSON: ") + e.what());
  }
}

Prediction link_moments_unclamped(const GPModel& model, const Eigen::Ref<const Eigen::VectorXd>& mean,
                                  const Eigen::Ref<const Eigen::VectorXd>& var, bool* outside) {
  const Eigen::Index dims = model.dims();
  if (mean.size() != dims || var.size() != dims) throw ValidationError("link: input count does not match model");
  const InputScaler& sc = model.input_scaler();
  const Eigen::RowVectorXd mu = sc.apply(mean.transpose());
  Eigen::VectorXd v(dims);
  bool stochastic = false;
  for (Eigen::Index d = 0; d < dims; ++d) {
    if (!(var[d] >= 0.0) || !std::isfinite(var[d])) throw ValidationError("link: invalid input variance");
    v[d] = var[d] / (sc.span[d] * sc.span[d]);
    stochastic = stochastic || v[d] > 0.0;
  }
  if (outside != nullptr)
    for (Eigen::Index d = 0; d < dims; ++d)
      if (mu[d] < -1e-9 || mu[d] > 1.0 + 1e-9) *outside = true;

  const KernelConfig& c = model.config();
  Prediction p;
  if (!stochastic) {
    p = model.predict_scaled(mu);
  } else {
    if (c.family != KernelFamily::SquaredExponential)
      throw ValidationError("link: only squared-exponential nodes accept uncertain inputs");
    const Eigen::MatrixXd& X = model.X();
    const Eigen::VectorXd& alpha = model.alpha();
    const Eigen::MatrixXd& Rinv = model.inverse();
    const Eigen::Index m = X.rows();

    // J_ij = I_i I_j exp(delta_ij), delta in closed form; variance uses C = J - I I^T.
    Eigen::VectorXd g2(dims), log_pair(dims);
    double log_c1 = 0.0;
    for (Eigen::Index d = 0; d < dims; ++d) {
      g2[d] = c.lengthscales[d] * c.lengthscales[d];
      log_c1 -= 0.5 * std::log1p(2.0 * v[d] / g2[d]);
      const double q = 2.0 * v[d] / (g2[d] + 2.0 * v[d]);
      log_pair[d] = -0.5 * std::log1p(-q * q);
    }

    Eigen::VectorXd log_I(m), I(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      double e = log_c1;
      for (Eigen::Index d = 0; d < dims; ++d) {
        const double t = X(i, d) - mu[d];
        e -= t * t / (g2[d] + 2.0 * v[d]);
      }
      log_I[i] = e;
      I[i] = std::exp(e);
    }
    const double mean_s = I.dot(alpha);

    double quad = 0.0, trace = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = j; i < m; ++i) {
        double delta = 0.0;
        for (Eigen::Index d = 0; d < dims; ++d) {
          const double a = X(i, d) - mu[d], b = X(j, d) - mu[d];
          const double s = g2[d], vd = v[d];
          delta += log_pair[d] + (a + b) * (a + b) * vd / ((s + 2.0 * vd) * (s + 4.0 * vd)) -
                   (a - b) * (a - b) * vd / (s * (s + 2.0 * vd));
        }
        const double log_ii = log_I[i] + log_I[j];
        const double C = delta < 1.0 ? std::exp(log_ii) * std::expm1(delta)
                                     : std::exp(log_ii + delta) - std::exp(log_ii);
        const double w = i == j ? 1.0 : 2.0;
        quad += w * C * alpha[i] * alpha[j];
        trace += w * C * Rinv(i, j);
      }
    }
    const double base = model.chol().lower.triangularView<Eigen::Lower>().solve(I).squaredNorm();
    p.mean = mean_s;
    p.var = quad + c.scale * (1.0 + c.nugget + model.chol().jitter - base - trace);
  }
  const double sd = model.output_scaler().sd;
  return {p.mean * sd + model.output_scaler().mean, p.var * sd * sd};
}

Prediction link_moments(const GPModel& model, const Eigen::Ref<const Eigen::VectorXd>& mean,
                        const Eigen::Ref<const Eigen::VectorXd>& var, bool* outside) {
  Prediction p = link_moments_unclamped(model, mean, var, outside);
  p.var = clamp_variance(p.var);
  return p;
}

Propagation propagate(const FlatNetwork& net, const Eigen::Ref<const Eigen::RowVectorXd>& x, bool clamp) {
  if (x.size() != net.global_dims)
    throw ValidationError("query has " + std::to_string(x.size()) + " inputs, network expects " +
                          std::to_string(net.global_dims));
  if (!x.allFinite()) throw ValidationError("non-finite query");
  Propagation out;
  out.nodes.resize(net.nodes.size());
  std::vector<double> used_var(net.nodes.size(), 0.0);
  for (std::size_t k = 0; k < net.nodes.size(); ++k) {
    const FlatNode& node = net.nodes[k];
    const auto n = static_cast<Eigen::Index>(node.inputs.size());
    Eigen::VectorXd mean(n), var(n);
    for (Eigen::Index d = 0; d < n; ++d) {
      const FlatSource& s = node.inputs[static_cast<std::size_t>(d)];
      if (s.node < 0) {
        mean[d] = x[s.dim];
        var[d] = 0.0;
      } else {
        mean[d] = out.nodes[static_cast<std::size_t>(s.node)].mean;
        var[d] = used_var[static_cast<std::size_t>(s.node)];
      }
    }
    Prediction p = link_moments_unclamped(*node.model, mean, var, &out.outside_box);
    used_var[k] = clamp_variance(p.var);
    if (clamp) p.var = used_var[k];
    out.nodes[k] = p;
  }
  return out;
}

FlatNetwork build_flat(const NetworkSpec& spec, const std::map<std::string, NodeExpander>& expanders,
                       std::map<std::string, std::vector<int>>& outputs) {
  FlatNetwork flat;
  flat.global_dims = spec.global_dims();
  outputs.clear();
  for (auto i : evaluation_order(spec)) {
    const NetworkNode& node = spec.nodes[i];
    std::vector<FlatSource> sources;
    for (const auto& in : node.inputs) {
      if (in.kind == InputSource::Kind::Global)
        sources.push_back({-1, in.global_dim});
      else
        sources.push_back({outputs.at(in.node).at(static_cast<std::size_t>(in.out)), 0});
    }
    auto it = expanders.find(node.id);
    if (it == expanders.end()) throw ValidationError("no emulator for node '" + node.id + "'");
    outputs[node.id] = it->second(flat, sources);
  }
  return flat;
}

void check_spec_against_models(NetworkSpec& spec, const std::map<std::string, int>& input_dims,
                               const std::map<std::string, int>& output_widths,
                               const std::map<std::string, KernelFamily>& families) {
  std::vector<Violation> extra;
  for (auto& n : spec.nodes) {
    auto d = input_dims.find(n.id);
    if (d == input_dims.end()) {
      extra.push_back({"missing-model", n.id, "no emulator attached"});
      continue;
    }
    if (static_cast<int>(n.inputs.size()) != d->second)
      extra.push_back({"width-mismatch", n.id,
                       "spec lists " + std::to_string(n.inputs.size()) + " inputs, model expects " +
                           std::to_string(d->second)});
    n.output_width = output_widths.at(n.id);
    n.family = families.at(n.id);
  }
  auto v = validate_network(spec);
  v.insert(v.end(), extra.begin(), extra.end());
  if (!v.empty()) throw ValidationError("invalid network:\n" + format_violations(v));
}

LinkedGP::LinkedGP(NetworkSpec spec, std::map<std::string, std::vector<std::shared_ptr<const GPModel>>> models)
    : spec_(std::move(spec)), models_(std::move(models)) {
  std::map<std::string, int> dims, widths;
  std::map<std::string, KernelFamily> families;
  for (const auto& n : spec_.nodes) {
    auto it = models_.find(n.id);
    if (it == models_.end() || it->second.empty()) continue;
    dims[n.id] = static_cast<int>(it->second.front()->dims());
    widths[n.id] = static_cast<int>(it->second.size());
    families[n.id] = KernelFamily::SquaredExponential;
    for (const auto& m : it->second) {
      if (m->dims() != it->second.front()->dims()) throw ValidationError("node '" + n.id + "': outputs disagree on input dimension");
      if (m->config().family != KernelFamily::SquaredExponential) families[n.id] = m->config().family;
    }
  }
  check_spec_against_models(spec_, dims, widths, families);

  std::map<std::string, NodeExpander> expanders;
  for (const auto& [id, bundle] : models_) {
    expanders[id] = [&bundle = bundle](FlatNetwork& net, const std::vector<FlatSource>& sources) {
      std::vector<int> outs;
      for (const auto& m : bundle) {
        net.nodes.push_back({m.get(), sources});
        outs.push_back(static_cast<int>(net.nodes.size()) - 1);
      }
      return outs;
    };
  }
  flat_ = build_flat(spec_, expanders, outputs_);
}

LinkedResult LinkedGP::propagate(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const Propagation p = ldgp::propagate(flat_, x);
  LinkedResult r;
  r.outside_box = p.outside_box;
  for (const auto& [id, idx] : outputs_)
    for (int k : idx) r.nodes[id].push_back(p.nodes[static_cast<std::size_t>(k)]);
  return r;
}

}  // namespace ldgp
