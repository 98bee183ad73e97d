#pragma once

#include "ldgp/gp.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ldgp {

// ---------------------------------------------------------------------------
// Network description
// ---------------------------------------------------------------------------

enum class EmulatorKind { GP, DGP };

struct NodeRef {
  int layer = 1;
  int index = 1;
  bool operator==(const NodeRef&) const = default;
};

struct InputSource {
  enum class Kind { Global, Node };
  Kind kind = Kind::Global;
  int global_dim = 0;
  std::string node;  // upstream node id
  int out = 0;       // upstream output index

  static InputSource global(int dim) { return {Kind::Global, dim, {}, 0}; }
  static InputSource from(std::string id, int out = 0) { return {Kind::Node, 0, std::move(id), out}; }
};

struct NetworkNode {
  std::string id;
  int layer = 1;
  std::vector<InputSource> inputs;
  EmulatorKind emulator = EmulatorKind::GP;
  int output_width = 1;
  // Family of the kernels that see this node's inputs; filled from the model when known.
  std::optional<KernelFamily> family;
  std::string model_path;
};

struct NetworkSpec {
  int global_inputs = 0;  // 0: inferred from the largest referenced dimension
  std::vector<NetworkNode> nodes;

  int global_dims() const;
  const NetworkNode* find(const std::string& id) const;
};

struct Violation {
  std::string kind;  // cycle, dangling-source, width-mismatch, illegal-family, duplicate-id, layer-order, ...
  std::string node;
  std::string message;
};

/// All structural problems of a spec; empty means valid.
std::vector<Violation> validate_network(const NetworkSpec& spec);

/// Node indices sorted by (layer, id). Throws ValidationError on an invalid spec.
std::vector<std::size_t> evaluation_order(const NetworkSpec& spec);

/// (layer, index) with index = rank of the id within its layer.
NodeRef node_ref(const NetworkSpec& spec, const std::string& id);

/// Ids of last-layer nodes in evaluation order.
std::vector<std::string> terminal_nodes(const NetworkSpec& spec);

json to_json(const NetworkSpec& spec);
NetworkSpec network_from_json(const json& j);

// ---------------------------------------------------------------------------
// Linked propagation
// ---------------------------------------------------------------------------

/// Moments of a GP output when its inputs are independent normals with the
/// given raw-unit means and variances. Zero variances reduce to predict().
/// Variance is returned unclamped; outside is set when a scaled input mean
/// leaves [0,1].
Prediction link_moments_unclamped(const GPModel& model, const Eigen::Ref<const Eigen::VectorXd>& mean,
                                  const Eigen::Ref<const Eigen::VectorXd>& var, bool* outside = nullptr);

Prediction link_moments(const GPModel& model, const Eigen::Ref<const Eigen::VectorXd>& mean,
                        const Eigen::Ref<const Eigen::VectorXd>& var, bool* outside = nullptr);

/// A network of scalar GP nodes in evaluation order.
struct FlatSource {
  int node = -1;  // < 0: global input
  int dim = 0;
};

struct FlatNode {
  const GPModel* model = nullptr;
  std::vector<FlatSource> inputs;
};

struct FlatNetwork {
  int global_dims = 0;
  std::vector<FlatNode> nodes;
};

struct Propagation {
  std::vector<Prediction> nodes;
  bool outside_box = false;
};

Propagation propagate(const FlatNetwork& net, const Eigen::Ref<const Eigen::RowVectorXd>& x, bool clamp = true);

/// Appends the flat nodes for one spec node and returns the flat index of each of its outputs.
using NodeExpander = std::function<std::vector<int>(FlatNetwork&, const std::vector<FlatSource>&)>;

/// Expands a validated spec in evaluation order. outputs receives each node's flat output indices.
FlatNetwork build_flat(const NetworkSpec& spec, const std::map<std::string, NodeExpander>& expanders,
                       std::map<std::string, std::vector<int>>& outputs);

struct LinkedResult {
  std::map<std::string, std::vector<Prediction>> nodes;
  bool outside_box = false;
};

/// Linked GP emulator: every node is a bundle of independent scalar GPs, one
/// per output.
class LinkedGP {
 public:
  LinkedGP(NetworkSpec spec, std::map<std::string, std::vector<std::shared_ptr<const GPModel>>> models);

  LinkedResult propagate(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  const NetworkSpec& spec() const { return spec_; }

 private:
  NetworkSpec spec_;
  std::map<std::string, std::vector<std::shared_ptr<const GPModel>>> models_;
  FlatNetwork flat_;
  std::map<std::string, std::vector<int>> outputs_;
};

/// Checks model dimensions and kernel placement against the spec and fills
/// node families; throws ValidationError listing violations.
void check_spec_against_models(NetworkSpec& spec, const std::map<std::string, int>& input_dims,
                               const std::map<std::string, int>& output_widths,
                               const std::map<std::string, KernelFamily>& families);

std::string format_violations(const std::vector<Violation>& v);

}  // namespace ldgp
