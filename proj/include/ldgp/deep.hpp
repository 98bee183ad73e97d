#pragma once

#include "ldgp/gp.hpp"
#include "ldgp/network.hpp"
#include "ldgp/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ldgp {

/// Layer widths P_1..P_L; the last entry is the number of outputs.
struct DGPArchitecture {
  std::vector<int> widths;
  KernelFamily first_layer_family = KernelFamily::SquaredExponential;

  int depth() const { return static_cast<int>(widths.size()); }
  int outputs() const { return widths.back(); }

  /// depth layers, hidden widths equal to the input dimension.
  static DGPArchitecture standard(int input_dims, int depth, int outputs = 1);
  void validate() const;
};

/// Latent layer values for one imputation: hidden[l] is M x P_{l+1}.
struct Imputation {
  std::vector<Eigen::MatrixXd> hidden;
};

struct DGPTrainOptions {
  int iterations = 200;
  int burn_in = 150;
  int imputations = 50;
  int spacing = 5;
  std::uint64_t seed = 0;
  // Mean of post-burn-in hyperparameters; otherwise the last iteration's.
  bool average_hyperparameters = true;
  double hidden_nugget = 1e-6;
  double output_nugget = 1e-8;
  bool estimate_output_nugget = false;
  int optimizer_iterations = 20;
  // ESS sweeps per SEM iteration before the M-step.
  int sweeps = 25;
  // Gamma(shape, rate) penalty on lengthscales in the M-step; keeps hidden
  // layers of small designs from collapsing onto constants. Unset for plain ML.
  std::optional<std::pair<double, double>> lengthscale_prior = std::pair{1.6, 0.3};
};

class DGPModel;

/// SEM training: alternates ESS sweeps over the hidden layers with
/// warm-started per-node maximum likelihood, then freezes the hyperparameters
/// and harvests spaced imputations. warm_start reuses hyperparameters (and
/// latent values for the shared leading rows) of an earlier fit.
DGPModel sem_train(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const DGPArchitecture& arch,
                   const DGPTrainOptions& options, const DGPModel* warm_start = nullptr);

/// Latent posterior sampler state for one DGP: the ESS sweep and per-layer
/// likelihoods used by SEM, exposed for tests.
class LatentSampler {
 public:
  LatentSampler(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Ys,
                const std::vector<std::vector<KernelConfig>>& configs);

  /// log p(next layer | candidate values of hidden layer l), l is 0-based over hidden layers.
  double layer_log_likelihood(int l, const Eigen::MatrixXd& candidate, const std::vector<Eigen::MatrixXd>& state) const;

  /// Draw from the conditional prior of hidden layer l.
  Eigen::MatrixXd prior_draw(int l, const std::vector<Eigen::MatrixXd>& state, Rng& rng) const;

  /// One ESS update per hidden layer, in order.
  void sweep(std::vector<Eigen::MatrixXd>& state, Rng& rng) const;

  const Eigen::MatrixXd& layer_input(int l, const std::vector<Eigen::MatrixXd>& state) const;

 private:
  const Eigen::MatrixXd& Xs_;
  const Eigen::MatrixXd& Ys_;
  const std::vector<std::vector<KernelConfig>>& configs_;
};

/// Gaussian log density of y under N(0, config.scale * R(X)); -inf when R cannot be factorized.
double gaussian_log_density(const KernelConfig& config, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Trained deep GP with retained latent imputations. Each imputation is a
/// fully exposed network of ordinary GP nodes, compiled once at construction.
class DGPModel {
 public:
  DGPModel() = default;

  static DGPModel assemble(DGPArchitecture arch, Eigen::MatrixXd Xs, Eigen::MatrixXd Ys, InputScaler input_scaler,
                           std::vector<OutputScaler> output_scalers, std::vector<std::vector<KernelConfig>> configs,
                           std::vector<Imputation> imputations, std::uint64_t seed);

  const DGPArchitecture& arch() const { return arch_; }
  const std::vector<std::vector<KernelConfig>>& configs() const { return configs_; }
  const std::vector<Imputation>& imputations() const { return imputations_; }
  const Eigen::MatrixXd& X() const { return Xs_; }
  const Eigen::MatrixXd& Y() const { return Ys_; }
  const InputScaler& input_scaler() const { return input_scaler_; }
  const std::vector<OutputScaler>& output_scalers() const { return output_scalers_; }
  std::uint64_t seed() const { return seed_; }
  int input_dims() const { return static_cast<int>(Xs_.cols()); }
  int output_width() const { return arch_.outputs(); }
  int imputation_count() const { return static_cast<int>(imputations_.size()); }

  /// GP node (layer l, index p), 0-based, as exposed by imputation i.
  const GPModel& node(int imputation, int l, int p) const;

  /// Appends imputation i's nodes fed by the given sources; returns terminal flat indices.
  std::vector<int> expand(FlatNetwork& net, const std::vector<FlatSource>& sources, int imputation) const;

  /// Per-imputation predictions of every output (unaggregated).
  std::vector<std::vector<Prediction>> predict_components(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                                          int n) const;

 private:
  struct Compiled {
    std::vector<std::vector<std::vector<GPModel>>> nodes;  // [imputation][layer][p]
    std::vector<FlatNetwork> flats;
    std::vector<std::vector<int>> terminals;
  };

  DGPArchitecture arch_;
  Eigen::MatrixXd Xs_;
  Eigen::MatrixXd Ys_;
  InputScaler input_scaler_;
  std::vector<OutputScaler> output_scalers_;
  std::vector<std::vector<KernelConfig>> configs_;
  std::vector<Imputation> imputations_;
  std::uint64_t seed_ = 0;
  std::shared_ptr<const Compiled> compiled_;
};

/// Mean and variance of an equally weighted mixture of normals.
Prediction mixture(std::span<const Prediction> components);

/// Aggregated prediction of every output using the first n imputations.
std::vector<Prediction> predict_dgp(const DGPModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x, int n);

json to_json(const DGPModel& model);
DGPModel dgp_from_json(const json& j);

/// Emulator attached to one network node.
class NodeEmulator {
 public:
  static NodeEmulator gp(std::vector<std::shared_ptr<const GPModel>> outputs);
  static NodeEmulator gp(GPModel model);
  static NodeEmulator dgp(std::shared_ptr<const DGPModel> model);

  EmulatorKind kind() const { return kind_; }
  int input_dims() const;
  int output_width() const;
  KernelFamily input_family() const;
  const std::vector<std::shared_ptr<const GPModel>>& gp_outputs() const { return gp_; }
  const std::shared_ptr<const DGPModel>& dgp_model() const { return dgp_; }

 private:
  EmulatorKind kind_ = EmulatorKind::GP;
  std::vector<std::shared_ptr<const GPModel>> gp_;
  std::shared_ptr<const DGPModel> dgp_;
};

json to_json(const NodeEmulator& e);
NodeEmulator node_emulator_from_json(const json& j);

/// Network of GP and DGP emulators. Imputation i of the network exposes
/// imputation i of every DGP node; GP nodes appear unchanged in all of them.
class LDGPEmulator {
 public:
  LDGPEmulator(NetworkSpec spec, std::map<std::string, NodeEmulator> emulators, int imputations);

  /// Aggregated mean/variance of every node output from the first n imputations.
  LinkedResult predict(const Eigen::Ref<const Eigen::RowVectorXd>& x, int n) const;
  LinkedResult predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return predict(x, imputations_); }

  /// Unaggregated result of one network imputation.
  LinkedResult predict_imputation(const Eigen::Ref<const Eigen::RowVectorXd>& x, int i) const;

  const NetworkSpec& spec() const { return spec_; }
  const std::map<std::string, NodeEmulator>& emulators() const { return emulators_; }
  int imputations() const { return imputations_; }
  int global_dims() const { return spec_.global_dims(); }

 private:
  NetworkSpec spec_;
  std::map<std::string, NodeEmulator> emulators_;
  int imputations_ = 1;
  std::vector<FlatNetwork> flats_;
  std::map<std::string, std::vector<int>> outputs_;
};

/// Assembles an LDGP emulator; an all-GP network gives the linked GP emulator.
LDGPEmulator link_ldgp(std::map<std::string, NodeEmulator> emulators, NetworkSpec spec, int n);

}  // namespace ldgp
