#pragma once

#include "ldgp/kernel.hpp"
#include "ldgp/linalg.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <utility>

namespace ldgp {

using json = nlohmann::json;

/// Per-dimension min-max map onto [0,1].
struct InputScaler {
  Eigen::RowVectorXd lower;
  Eigen::RowVectorXd span;

  static InputScaler fit(const Eigen::MatrixXd& X);
  static InputScaler identity(Eigen::Index dims);

  Eigen::Index dims() const { return lower.size(); }
  Eigen::RowVectorXd apply(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& X) const;
};

struct OutputScaler {
  double mean = 0.0;
  double sd = 1.0;

  /// Throws ValidationError for constant outputs.
  static OutputScaler fit(const Eigen::VectorXd& y);
};

struct Prediction {
  double mean = 0.0;
  double var = 0.0;
};

/// Clamps tiny negative round-off; larger negatives are also clamped but are
/// reported by the unclamped paths used in tests.
inline double clamp_variance(double v) { return v < 0.0 ? 0.0 : v; }

struct TrainOptions {
  int starts = 10;
  std::uint64_t seed = 0;
  bool estimate_nugget = false;
  double nugget = 1e-8;
  // Holds sigma^2 fixed instead of profiling it out.
  std::optional<double> fixed_scale;
  bool scale_inputs = true;
  bool standardize_output = true;
  double lengthscale_lower = 1e-3;
  double lengthscale_upper = 1e3;
  // Used as the first start when present.
  std::optional<Eigen::VectorXd> initial_lengthscales;
  std::optional<double> initial_nugget;
  int max_iterations = 100;
  // Gamma(shape, rate) prior on each lengthscale; the fit becomes a MAP estimate.
  std::optional<std::pair<double, double>> lengthscale_prior;
};

/// Trained zero-mean GP emulator. Immutable after construction.
class GPModel {
 public:
  GPModel() = default;

  /// Builds a model from data already in model coordinates (scaled inputs,
  /// standardized outputs) and fixed hyperparameters.
  static GPModel assemble(Eigen::MatrixXd X, Eigen::VectorXd y, KernelConfig config, InputScaler input_scaler,
                          OutputScaler output_scaler);

  /// Predictive mean and variance at a raw-unit input.
  Prediction predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  /// Prediction in model coordinates, variance unclamped.
  Prediction predict_scaled(const Eigen::Ref<const Eigen::RowVectorXd>& xs) const;

  /// Gaussian log density of y under N(0, sigma^2 R).
  double log_likelihood() const;

  const KernelConfig& config() const { return config_; }
  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  const InputScaler& input_scaler() const { return input_scaler_; }
  const OutputScaler& output_scaler() const { return output_scaler_; }
  const CholeskyFactor& chol() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::MatrixXd& inverse() const { return inverse_; }
  Eigen::Index size() const { return X_.rows(); }
  Eigen::Index dims() const { return X_.cols(); }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  KernelConfig config_;
  InputScaler input_scaler_;
  OutputScaler output_scaler_;
  CholeskyFactor chol_;
  Eigen::VectorXd alpha_;
  Eigen::MatrixXd inverse_;
};

struct HyperFit {
  KernelConfig config;
  double log_likelihood = 0.0;
};

/// Log likelihood in model coordinates with its gradient in (log gamma,
/// [log eta]). With profile set, sigma^2 is concentrated out and written back
/// into config.scale. Returns -inf when R cannot be factorized.
double likelihood_with_gradient(KernelConfig& config, const Eigen::MatrixXd& Xs, const Eigen::VectorXd& ys,
                                bool profile, bool with_nugget, Eigen::VectorXd* grad);

/// Maximum likelihood hyperparameters for data in model coordinates.
HyperFit fit_hyperparameters(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& ys, KernelFamily family,
                             const TrainOptions& options);

/// Scales, fits and assembles a GP emulator. Rejects M < 2, non-finite data,
/// duplicated rows and constant outputs.
GPModel train_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, KernelFamily family,
                 const TrainOptions& options = {});

json to_json(const GPModel& model);
GPModel gp_from_json(const json& j);

json to_json(const KernelConfig& config);
KernelConfig kernel_config_from_json(const json& j);
json to_json(const InputScaler& s);
InputScaler input_scaler_from_json(const json& j);

json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);
json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

}  // namespace ldgp
