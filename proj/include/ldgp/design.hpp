#pragma once

#include "ldgp/deep.hpp"
#include "ldgp/gp.hpp"
#include "ldgp/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>

namespace ldgp {

struct DesignBox {
  Eigen::RowVectorXd lower;
  Eigen::RowVectorXd upper;

  static DesignBox unit(int dims);
  static DesignBox of(std::initializer_list<std::pair<double, double>> bounds);
  Eigen::Index dims() const { return lower.size(); }
  void validate() const;
  bool contains(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::MatrixXd from_unit(const Eigen::MatrixXd& U) const;
};

/// One random Latin hypercube of n points in the box.
Eigen::MatrixXd random_lhs(int n, const DesignBox& box, Rng& rng);

/// Smallest pairwise Euclidean distance after mapping the box onto the unit cube.
double min_pairwise_distance(const Eigen::MatrixXd& X, const DesignBox& box);

/// Best of `candidates` random Latin hypercubes under the maximin distance.
Eigen::MatrixXd lhs_maximin(int n, const DesignBox& box, std::uint64_t seed, int candidates = 1000);

/// n equally spaced points over a 1-D box, endpoints included; n = 1 gives the midpoint.
Eigen::MatrixXd uniform_grid(int n, const DesignBox& box);

enum class Criterion { ALM, MICE };
Criterion criterion_from_string(const std::string& s);
std::string to_string(Criterion c);

/// Index of the chosen candidate given emulator variances. For MICE the
/// variance ratio uses a GP with the given kernel (over candidates already in
/// that kernel's coordinates) conditioned on the other candidates with nugget
/// tau2. Ties go to the lowest index.
int next_point(const Eigen::VectorXd& emulator_variance, const Eigen::MatrixXd& kernel_candidates, Criterion criterion,
               const KernelConfig& mice_kernel, double tau2 = 1.0);

int next_point(const GPModel& emulator, const Eigen::MatrixXd& candidates, Criterion criterion, double tau2 = 1.0);
int next_point(const DGPModel& emulator, const Eigen::MatrixXd& candidates, Criterion criterion, int imputations,
               double tau2 = 1.0);

using Simulator = std::function<Eigen::VectorXd(const Eigen::RowVectorXd&)>;

struct SequentialOptions {
  int budget = 20;
  Criterion criterion = Criterion::ALM;
  int candidates = 0;  // 0: 200 * dims
  std::uint64_t seed = 0;
  int refit_starts = 4;
  // DGP refits during the loop.
  int dgp_step_iterations = 50;
  int dgp_step_imputations = 10;
  int dgp_step_spacing = 2;
  int dgp_step_sweeps = 0;  // 0: same as the final fit
};

struct GPDesign {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  GPModel model;
};

struct DGPDesign {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
  DGPModel model;
};

/// Grows the design one acquisition at a time until it holds options.budget
/// points, refitting after each. The final model is trained with train_options.
GPDesign enrich_gp(Eigen::MatrixXd X, Eigen::VectorXd y, const Simulator& simulator, const DesignBox& box,
                   KernelFamily family, const SequentialOptions& options, const TrainOptions& train_options);

DGPDesign enrich_dgp(Eigen::MatrixXd X, Eigen::MatrixXd Y, const Simulator& simulator, const DesignBox& box,
                     const DGPArchitecture& arch, const SequentialOptions& options,
                     const DGPTrainOptions& train_options);

}  // namespace ldgp
