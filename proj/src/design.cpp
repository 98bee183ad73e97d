#include "ldgp/design.hpp"

#include "ldgp/errors.hpp"
#include "ldgp/linalg.hpp"
#include "ldgp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ldgp {

namespace {
constexpr std::uint64_t kCandidateTag = 0x63616e64;
constexpr std::uint64_t kLhsTag = 0x6c6873;
constexpr std::uint64_t kRefitTag = 0x7265666974;
}  // namespace

DesignBox DesignBox::unit(int dims) {
  return {Eigen::RowVectorXd::Zero(dims), Eigen::RowVectorXd::Ones(dims)};
}

DesignBox DesignBox::of(std::initializer_list<std::pair<double, double>> bounds) {
  DesignBox b{Eigen::RowVectorXd(static_cast<Eigen::Index>(bounds.size())),
              Eigen::RowVectorXd(static_cast<Eigen::Index>(bounds.size()))};
  Eigen::Index d = 0;
  for (const auto& [lo, hi] : bounds) {
    b.lower[d] = lo;
    b.upper[d] = hi;
    ++d;
  }
  return b;
}

void DesignBox::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size()) throw ValidationError("design box: bad dimensions");
  for (Eigen::Index d = 0; d < lower.size(); ++d)
    if (!std::isfinite(lower[d]) || !std::isfinite(upper[d]) || !(lower[d] < upper[d]))
      throw ValidationError("design box: bounds must be finite with lower < upper");
}

bool DesignBox::contains(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  for (Eigen::Index d = 0; d < lower.size(); ++d)
    if (x[d] < lower[d] || x[d] > upper[d]) return false;
  return true;
}

Eigen::MatrixXd DesignBox::from_unit(const Eigen::MatrixXd& U) const {
  Eigen::MatrixXd X(U.rows(), U.cols());
  for (Eigen::Index i = 0; i < U.rows(); ++i) X.row(i) = lower + U.row(i).cwiseProduct(upper - lower);
  return X;
}

Eigen::MatrixXd random_lhs(int n, const DesignBox& box, Rng& rng) {
  box.validate();
  if (n < 1) throw ValidationError("random_lhs: need n >= 1");
  const Eigen::Index dims = box.dims();
  Eigen::MatrixXd U(n, dims);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (Eigen::Index d = 0; d < dims; ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    for (int i = 0; i < n; ++i) U(i, d) = (perm[static_cast<std::size_t>(i)] + uniform01(rng)) / n;
  }
  return box.from_unit(U);
}

double min_pairwise_distance(const Eigen::MatrixXd& X, const DesignBox& box) {
  const Eigen::RowVectorXd span = box.upper - box.lower;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      best = std::min(best, (X.row(i) - X.row(j)).cwiseQuotient(span).squaredNorm());
  return std::sqrt(best);
}

Eigen::MatrixXd lhs_maximin(int n, const DesignBox& box, std::uint64_t seed, int candidates) {
  if (n < 2) throw ValidationError("lhs_maximin: need n >= 2");
  box.validate();
  Rng rng = make_stream(seed, {kLhsTag});
  Eigen::MatrixXd best;
  double best_d = -1.0;
  for (int k = 0; k < std::max(1, candidates); ++k) {
    Eigen::MatrixXd X = random_lhs(n, box, rng);
    const double d = min_pairwise_distance(X, box);
    if (d > best_d) {
      best_d = d;
      best = std::move(X);
    }
  }
  return best;
}

Eigen::MatrixXd uniform_grid(int n, const DesignBox& box) {
  box.validate();
  if (box.dims() != 1) throw ValidationError("uniform_grid: only 1-D boxes are supported");
  if (n < 1) throw ValidationError("uniform_grid: need n >= 1");
  Eigen::MatrixXd X(n, 1);
  const double lo = box.lower[0], hi = box.upper[0];
  if (n == 1) {
    X(0, 0) = 0.5 * (lo + hi);
    return X;
  }
  for (int i = 0; i < n; ++i) X(i, 0) = i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1);
  return X;
}

Criterion criterion_from_string(const std::string& s) {
  if (s == "alm" || s == "ALM") return Criterion::ALM;
  if (s == "mice" || s == "MICE") return Criterion::MICE;
  throw ValidationError("unknown design criterion '" + s + "'");
}

std::string to_string(Criterion c) { return c == Criterion::ALM ? "alm" : "mice"; }

int next_point(const Eigen::VectorXd& emulator_variance, const Eigen::MatrixXd& kernel_candidates, Criterion criterion,
               const KernelConfig& mice_kernel, double tau2) {
  const Eigen::Index k = emulator_variance.size();
  if (k == 0) throw ValidationError("next_point: empty candidate set");
  Eigen::VectorXd score = emulator_variance;
  if (criterion == Criterion::MICE && k > 1) {
    // Leave-one-out variance of candidate j given the rest: 1 / [K^{-1}]_jj.
    KernelConfig c = mice_kernel;
    c.nugget = 0.0;
    Eigen::MatrixXd K = corr_matrix(c, kernel_candidates);
    K.diagonal().array() += tau2;
    const Eigen::MatrixXd Kinv = robust_cholesky(K).inverse();
    for (Eigen::Index j = 0; j < k; ++j) score[j] = emulator_variance[j] * Kinv(j, j);
  }
  int best = 0;
  for (Eigen::Index j = 1; j < k; ++j)
    if (score[j] > score[best]) best = static_cast<int>(j);
  return best;
}

int next_point(const GPModel& emulator, const Eigen::MatrixXd& candidates, Criterion criterion, double tau2) {
  if (candidates.rows() == 0) throw ValidationError("next_point: empty candidate set");
  Eigen::VectorXd var(candidates.rows());
  for (Eigen::Index j = 0; j < candidates.rows(); ++j) var[j] = emulator.predict(candidates.row(j)).var;
  return next_point(var, emulator.input_scaler().apply_rows(candidates), criterion, emulator.config(), tau2);
}

int next_point(const DGPModel& emulator, const Eigen::MatrixXd& candidates, Criterion criterion, int imputations,
               double tau2) {
  if (candidates.rows() == 0) throw ValidationError("next_point: empty candidate set");
  const int n = std::min(imputations, emulator.imputation_count());
  Eigen::VectorXd var(candidates.rows());
  for (Eigen::Index j = 0; j < candidates.rows(); ++j) {
    double total = 0.0;
    for (const auto& p : predict_dgp(emulator, candidates.row(j), n)) total += p.var;
    var[j] = total;
  }
  // MICE correlations use the first input-layer node of the DGP.
  return next_point(var, emulator.input_scaler().apply_rows(candidates), criterion, emulator.configs().front().front(),
                    tau2);
}

namespace {

Eigen::MatrixXd candidates_for_step(const DesignBox& box, const SequentialOptions& options, int step) {
  const int k = options.candidates > 0 ? options.candidates : 200 * static_cast<int>(box.dims());
  Rng rng = make_stream(options.seed, {kCandidateTag, static_cast<std::uint64_t>(step)});
  return random_lhs(k, box, rng);
}

template <class Row>
void append_row(Eigen::MatrixXd& M, const Row& r) {
  M.conservativeResize(M.rows() + 1, Eigen::NoChange);
  M.row(M.rows() - 1) = r;
}

}  // namespace

GPDesign enrich_gp(Eigen::MatrixXd X, Eigen::VectorXd y, const Simulator& simulator, const DesignBox& box,
                   KernelFamily family, const SequentialOptions& options, const TrainOptions& train_options) {
  box.validate();
  GPModel model = train_gp(X, y, family, train_options);
  for (int step = 0; X.rows() < options.budget; ++step) {
    const Eigen::MatrixXd cand = candidates_for_step(box, options, step);
    const int j = next_point(model, cand, options.criterion);
    const Eigen::RowVectorXd x = cand.row(j);
    const Eigen::VectorXd out = simulator(x);
    append_row(X, x);
    y.conservativeResize(y.size() + 1);
    y[y.size() - 1] = out[0];
    TrainOptions o = train_options;
    o.starts = options.refit_starts;
    o.seed = derive_seed(train_options.seed, {kRefitTag, static_cast<std::uint64_t>(step)});
    o.initial_lengthscales = model.config().lengthscales;
    if (X.rows() < options.budget) model = train_gp(X, y, family, o);
  }
  model = train_gp(X, y, family, train_options);
  return {std::move(X), std::move(y), std::move(model)};
}

DGPDesign enrich_dgp(Eigen::MatrixXd X, Eigen::MatrixXd Y, const Simulator& simulator, const DesignBox& box,
                     const DGPArchitecture& arch, const SequentialOptions& options,
                     const DGPTrainOptions& train_options) {
  box.validate();
  DGPTrainOptions step_options = train_options;
  step_options.iterations = options.dgp_step_iterations;
  step_options.burn_in = options.dgp_step_iterations * 3 / 4;
  step_options.imputations = options.dgp_step_imputations;
  step_options.spacing = options.dgp_step_spacing;
  if (options.dgp_step_sweeps > 0) step_options.sweeps = options.dgp_step_sweeps;

  if (X.rows() >= options.budget) {
    DGPModel model = sem_train(X, Y, arch, train_options);
    return {std::move(X), std::move(Y), std::move(model)};
  }
  DGPTrainOptions first = train_options;
  first.imputations = options.dgp_step_imputations;
  first.spacing = options.dgp_step_spacing;
  DGPModel model = sem_train(X, Y, arch, first);
  for (int step = 0; X.rows() < options.budget; ++step) {
    const Eigen::MatrixXd cand = candidates_for_step(box, options, step);
    const int j = next_point(model, cand, options.criterion, options.dgp_step_imputations);
    const Eigen::RowVectorXd x = cand.row(j);
    const Eigen::VectorXd out = simulator(x);
    append_row(X, x);
    append_row(Y, out.transpose());
    DGPTrainOptions o = step_options;
    o.seed = derive_seed(train_options.seed, {kRefitTag, static_cast<std::uint64_t>(step)});
    if (X.rows() < options.budget) model = sem_train(X, Y, arch, o, &model);
  }
  model = sem_train(X, Y, arch, train_options, &model);
  return {std::move(X), std::move(Y), std::move(model)};
}

}  // namespace ldgp
