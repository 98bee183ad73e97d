#include "ldgp/gp.hpp"

#include "ldgp/errors.hpp"
#include "ldgp/optimize.hpp"
#include "ldgp/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ldgp {

namespace {

constexpr double kLogNuggetLower = -23.025850929940457;  // log 1e-10
constexpr double kLogNuggetUpper = 4.605170185988092;    // log 1e2
constexpr double kSqrt5 = 2.23606797749978969641;

double log_factor_derivative(KernelFamily family, double r, double g) {
  if (family == KernelFamily::SquaredExponential) return 2.0 * r * r / (g * g);
  const double a = kSqrt5 * r / g;
  return (a * a / 3.0) * (1.0 + a) / (1.0 + a + a * a / 3.0);
}

}  // namespace

InputScaler InputScaler::fit(const Eigen::MatrixXd& X) {
  InputScaler s;
  s.lower = X.colwise().minCoeff();
  s.span = X.colwise().maxCoeff() - s.lower;
  for (Eigen::Index d = 0; d < s.span.size(); ++d)
    if (!(s.span[d] > 0.0)) s.span[d] = 1.0;
  return s;
}

InputScaler InputScaler::identity(Eigen::Index dims) {
  return InputScaler{Eigen::RowVectorXd::Zero(dims), Eigen::RowVectorXd::Ones(dims)};
}

Eigen::RowVectorXd InputScaler::apply(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != lower.size())
    throw ValidationError("input has " + std::to_string(x.size()) + " dimensions, model expects " +
                          std::to_string(lower.size()));
  return (x - lower).cwiseQuotient(span);
}

Eigen::MatrixXd InputScaler::apply_rows(const Eigen::MatrixXd& X) const {
  if (X.cols() != lower.size()) throw ValidationError("input dimension mismatch");
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out.row(i) = (X.row(i) - lower).cwiseQuotient(span);
  return out;
}

OutputScaler OutputScaler::fit(const Eigen::VectorXd& y) {
  OutputScaler s;
  s.mean = y.mean();
  const double ss = (y.array() - s.mean).square().sum();
  s.sd = y.size() > 1 ? std::sqrt(ss / static_cast<double>(y.size() - 1)) : 0.0;
  if (!(s.sd > 0.0) || s.sd < 1e-300) throw ValidationError("outputs are constant; cannot standardize");
  return s;
}

GPModel GPModel::assemble(Eigen::MatrixXd X, Eigen::VectorXd y, KernelConfig config, InputScaler input_scaler,
                          OutputScaler output_scaler) {
  config.validate();
  if (X.rows() != y.size()) throw ValidationError("design and output sizes differ");
  if (X.cols() != config.dims()) throw ValidationError("design dimension does not match kernel");
  if (input_scaler.dims() != X.cols()) throw ValidationError("input scaler dimension mismatch");
  GPModel m;
  m.chol_ = robust_cholesky(corr_matrix(config, X));
  m.alpha_ = m.chol_.solve(y);
  m.inverse_ = m.chol_.inverse();
  m.X_ = std::move(X);
  m.y_ = std::move(y);
  m.config_ = std::move(config);
  m.input_scaler_ = std::move(input_scaler);
  m.output_scaler_ = output_scaler;
  return m;
}

Prediction GPModel::predict_scaled(const Eigen::Ref<const Eigen::RowVectorXd>& xs) const {
  Eigen::VectorXd r = cross_corr(config_, X_, xs);
  // Coincident rows also carry the factor's jitter.
  for (Eigen::Index i = 0; i < X_.rows(); ++i)
    if (X_.row(i) == xs) r[i] += chol_.jitter;
  const Eigen::VectorXd v = chol_.lower.triangularView<Eigen::Lower>().solve(r);
  return {r.dot(alpha_), config_.scale * (1.0 + config_.nugget + chol_.jitter - v.squaredNorm())};
}

Prediction GPModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (!x.allFinite()) throw ValidationError("predict: non-finite query");
  const Prediction p = predict_scaled(input_scaler_.apply(x));
  const double sd = output_scaler_.sd;
  return {p.mean * sd + output_scaler_.mean, clamp_variance(p.var) * sd * sd};
}

double GPModel::log_likelihood() const {
  const double m = static_cast<double>(size());
  return -0.5 * (y_.dot(alpha_) / config_.scale + m * std::log(config_.scale) + chol_.log_det() +
                 m * std::log(2.0 * std::numbers::pi));
}

double likelihood_with_gradient(KernelConfig& config, const Eigen::MatrixXd& Xs, const Eigen::VectorXd& ys,
                                bool profile, bool with_nugget, Eigen::VectorXd* grad) {
  const Eigen::Index m = Xs.rows();
  const Eigen::Index dims = Xs.cols();
  const double ninf = -std::numeric_limits<double>::infinity();

  Eigen::MatrixXd R = corr_matrix(config, Xs);
  CholeskyFactor chol;
  if (!try_robust_cholesky(R, chol)) return ninf;
  const Eigen::VectorXd alpha = chol.solve(ys);
  const double quad = ys.dot(alpha);
  double scale = config.scale;
  if (profile) {
    scale = quad / static_cast<double>(m);
    if (!(scale > 0.0) || !std::isfinite(scale)) return ninf;
    config.scale = scale;
  }
  const double ll = -0.5 * (quad / scale + static_cast<double>(m) * std::log(scale) + chol.log_det() +
                            static_cast<double>(m) * std::log(2.0 * std::numbers::pi));
  if (!std::isfinite(ll)) return ninf;
  if (grad == nullptr) return ll;

  // d ll / d theta = 1/2 sum_ij W_ij dR_ij, W = alpha alpha^T / sigma^2 - R^{-1}.
  const Eigen::MatrixXd Rinv = chol.inverse();
  grad->setZero(dims + (with_nugget ? 1 : 0));
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = j + 1; i < m; ++i) {
      const double w = alpha[i] * alpha[j] / scale - Rinv(i, j);
      double k = R(i, j);
      const bool same = config.nugget > 0.0 && Xs.row(i) == Xs.row(j);
      if (same) k -= config.nugget;
      if (k != 0.0) {
        for (Eigen::Index d = 0; d < dims; ++d)
          (*grad)[d] += w * k * log_factor_derivative(config.family, std::abs(Xs(i, d) - Xs(j, d)),
                                                      config.lengthscales[d]);
      }
      if (with_nugget && same) (*grad)[dims] += w * config.nugget;
    }
  }
  if (with_nugget) {
    double diag = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) diag += alpha[i] * alpha[i] / scale - Rinv(i, i);
    (*grad)[dims] += 0.5 * diag * config.nugget;
  }
  return ll;
}

HyperFit fit_hyperparameters(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& ys, KernelFamily family,
                             const TrainOptions& options) {
  const Eigen::Index dims = Xs.cols();
  const bool with_nugget = options.estimate_nugget;
  const bool profile = !options.fixed_scale.has_value();
  const Eigen::Index n = dims + (with_nugget ? 1 : 0);

  Eigen::VectorXd lower(n), upper(n);
  lower.head(dims).setConstant(std::log(options.lengthscale_lower));
  upper.head(dims).setConstant(std::log(options.lengthscale_upper));
  if (with_nugget) {
    lower[dims] = kLogNuggetLower;
    upper[dims] = kLogNuggetUpper;
  }

  auto make_config = [&](const Eigen::VectorXd& theta) {
    KernelConfig c;
    c.family = family;
    c.lengthscales = theta.head(dims).array().exp();
    c.nugget = with_nugget ? std::exp(theta[dims]) : options.nugget;
    c.scale = options.fixed_scale.value_or(1.0);
    return c;
  };

  Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& g) {
    KernelConfig c = make_config(theta);
    Eigen::VectorXd gl;
    const double ll = likelihood_with_gradient(c, Xs, ys, profile, with_nugget, &gl);
    if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
    g = -gl;
    double obj = -ll;
    if (options.lengthscale_prior) {
      const auto [a, b] = *options.lengthscale_prior;
      for (Eigen::Index d = 0; d < dims; ++d) {
        const double gamma = std::exp(theta[d]);
        obj -= (a - 1.0) * theta[d] - b * gamma;
        g[d] -= (a - 1.0) - b * gamma;
      }
    }
    return obj;
  };

  std::vector<Eigen::VectorXd> starts;
  if (options.initial_lengthscales) {
    if (options.initial_lengthscales->size() != dims) throw ValidationError("warm start has wrong dimension");
    Eigen::VectorXd x0(n);
    x0.head(dims) = options.initial_lengthscales->array().log();
    if (with_nugget) x0[dims] = std::log(options.initial_nugget.value_or(1e-4));
    starts.push_back(x0);
  }
  Rng rng = make_stream(options.seed, {0x67705f7374617274ULL});
  while (static_cast<int>(starts.size()) < std::max(1, options.starts)) {
    Eigen::VectorXd x0(n);
    for (Eigen::Index d = 0; d < dims; ++d) x0[d] = uniform(rng, std::log(0.05), std::log(3.0));
    if (with_nugget) x0[dims] = uniform(rng, std::log(1e-6), std::log(1e-2));
    starts.push_back(x0);
  }

  BoxBfgsOptions bo;
  bo.max_iterations = options.max_iterations;
  bool found = false;
  double best_ll = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best;
  for (const auto& x0 : starts) {
    const OptimizeResult r = minimize_box(objective, x0, lower, upper, bo);
    if (!r.finite || !std::isfinite(r.value)) continue;
    const double ll = -r.value;  // penalized when a prior is set
    const double tol = 1e-10 * (1.0 + std::abs(ll));
    const bool better = !found || ll > best_ll + tol ||
                        (std::abs(ll - best_ll) <= tol && r.x.head(dims).norm() < best.head(dims).norm());
    if (better) {
      found = true;
      best_ll = ll;
      best = r.x;
    }
  }
  if (!found) throw NumericalError("likelihood is non-finite at every start");

  HyperFit fit;
  fit.config = make_config(best);
  fit.log_likelihood = likelihood_with_gradient(fit.config, Xs, ys, profile, with_nugget, nullptr);
  return fit;
}

GPModel train_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, KernelFamily family,
                 const TrainOptions& options) {
  if (X.rows() < 2) throw ValidationError("train_gp: need at least 2 design points");
  if (X.rows() != y.size()) throw ValidationError("train_gp: design and output sizes differ");
  if (X.cols() < 1) throw ValidationError("train_gp: design has no columns");
  if (!X.allFinite() || !y.allFinite()) throw ValidationError("train_gp: non-finite data");

  InputScaler in = options.scale_inputs ? InputScaler::fit(X) : InputScaler::identity(X.cols());
  Eigen::MatrixXd Xs = in.apply_rows(X);
  for (Eigen::Index i = 0; i < Xs.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (Xs.row(i) == Xs.row(j))
        throw ValidationError("train_gp: duplicated design row " + std::to_string(j) + " and " + std::to_string(i));

  OutputScaler out;
  if (options.standardize_output) {
    out = OutputScaler::fit(y);
  } else if (y.maxCoeff() == y.minCoeff() && y.maxCoeff() == 0.0) {
    throw ValidationError("outputs are constant; cannot standardize");
  }
  Eigen::VectorXd ys = (y.array() - out.mean) / out.sd;

  HyperFit fit = fit_hyperparameters(Xs, ys, family, options);
  return GPModel::assemble(std::move(Xs), std::move(ys), fit.config, std::move(in), out);
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) throw ValidationError("ragged matrix in JSON");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json to_json(const KernelConfig& c) {
  return {{"family", to_string(c.family)},
          {"gamma", vector_to_json(c.lengthscales)},
          {"eta", c.nugget},
          {"sigma2", c.scale}};
}

KernelConfig kernel_config_from_json(const json& j) {
  KernelConfig c;
  c.family = kernel_family_from_string(j.at("family").get<std::string>());
  c.lengthscales = vector_from_json(j.at("gamma"));
  c.nugget = j.at("eta").get<double>();
  c.scale = j.at("sigma2").get<double>();
  c.validate();
  return c;
}

json to_json(const InputScaler& s) {
  return {{"lower", vector_to_json(s.lower.transpose())}, {"span", vector_to_json(s.span.transpose())}};
}

InputScaler input_scaler_from_json(const json& j) {
  InputScaler s;
  s.lower = vector_from_json(j.at("lower")).transpose();
  s.span = vector_from_json(j.at("span")).transpose();
  if (s.lower.size() != s.span.size()) throw ValidationError("scaler: lower/span length mismatch");
  return s;
}

json to_json(const GPModel& model) {
  json j = to_json(model.config());
  j["kind"] = "gp";
  j["X"] = matrix_to_json(model.X());
  j["y"] = vector_to_json(model.y());
  j["scalers"] = {{"input", to_json(model.input_scaler())},
                  {"output_mean", model.output_scaler().mean},
                  {"output_sd", model.output_scaler().sd}};
  return j;
}

GPModel gp_from_json(const json& j) {
  try {
    KernelConfig c = kernel_config_from_json(j);
    const json& sc = j.at("scalers");
    OutputScaler out{sc.at("output_mean").get<double>(), sc.at("output_sd").get<double>()};
    return GPModel::assemble(matrix_from_json(j.at("X")), vector_from_json(j.at("y")), std::move(c),
                             input_scaler_from_json(sc.at("input")), out);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed GP model JSON: ") + e.what());
  }
}

}  // namespace ldgp
