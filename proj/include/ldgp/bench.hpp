#pragma once

#include "ldgp/deep.hpp"
#include "ldgp/design.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ldgp {

double f1(double x);
double f2(double x);
double f3(double x);
double synthetic_chain(double x);

constexpr double kHedgeRate = 0.05;
constexpr double kHedgeVolatility = 0.32;

double bs_d1(double S, double K, double tau, double r, double v);
double bs_call(double S, double K, double tau, double r, double v);
double bs_delta(double S, double K, double tau, double r, double v);
double bs_vega(double S, double K, double tau, double r, double v);

/// Option-2 position neutralizing the portfolio Vega for one unit of option 1.
double vega_strategy(double V1, double V2, double eps = 1e-8);
/// Stock position neutralizing the portfolio Delta.
double delta_strategy(double D1, double D2, double P2);

/// RMSE divided by the range of the truth, in percent.
double nrmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth);
double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth);

struct SyntheticConfig {
  std::uint64_t seed = 0;
  Criterion criterion = Criterion::ALM;
  std::vector<std::string> emulators{"CGP", "CDGP", "LGP", "LDGP"};
  int initial = 5;
  int budget = 20;
  int test_points = 500;
  DGPTrainOptions dgp;
  SequentialOptions sequential;
};

struct Curve {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

struct SyntheticReport {
  std::uint64_t seed = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd truth;
  std::map<std::string, double> nrmse;
  std::map<std::string, Curve> curves;
};

SyntheticReport run_synthetic(const SyntheticConfig& config);
json to_json(const SyntheticReport& report);
/// Long format: emulator, x, truth, mean, sd.
std::vector<std::vector<std::string>> curve_rows(const SyntheticReport& report);

struct HedgingConfig {
  std::uint64_t seed = 0;
  int budget = 100;
  int trials = 1;
  Criterion criterion = Criterion::ALM;
  int test_points = 2000;
  int validation_points = 500;
  int global_initial = 50;
  // Initial sizes for the Vega, Delta, H_V and H_Delta nodes.
  std::vector<int> node_initial{30, 30, 20, 30};
  DGPTrainOptions dgp;
  SequentialOptions sequential = [] {
    SequentialOptions s;
    s.dgp_step_iterations = 20;
    s.dgp_step_sweeps = 5;
    return s;
  }();
};

struct HedgingReport {
  std::vector<std::uint64_t> seeds;
  // node -> kind ("GP"/"DGP") -> RMSE per trial on the node validation set.
  std::map<std::string, std::map<std::string, std::vector<double>>> per_node_rmse;
  std::map<std::string, std::string> selected;
  double h_delta_gp_nrmse = 0.0;
  std::map<std::string, double> p2_nrmse;
  std::map<std::string, double> ps_nrmse;
};

HedgingReport run_hedging(const HedgingConfig& config);
json to_json(const HedgingReport& report);
/// Long format: node, emulator, trial, rmse.
std::vector<std::vector<std::string>> rmse_rows(const HedgingReport& report);

/// Network of the hedging problem over global inputs (S, K1, K2, tau1, tau2).
NetworkSpec hedging_network();
DesignBox hedging_global_box();

}  // namespace ldgp
