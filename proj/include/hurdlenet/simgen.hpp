#pragma once

#include "hurdlenet/netpanel.hpp"
#include "hurdlenet/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hurdlenet {

struct SimConfig {
  int n = 10;
  int T = 11;
  int K = 2;
  // nonzero-group means per dimension; the other group sits at 0
  Eigen::VectorXd group_mean = (Eigen::VectorXd(2) << -1.0, 0.2).finished();
  double transition_fraction = 0.8;  // share of the zero group moved by time T
  double jitter_sd = 0.1;
  int p1 = 3;
  double binary_rate = 0.03;
  Eigen::VectorXd beta_c = (Eigen::VectorXd(8) << 0.0, 0.4, -1.0, 0.1, -0.7, 0.3, -0.9, 0.6).finished();
  Eigen::VectorXd beta_p = (Eigen::VectorXd(8) << -0.1, 0.3, -0.9, 0.0, -0.6, 0.4, -1.0, 0.7).finished();
  double beta_p0 = 0.5;
  double alpha = 0.9;
  double sigma = 1.0;
  std::uint64_t seed = 1;

  int p() const { return 2 * p1 + 2; }
  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

/// Group memberships and latent trajectories (one n x K matrix per time point).
struct SimLatents {
  std::vector<Eigen::MatrixXd> Z;
  Eigen::MatrixXi in_nonzero_group;  // n x T indicator
};

SimLatents simulate_latents(const SimConfig& cfg, Rng& rng);

/// Panel with covariates filled in and no edges: p1 N(0,1) node covariates, one
/// N(0,1) and one Bernoulli(binary_rate) symmetric pair covariate.
NetPanel simulate_covariates(const SimConfig& cfg, Rng& rng);

struct SimTruth {
  SimLatents latents;
  // per time, n x n (diagonal unused)
  std::vector<Eigen::MatrixXd> similarity;
  std::vector<Eigen::MatrixXd> occurrence_prob;
  std::vector<Eigen::MatrixXd> expected_weight;
};

struct SimResult {
  NetPanel panel;
  SimTruth truth;
};

/// Probit occurrence with intercept beta_p0 and Gaussian weights on present edges.
SimResult simulate_panel(const SimConfig& cfg, const SimLatents& latents, NetPanel covariates, Rng& rng);

/// Runs the three stages on the substreams "latents", "covariates" and "panel" of cfg.seed.
SimResult simulate(const SimConfig& cfg);

/// Truth values in the order of DyadData rows over times [t_begin, t_end).
Eigen::VectorXd truth_vector(const std::vector<Eigen::MatrixXd>& per_time, int t_begin, int t_end);

/// truth_latents.csv, truth_dyads.csv and truth_parameters.csv.
void write_truth(const SimConfig& cfg, const SimTruth& truth, const std::filesystem::path& dir);

/// Reads the expected_weight and occurrence_prob columns of truth_dyads.csv into per-time matrices.
SimTruth read_truth(const std::filesystem::path& dir, int n, int T);

}  // namespace hurdlenet
