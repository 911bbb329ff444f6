#pragma once

#include "hurdlenet/fit.hpp"
#include "hurdlenet/netpanel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hurdlenet {

struct GpdFit {
  double k = 0.0;
  double sigma = 0.0;
};

/// Generalized Pareto fit by the profile/empirical-Bayes method of Zhang & Stephens,
/// with the weakly informative shrinkage of k toward 0.5. `x` must be sorted ascending
/// and non-negative.
GpdFit gpd_fit(const std::vector<double>& x);

/// Quantile function of GPD(0, sigma, k).
double gpd_quantile(double p, double k, double sigma);

struct LooResult {
  double elpd_loo = 0.0;
  double loo_ic = 0.0;
  Eigen::VectorXd pointwise;  // elpd_i
  Eigen::VectorXd pareto_k;
  int n_high_k = 0;  // k > 0.7
};

/// Pareto-smoothed importance sampling LOO on an S x N pointwise log-likelihood matrix.
LooResult psis_loo(const Eigen::MatrixXd& loglik);

/// Smoothed, truncated and normalized log weights for one point (exposed for tests).
/// `k_out` receives the fitted tail shape (0 for a degenerate column).
Eigen::VectorXd psis_log_weights(const Eigen::VectorXd& log_ratios, double* k_out = nullptr);

struct ForecastOptions {
  /// false: condition on the last latent state (zero innovation) instead of
  /// drawing the T+1 innovation.
  bool marginalize = true;
  std::uint64_t seed = 1;
};

struct PredictionSet {
  int horizon = 0;  // 0-based time index of the forecast (T of the training panel)
  std::string horizon_label;
  std::vector<int> source;
  std::vector<int> target;
  std::vector<std::string> node_labels;
  Eigen::MatrixXd weight_draws;  // S x D, D = n(n-1) ordered dyads, (i, j) row-major
  Eigen::MatrixXd prob_draws;
  Eigen::VectorXd median_weight;
  Eigen::VectorXd median_prob;
  NetPanel forecast_covs;
};

/// Propagates each draw's latent positions to the next time point and evaluates
/// expected weights and occurrence probabilities on `forecast_covs` (time 0 of
/// that panel, already standardized with the training statistics).
PredictionSet predict_next(const DrawSet& draws, const NetPanel& forecast_covs, const ForecastOptions& options = {});

/// Latent positions of one block at T+1 given its state through T.
Eigen::MatrixXd forecast_block_latents(const LatentBlock& block, const ModelSpec& spec, Rng& rng,
                                       bool marginalize);

/// Z(c, s, location, scale) variate.
double draw_zdist(const ZDistParams& zp, Rng& rng);

/// Posterior means of expected weight and occurrence probability per dyad-time,
/// in DyadData row order over times [0, draws.dims.T).
struct FittedMeans {
  Eigen::VectorXd weight;
  Eigen::VectorXd prob;
};
FittedMeans posterior_fitted_means(const DrawSet& draws, const NetPanel& panel);

/// Mean absolute error on positives plus mean absolute error on negatives; in [0, 2].
double occurrence_error(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted);

double mse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

/// Median of each column (type-7 quantile at 0.5).
Eigen::VectorXd column_medians(const Eigen::MatrixXd& m);

void write_predictions(const PredictionSet& pred, const std::filesystem::path& path);

struct LooRow {
  std::string model;
  int k = 0;
  int d = 0;
  LooResult result;
};
void write_loo(const std::vector<LooRow>& rows, const std::filesystem::path& path);

void write_metrics(const std::vector<std::pair<std::string, double>>& metrics, const std::filesystem::path& path);

}  // namespace hurdlenet
