#pragma once

#include "hurdlenet/hmc.hpp"
#include "hurdlenet/model.hpp"
#include "hurdlenet/netpanel.hpp"
#include "hurdlenet/parameterization.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace hurdlenet {

/// Post-burnin draws of one fitted model.
struct DrawSet {
  ModelSpec spec;
  ModelDims dims;
  HmcConfig config;
  std::vector<ChainResult> chains;  // free-vector draws per chain
  Eigen::MatrixXd pointwise;        // S x N log-likelihood, chain-major rows; may be empty
  std::string data_digest;

  Parameterization parameterization() const { return {spec, dims}; }
  Eigen::Index num_draws() const;
  /// All chains stacked in chain order.
  Eigen::MatrixXd free_draws() const;
  ModelParams params_at(Eigen::Index draw) const;
  /// Constrained-scale draws (columns follow Parameterization::natural_names), one matrix per chain.
  std::vector<Eigen::MatrixXd> natural_draws() const;
  double divergence_rate() const;
};

/// Samples the posterior of `spec` given every time point of `panel`.
/// Throws std::runtime_error when every sampling transition of every chain diverged.
DrawSet run(const NetPanel& panel, const ModelSpec& spec, const HmcConfig& config, bool store_pointwise = true);

/// Recomputes the S x N pointwise log-likelihood matrix for `panel`.
Eigen::MatrixXd pointwise_matrix(const DrawSet& draws, const NetPanel& panel);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double rhat = 0.0;
  double ess = 0.0;
};

/// Type-7 (linear interpolation) sample quantile.
double quantile(std::vector<double> values, double prob);

/// Split-chain potential scale reduction factor.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);

/// Multi-chain effective sample size with Geyer's initial monotone sequence.
double effective_sample_size(const std::vector<Eigen::VectorXd>& chains);

std::vector<ParameterSummary> summarize(const std::vector<Eigen::MatrixXd>& chains,
                                        const std::vector<std::string>& names);

/// Summary of the constrained-scale parameters.
std::vector<ParameterSummary> summarize(const DrawSet& draws);

void write_summary(const std::vector<ParameterSummary>& summary, const std::filesystem::path& path);

/// chain_<c>.csv files (1-based) with columns lp__, then the natural parameter names.
void write_draws(const DrawSet& draws, const std::filesystem::path& dir);

/// Reads chain files written by write_draws; the spec, dims and config must be supplied.
DrawSet read_draws(const std::filesystem::path& dir, const ModelSpec& spec, const ModelDims& dims,
                   const HmcConfig& config);

void write_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path, const std::vector<std::string>& header);
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

}  // namespace hurdlenet
