#pragma once

#include "hurdlenet/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace hurdlenet {

/// Log target density; fills `grad` when non-null. May return NaN.
using LogDensity = std::function<double(const Eigen::VectorXd& theta, Eigen::VectorXd* grad)>;

enum class MetricMode { identity, diagonal };

struct HmcConfig {
  int iterations = 4000;  // including burnin
  int burnin = 1000;
  int chains = 4;
  int max_leapfrog = 32;  // leapfrog steps are drawn uniformly from [1, max_leapfrog]
  double initial_step = 0.0;  // 0 selects the step by the doubling heuristic
  double target_accept = 0.8;
  MetricMode metric = MetricMode::diagonal;
  std::uint64_t seed = 1;
  double init_sd = 0.1;
  double divergence_threshold = 1000.0;
  int threads = 0;  // 0: one thread per chain

  void validate() const;
};

/// Position with cached log density and gradient.
struct PhasePoint {
  Eigen::VectorXd theta;
  Eigen::VectorXd grad;
  double log_density = 0.0;
};

PhasePoint make_point(const LogDensity& target, Eigen::VectorXd theta);

/// U(theta) + nu' Omega nu / 2 with Omega the diagonal inverse metric.
double hamiltonian(const PhasePoint& point, const Eigen::VectorXd& momentum, const Eigen::VectorXd& inv_metric);

struct LeapfrogResult {
  PhasePoint point;
  Eigen::VectorXd momentum;
  bool diverged = false;
};

/// `steps` iterations of half kick, drift (theta += step * Omega * nu), half kick.
LeapfrogResult leapfrog(const PhasePoint& start, Eigen::VectorXd momentum, double step, int steps,
                        const Eigen::VectorXd& inv_metric, const LogDensity& target);

struct TransitionInfo {
  bool accepted = false;
  bool diverged = false;
  double accept_prob = 0.0;
  double energy_error = 0.0;  // H(proposal) - H(current)
};

/// One HMC transition: momentum ~ N(0, Omega^{-1}), leapfrog, Metropolis correction.
TransitionInfo hmc_step(PhasePoint& state, double step, int steps, const Eigen::VectorXd& inv_metric,
                        const LogDensity& target, Rng& rng, double divergence_threshold = 1000.0);

/// Nesterov dual averaging of log step size toward a target acceptance rate.
class DualAveraging {
 public:
  DualAveraging(double initial_step, double target_accept);
  void update(double accept_prob);
  double current() const { return std::exp(log_step_); }
  double final() const { return std::exp(log_step_bar_); }

 private:
  double mu_;
  double target_;
  double counter_ = 0.0;
  double s_bar_ = 0.0;
  double log_step_;
  double log_step_bar_ = 0.0;
};

struct ChainResult {
  Eigen::MatrixXd draws;        // (iterations - burnin) x dim
  Eigen::VectorXd log_density;  // per stored draw
  double step_size = 0.0;
  Eigen::VectorXd inv_metric;
  double mean_accept_prob = 0.0;
  int divergences = 0;  // during sampling
  int warmup_divergences = 0;
  std::uint64_t seed = 0;
};

/// Warmup with step-size adaptation (and windowed diagonal metric estimation),
/// then sampling with frozen tuning parameters.
ChainResult run_chain(const LogDensity& target, Eigen::VectorXd init, const HmcConfig& config, Rng& rng);

/// Runs config.chains chains concurrently. Chain c uses substream ("chain", c)
/// of config.seed and starts from N(0, init_sd^2) draws.
std::vector<ChainResult> run_chains(const LogDensity& target, Eigen::Index dim, const HmcConfig& config);

}  // namespace hurdlenet
