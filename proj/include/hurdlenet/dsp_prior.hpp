#pragma once

#include "hurdlenet/model.hpp"

#include <Eigen/Dense>

namespace hurdlenet {

/// Identifiability structure of one latent matrix Z_t (0-based indices).
///
/// Row 0 has a single positive entry (0,0) that is sampled on the log scale;
/// entries with k > i are fixed to epsilon; everything else is free.
struct LatentConstraintMap {
  int n = 0;
  int K = 0;

  bool is_log_entry(int i, int k) const { return i == 0 && k == 0; }
  bool is_fixed(int i, int k) const { return k > i; }
  bool is_free(int i, int k) const { return !is_fixed(i, k); }
  /// Free entries in row i (including the log entry in row 0).
  int free_in_row(int i) const { return std::min(i + 1, K); }
  /// 1 + sum_{i=2..n} min(i, K) in 1-based terms.
  int free_per_time() const;
};

/// d-th order differences with zero pre-sample values.
Eigen::VectorXd difference(const Eigen::VectorXd& series, int d);

/// Transpose of `difference`: maps adjoints of the differences back to the series.
Eigen::VectorXd difference_adjoint(const Eigen::VectorXd& adjoint, int d);

/// Inverse of `difference`: d-fold cumulative sum.
Eigen::VectorXd integrate(const Eigen::VectorXd& increments, int d);

/// Transpose of `integrate`.
Eigen::VectorXd integrate_adjoint(const Eigen::VectorXd& adjoint, int d);

/// Adds d(.)/d(eta, mu0, mu, phi) given adjoints of log_volatility() into `grad`.
void log_volatility_adjoint(const LatentBlock& block, const Eigen::MatrixXd& g_h, LatentBlock& grad);

/// Log density of Z(c, s, location, scale): logit of a Beta(c, s) variate, shifted and scaled.
double z_logpdf(double x, const ZDistParams& zp);

/// d z_logpdf / dx
double z_logpdf_grad(double x, const ZDistParams& zp);

/**
 * Dynamic shrinkage process log prior of one latent block.
 *
 * Gaussian terms on the differenced free latent series (the (0,0) entry on the
 * log scale) with variance exp(h_it) shared across k, Z-distribution terms on
 * eta, mu0 and mu, and the uniform prior on phi. The static variant uses
 * z_ik ~ N(0, exp(mu0 + mu_i)). When `grad` is given, derivatives with respect
 * to z (natural scale), eta, mu0, mu and phi are added into it.
 */
double dsp_logprior(const LatentBlock& block, const ModelSpec& spec, LatentBlock* grad = nullptr);

/// Priors on betas, sigma2 (p proportional to 1/sigma2), alphas, a, b (half-normal) and gamma.
double other_logprior(const ModelParams& params, const ModelSpec& spec, ModelParams* grad = nullptr);

/// Sum of dsp_logprior over all latent blocks and other_logprior.
double log_prior(const ModelParams& params, const ModelSpec& spec, ModelParams* grad = nullptr);

}  // namespace hurdlenet
