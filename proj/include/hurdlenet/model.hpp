#pragma once

#include "hurdlenet/netpanel.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace hurdlenet {

/// Raised when a likelihood or gradient evaluation produces a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Variant {
  dynamic,      // Hurdle-Net(d): one shared latent process with a DSP prior
  static_time,  // time-invariant latent positions
  independent,  // separate latent processes for the weight and occurrence networks
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct ZDistParams {
  double c = 0.5;
  double s = 0.5;
  double location = 0.0;
  double scale = 1.0;
};

struct ModelSpec {
  Variant variant = Variant::dynamic;
  int d = 1;  // differencing order, ignored by the static variant
  int K = 2;
  double sigma0 = 1e5;
  double gamma_shape = 2.0;
  double gamma_rate = 1.0;
  ZDistParams zdist;
  double epsilon = 1e-3;  // value of the fixed upper-triangle latent entries
  // free latent coordinates are the differenced series scaled by exp(-h/2)
  // rather than the latent positions themselves
  bool noncentered = true;

  bool dynamic_latents() const { return variant != Variant::static_time; }
  int latent_blocks() const { return variant == Variant::independent ? 2 : 1; }

  /// Throws std::invalid_argument if the spec cannot describe a panel with n nodes.
  void validate(int n) const;
};

/// Latent positions and shrinkage-process state of one latent network.
struct LatentBlock {
  std::vector<Eigen::MatrixXd> Z;  // one n x K matrix per latent time point (one for static)
  Eigen::MatrixXd eta;             // n x T innovations (empty for static)
  double mu0 = 0.0;
  Eigen::VectorXd mu;
  Eigen::VectorXd phi;  // AR coefficients (empty for static)
  double alpha = 0.5;

  /// h_{it}, rebuilt from eta by the AR(1) recursion (n x 1 for static).
  Eigen::MatrixXd log_volatility() const;
};

struct ModelParams {
  std::vector<LatentBlock> blocks;  // [shared] or [weight, occurrence]
  Eigen::VectorXd beta_c;
  Eigen::VectorXd beta_p;
  double sigma2 = 1.0;
  double a = 0.0;
  double b = 1.0;
  double gamma = 1.0;

  const LatentBlock& weight_block() const { return blocks.front(); }
  const LatentBlock& occurrence_block() const { return blocks.back(); }

  /// Zero-valued parameters shaped for (spec, n, T, p); the fixed upper-triangle
  /// entries are set to epsilon. Also used as a gradient accumulator.
  static ModelParams zeros(const ModelSpec& spec, int n, int T, int p);
};

/// Exporter/importer-normalized inner product similarity.
double latent_similarity(const Eigen::Ref<const Eigen::VectorXd>& zi, const Eigen::Ref<const Eigen::VectorXd>& zj,
                         double alpha);

/// Generalized logistic link (1 + exp(a - b x))^(-1/gamma).
double glink(double x, double a, double b, double gamma);

/// log g and log(1 - g) of the generalized logistic link, both stable in the tails.
struct LogLink {
  double log_g;
  double log_1mg;
};
LogLink log_glink(double x, double a, double b, double gamma);

double expected_weight(const ModelParams& params, const Eigen::VectorXd& x, int i, int j, int t);
double occurrence_prob(const ModelParams& params, const Eigen::VectorXd& x, int i, int j, int t);

/// Flattened view of a panel over a time window: one row per ordered dyad-time,
/// ordered by (t, i, j) with i != j.
struct DyadData {
  int n = 0;
  int t_begin = 0;
  int t_end = 0;
  int p = 0;
  std::vector<int> t;
  std::vector<int> i;
  std::vector<int> j;
  Eigen::VectorXd occurrence;
  Eigen::VectorXd weight;
  Eigen::MatrixXd X;

  static DyadData from_panel(const NetPanel& panel, int t_begin, int t_end);
  static DyadData from_panel(const NetPanel& panel) { return from_panel(panel, 0, panel.T); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(t.size()); }
};

/**
 * Joint hurdle log-likelihood with optional reverse-mode accumulation.
 *
 * `grad`, when given, must be shaped like `params` and receives d loglik / d param
 * added to its current contents (z entries, alpha, betas, sigma2, a, b, gamma).
 * `pointwise`, when given, is resized and filled with the unweighted per-row terms.
 * `row_weights`, when given, scales each row's contribution to the total and gradient.
 */
double accumulate_loglik(const ModelParams& params, const DyadData& data, ModelParams* grad,
                         Eigen::VectorXd* pointwise = nullptr, const Eigen::VectorXd* row_weights = nullptr);

/// Sum of the hurdle log-likelihood over times [t_begin, t_end); latent time index equals panel time.
double loglik_joint(const ModelParams& params, const NetPanel& panel, int t_begin, int t_end);
double loglik_joint(const ModelParams& params, const NetPanel& panel);

/// Per dyad-time terms in DyadData row order.
Eigen::VectorXd pointwise_loglik(const ModelParams& params, const NetPanel& panel);

}  // namespace hurdlenet
