#pragma once

#include "hurdlenet/dsp_prior.hpp"
#include "hurdlenet/model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace hurdlenet {

struct ModelDims {
  int n = 0;
  int T = 0;
  int p = 0;
};

/**
 * Bijection between ModelParams on the constrained manifold and an
 * unconstrained free vector.
 *
 * Per latent block: free Z entries (t, then i, then k; log scale for the
 * positive entry), or with spec.noncentered the d-th differences of those
 * series divided by exp(h_it / 2); then eta (i-major), mu0, mu, logit(phi), logit(alpha). Then
 * beta_c, beta_p, log sigma2, a, log b, log gamma. The static variant has
 * no eta or phi.
 */
class Parameterization {
 public:
  Parameterization(ModelSpec spec, ModelDims dims);

  Eigen::Index size() const { return size_; }
  const ModelSpec& spec() const { return spec_; }
  const ModelDims& dims() const { return dims_; }
  LatentConstraintMap constraint_map() const { return {dims_.n, spec_.K}; }
  int latent_times() const { return spec_.dynamic_latents() ? dims_.T : 1; }

  Eigen::VectorXd pack(const ModelParams& params) const;
  ModelParams unpack(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

  /// log |det d(params)/d(theta)| over the transformed coordinates. The positive
  /// latent entry carries no term because its prior is stated on the log scale.
  double log_jacobian(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

  /// Free-vector gradient from natural-scale adjoints, including the Jacobian term.
  Eigen::VectorXd chain_gradient(const Eigen::Ref<const Eigen::VectorXd>& theta, const ModelParams& params,
                                 const ModelParams& natural_grad) const;

  std::vector<std::string> free_names() const;

  /// Constrained-scale flattening used for draw files: z, h, eta, mu0, mu, phi,
  /// alpha per block, then betaC, betaP, sigma2, a, b, gamma.
  std::vector<std::string> natural_names() const;
  Eigen::VectorXd flatten(const ModelParams& params) const;
  ModelParams unflatten(const Eigen::Ref<const Eigen::VectorXd>& values) const;

 private:
  std::string block_suffix(int blk) const;
  /// Latent positions of `block` from its free coordinates starting at `start`;
  /// eta, mu0, mu and phi must already be set.
  void fill_latents(const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::Index start, LatentBlock& block) const;

  ModelSpec spec_;
  ModelDims dims_;
  Eigen::Index size_ = 0;
};

}  // namespace hurdlenet
