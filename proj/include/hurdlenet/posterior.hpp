#pragma once

#include "hurdlenet/model.hpp"
#include "hurdlenet/netpanel.hpp"
#include "hurdlenet/parameterization.hpp"

#include <Eigen/Dense>

namespace hurdlenet {

/// Unnormalized log posterior over the free vector of one model variant,
/// fitted to every time point of `panel`.
class Posterior {
 public:
  Posterior(const NetPanel& panel, const ModelSpec& spec);

  Eigen::Index dimension() const { return param_.size(); }
  const Parameterization& parameterization() const { return param_; }
  const DyadData& data() const { return data_; }
  const ModelSpec& spec() const { return param_.spec(); }

  /// Scales each dyad-time's likelihood contribution; 0 removes a point (used for exact LOO refits).
  void set_point_weights(Eigen::VectorXd weights);

  /// Log posterior and gradient. Returns NaN (never throws) on numerical
  /// breakdown so samplers can treat it as a divergence.
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::VectorXd* grad) const;

  /// Checked variant: throws NumericalError naming the first non-finite coordinate.
  double log_posterior_and_grad(const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::VectorXd& grad) const;

  Eigen::VectorXd pointwise_loglik(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

 private:
  Parameterization param_;
  DyadData data_;
  Eigen::VectorXd weights_;
};

}  // namespace hurdlenet
