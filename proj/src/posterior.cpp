#include "hurdlenet/posterior.hpp"

#include "hurdlenet/dsp_prior.hpp"

#include <cmath>
#include <limits>

namespace hurdlenet {

Posterior::Posterior(const NetPanel& panel, const ModelSpec& spec)
    : param_(spec, ModelDims{panel.n, panel.T, panel.p()}), data_(DyadData::from_panel(panel)) {}

void Posterior::set_point_weights(Eigen::VectorXd weights) {
  if (weights.size() != 0 && weights.size() != data_.size()) {
    throw std::invalid_argument("set_point_weights: one weight per dyad-time expected");
  }
  weights_ = std::move(weights);
}

double Posterior::evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::VectorXd* grad) const {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (!theta.allFinite()) return nan;
  const ModelParams params = param_.unpack(theta);
  const ModelDims& dims = param_.dims();
  ModelParams g;
  if (grad) g = ModelParams::zeros(param_.spec(), dims.n, dims.T, dims.p);
  double value = 0.0;
  try {
    value = accumulate_loglik(params, data_, grad ? &g : nullptr, nullptr, weights_.size() ? &weights_ : nullptr);
    value += log_prior(params, param_.spec(), grad ? &g : nullptr);
  } catch (const std::invalid_argument&) {
    // support violation after over/underflow in the transforms
    return nan;
  }
  value += param_.log_jacobian(theta);
  if (grad) *grad = param_.chain_gradient(theta, params, g);
  return value;
}

double Posterior::log_posterior_and_grad(const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::VectorXd& grad) const {
  if (theta.size() != dimension()) {
    throw std::invalid_argument("log_posterior_and_grad: expected " + std::to_string(dimension()) +
                                " coordinates, got " + std::to_string(theta.size()));
  }
  const double value = evaluate(theta, &grad);
  if (!std::isfinite(value)) throw NumericalError("log posterior is not finite");
  for (Eigen::Index k = 0; k < grad.size(); ++k) {
    if (!std::isfinite(grad(k))) {
      throw NumericalError("gradient is not finite at coordinate " + param_.free_names()[k]);
    }
  }
  return value;
}

Eigen::VectorXd Posterior::pointwise_loglik(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  Eigen::VectorXd out;
  accumulate_loglik(param_.unpack(theta), data_, nullptr, &out);
  return out;
}

}  // namespace hurdlenet
