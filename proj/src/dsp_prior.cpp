#include "hurdlenet/dsp_prior.hpp"

#include "hurdlenet/numeric.hpp"

#include <cmath>

namespace hurdlenet {

int LatentConstraintMap::free_per_time() const {
  int count = 0;
  for (int i = 0; i < n; ++i) count += free_in_row(i);
  return count;
}

Eigen::VectorXd difference(const Eigen::VectorXd& series, int d) {
  if (d < 0) throw std::invalid_argument("difference: negative order");
  if (d > series.size()) throw std::invalid_argument("difference: order exceeds series length");
  Eigen::VectorXd w = series;
  for (int pass = 0; pass < d; ++pass) {
    for (Eigen::Index t = w.size() - 1; t > 0; --t) w(t) -= w(t - 1);
  }
  return w;
}

Eigen::VectorXd difference_adjoint(const Eigen::VectorXd& adjoint, int d) {
  Eigen::VectorXd g = adjoint;
  for (int pass = 0; pass < d; ++pass) {
    for (Eigen::Index t = 0; t + 1 < g.size(); ++t) g(t) -= g(t + 1);
  }
  return g;
}

Eigen::VectorXd integrate(const Eigen::VectorXd& increments, int d) {
  if (d < 0) throw std::invalid_argument("integrate: negative order");
  Eigen::VectorXd w = increments;
  for (int pass = 0; pass < d; ++pass) {
    for (Eigen::Index t = 1; t < w.size(); ++t) w(t) += w(t - 1);
  }
  return w;
}

Eigen::VectorXd integrate_adjoint(const Eigen::VectorXd& adjoint, int d) {
  Eigen::VectorXd g = adjoint;
  for (int pass = 0; pass < d; ++pass) {
    for (Eigen::Index t = g.size() - 2; t >= 0; --t) g(t) += g(t + 1);
  }
  return g;
}

void log_volatility_adjoint(const LatentBlock& block, const Eigen::MatrixXd& g_h, LatentBlock& grad) {
  const auto n = block.mu.size();
  if (block.eta.size() == 0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      grad.mu0 += g_h(i, 0);
      grad.mu(i) += g_h(i, 0);
    }
    return;
  }
  const Eigen::MatrixXd h = block.log_volatility();
  const Eigen::Index T = block.eta.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double level = block.mu0 + block.mu(i);
    const double phi = block.phi(i);
    double carry = 0.0;  // adjoint of h_{i,t} including downstream dependence
    double g_level = 0.0, g_phi = 0.0;
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      carry = g_h(i, t) + phi * carry;
      grad.eta(i, t) += carry;
      if (t == 0) {
        g_level += carry;
      } else {
        g_level += carry * (1.0 - phi);
        g_phi += carry * (h(i, t - 1) - level);
      }
    }
    grad.mu0 += g_level;
    grad.mu(i) += g_level;
    grad.phi(i) += g_phi;
  }
}

double z_logpdf(double x, const ZDistParams& zp) {
  const double u = (x - zp.location) / zp.scale;
  const double log_beta = std::lgamma(zp.c) + std::lgamma(zp.s) - std::lgamma(zp.c + zp.s);
  return -std::log(zp.scale) - log_beta + zp.c * u - (zp.c + zp.s) * numeric::softplus(u);
}

double z_logpdf_grad(double x, const ZDistParams& zp) {
  const double u = (x - zp.location) / zp.scale;
  return (zp.c - (zp.c + zp.s) * numeric::sigmoid(u)) / zp.scale;
}

namespace {

// Value of the free series (i,k) at latent time t: log scale for the positive entry.
inline double series_value(const LatentBlock& block, int t, int i, int k) {
  const double z = block.Z[t](i, k);
  return i == 0 && k == 0 ? std::log(z) : z;
}

}  // namespace

double dsp_logprior(const LatentBlock& block, const ModelSpec& spec, LatentBlock* grad) {
  const int n = static_cast<int>(block.mu.size());
  const int T = static_cast<int>(block.Z.size());
  const LatentConstraintMap map{n, spec.K};
  for (int t = 0; t < T; ++t) {
    const auto& Z = block.Z[t];
    if (Z.rows() != n || Z.cols() != spec.K) throw std::invalid_argument("dsp_logprior: latent shape mismatch");
    if (!(Z(0, 0) > 0.0)) throw std::invalid_argument("dsp_logprior: constrained entry z_{1t1} must be positive");
    for (int i = 0; i < n; ++i) {
      for (int k = i + 1; k < spec.K; ++k) {
        if (Z(i, k) != spec.epsilon) throw std::invalid_argument("dsp_logprior: fixed latent entry differs from epsilon");
      }
    }
  }

  const Eigen::MatrixXd h = block.log_volatility();
  const bool dynamic = block.eta.size() != 0;
  Eigen::MatrixXd g_h = Eigen::MatrixXd::Zero(h.rows(), h.cols());
  double lp = 0.0;

  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < map.free_in_row(i); ++k) {
      Eigen::VectorXd w(T);
      for (int t = 0; t < T; ++t) w(t) = series_value(block, t, i, k);
      const Eigen::VectorXd omega = dynamic ? difference(w, spec.d) : w;
      Eigen::VectorXd g_omega(T);
      for (int t = 0; t < T; ++t) {
        const double hv = h(i, dynamic ? t : 0);
        const double prec = std::exp(-hv);
        lp += -0.5 * numeric::log_two_pi - 0.5 * hv - 0.5 * omega(t) * omega(t) * prec;
        g_omega(t) = -omega(t) * prec;
        g_h(i, dynamic ? t : 0) += -0.5 + 0.5 * omega(t) * omega(t) * prec;
      }
      if (grad) {
        const Eigen::VectorXd g_w = dynamic ? difference_adjoint(g_omega, spec.d) : g_omega;
        for (int t = 0; t < T; ++t) {
          // chain through the log for the positive entry: d/dz = d/dlog z / z
          grad->Z[t](i, k) += (i == 0 && k == 0) ? g_w(t) / block.Z[t](0, 0) : g_w(t);
        }
      }
    }
  }

  lp += z_logpdf(block.mu0, spec.zdist);
  for (int i = 0; i < n; ++i) lp += z_logpdf(block.mu(i), spec.zdist);
  if (dynamic) {
    for (int i = 0; i < n; ++i) {
      for (Eigen::Index t = 0; t < block.eta.cols(); ++t) lp += z_logpdf(block.eta(i, t), spec.zdist);
      if (!(block.phi(i) > 0.0 && block.phi(i) < 1.0)) {
        throw std::invalid_argument("dsp_logprior: phi outside (0,1)");
      }
    }
  }

  if (grad) {
    grad->mu0 += z_logpdf_grad(block.mu0, spec.zdist);
    for (int i = 0; i < n; ++i) grad->mu(i) += z_logpdf_grad(block.mu(i), spec.zdist);
    if (dynamic) {
      for (int i = 0; i < n; ++i) {
        for (Eigen::Index t = 0; t < block.eta.cols(); ++t) grad->eta(i, t) += z_logpdf_grad(block.eta(i, t), spec.zdist);
      }
    }
    log_volatility_adjoint(block, g_h, *grad);
  }
  return lp;
}

double other_logprior(const ModelParams& params, const ModelSpec& spec, ModelParams* grad) {
  if (!(params.sigma2 > 0.0) || !(params.b > 0.0) || !(params.gamma > 0.0)) {
    throw std::invalid_argument("other_logprior: sigma2, b and gamma must be positive");
  }
  const double s0 = spec.sigma0;
  const double var0 = s0 * s0;
  const double log_norm0 = -0.5 * numeric::log_two_pi - std::log(s0);
  double lp = 0.0;
  const auto p = params.beta_c.size();
  lp += 2.0 * static_cast<double>(p) * log_norm0 - 0.5 * (params.beta_c.squaredNorm() + params.beta_p.squaredNorm()) / var0;
  lp += -std::log(params.sigma2);
  lp += log_norm0 - 0.5 * params.a * params.a / var0;
  lp += std::numbers::ln2 + log_norm0 - 0.5 * params.b * params.b / var0;
  const double sg = spec.gamma_shape, rg = spec.gamma_rate;
  lp += sg * std::log(rg) - std::lgamma(sg) + (sg - 1.0) * std::log(params.gamma) - rg * params.gamma;
  for (const auto& block : params.blocks) {
    if (!(block.alpha >= 0.0 && block.alpha <= 1.0)) throw std::invalid_argument("other_logprior: alpha outside [0,1]");
  }
  if (grad) {
    grad->beta_c -= params.beta_c / var0;
    grad->beta_p -= params.beta_p / var0;
    grad->sigma2 -= 1.0 / params.sigma2;
    grad->a -= params.a / var0;
    grad->b -= params.b / var0;
    grad->gamma += (sg - 1.0) / params.gamma - rg;
  }
  return lp;
}

double log_prior(const ModelParams& params, const ModelSpec& spec, ModelParams* grad) {
  double lp = other_logprior(params, spec, grad);
  for (std::size_t blk = 0; blk < params.blocks.size(); ++blk) {
    lp += dsp_logprior(params.blocks[blk], spec, grad ? &grad->blocks[blk] : nullptr);
  }
  return lp;
}

}  // namespace hurdlenet
