#include "hurdlenet/model.hpp"

#include "hurdlenet/numeric.hpp"

#include <cmath>

namespace hurdlenet {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::dynamic: return "dynamic";
    case Variant::static_time: return "static";
    case Variant::independent: return "independent";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& name) {
  if (name == "dynamic") return Variant::dynamic;
  if (name == "static") return Variant::static_time;
  if (name == "independent") return Variant::independent;
  throw std::invalid_argument("unknown model variant '" + name + "'");
}

void ModelSpec::validate(int n) const {
  if (K < 1) throw std::invalid_argument("latent dimension K must be at least 1");
  if (K > n) {
    throw std::invalid_argument("latent dimension K=" + std::to_string(K) + " exceeds node count n=" +
                                std::to_string(n));
  }
  if (d < 0) throw std::invalid_argument("differencing order d must be non-negative");
  if (!(sigma0 > 0.0)) throw std::invalid_argument("sigma0 must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(gamma_shape > 0.0) || !(gamma_rate > 0.0)) throw std::invalid_argument("gamma prior must be positive");
  if (!(zdist.c > 0.0) || !(zdist.s > 0.0) || !(zdist.scale > 0.0)) {
    throw std::invalid_argument("Z-distribution parameters must be positive");
  }
}

Eigen::MatrixXd LatentBlock::log_volatility() const {
  const auto n = mu.size();
  if (eta.size() == 0) return (mu.array() + mu0).matrix();
  const auto T = eta.cols();
  Eigen::MatrixXd h(n, T);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double level = mu0 + mu(i);
    h(i, 0) = level + eta(i, 0);
    for (Eigen::Index t = 1; t < T; ++t) h(i, t) = level + phi(i) * (h(i, t - 1) - level) + eta(i, t);
  }
  return h;
}

ModelParams ModelParams::zeros(const ModelSpec& spec, int n, int T, int p) {
  ModelParams params;
  const int latent_T = spec.dynamic_latents() ? T : 1;
  for (int blk = 0; blk < spec.latent_blocks(); ++blk) {
    LatentBlock block;
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, spec.K);
    for (int i = 0; i < n; ++i) {
      for (int k = i + 1; k < spec.K; ++k) z(i, k) = spec.epsilon;
    }
    block.Z.assign(latent_T, z);
    if (spec.dynamic_latents()) {
      block.eta = Eigen::MatrixXd::Zero(n, T);
      block.phi = Eigen::VectorXd::Zero(n);
    }
    block.mu = Eigen::VectorXd::Zero(n);
    block.alpha = 0.0;
    params.blocks.push_back(std::move(block));
  }
  params.beta_c = Eigen::VectorXd::Zero(p);
  params.beta_p = Eigen::VectorXd::Zero(p);
  params.sigma2 = 0.0;
  params.a = 0.0;
  params.b = 0.0;
  params.gamma = 0.0;
  return params;
}

double latent_similarity(const Eigen::Ref<const Eigen::VectorXd>& zi, const Eigen::Ref<const Eigen::VectorXd>& zj,
                         double alpha) {
  const double ni = zi.norm();
  const double nj = zj.norm();
  if (ni == 0.0 || nj == 0.0) throw std::domain_error("latent_similarity: zero-norm latent position");
  const double inner = zi.dot(zj);
  return alpha * inner / nj + (1.0 - alpha) * inner / ni;
}

LogLink log_glink(double x, double a, double b, double gamma) {
  const double v = a - b * x;
  const double sp = numeric::softplus(v);
  const double log_g = -sp / gamma;
  // g -> 1 deep in the lower tail of v, where e^v underflows
  const double log_1mg = v < -700.0 ? v - std::log(gamma) : numeric::log1mexp(log_g);
  return {log_g, log_1mg};
}

double glink(double x, double a, double b, double gamma) { return std::exp(log_glink(x, a, b, gamma).log_g); }

namespace {

double block_similarity(const LatentBlock& block, int i, int j, int t) {
  const auto& Z = block.Z.size() == 1 ? block.Z.front() : block.Z.at(t);
  return latent_similarity(Z.row(i).transpose(), Z.row(j).transpose(), block.alpha);
}

}  // namespace

double expected_weight(const ModelParams& params, const Eigen::VectorXd& x, int i, int j, int t) {
  return x.dot(params.beta_c) + block_similarity(params.weight_block(), i, j, t);
}

double occurrence_prob(const ModelParams& params, const Eigen::VectorXd& x, int i, int j, int t) {
  const double m = x.dot(params.beta_p) + block_similarity(params.occurrence_block(), i, j, t);
  return glink(m, params.a, params.b, params.gamma);
}

DyadData DyadData::from_panel(const NetPanel& panel, int t_begin, int t_end) {
  if (t_begin < 0 || t_end > panel.T || t_begin >= t_end) throw std::out_of_range("DyadData: bad time range");
  DyadData data;
  data.n = panel.n;
  data.t_begin = t_begin;
  data.t_end = t_end;
  data.p = panel.p();
  const Eigen::Index rows = static_cast<Eigen::Index>(t_end - t_begin) * panel.n * (panel.n - 1);
  data.occurrence.resize(rows);
  data.weight.resize(rows);
  data.X.resize(rows, data.p);
  Eigen::Index r = 0;
  for (int t = t_begin; t < t_end; ++t) {
    for (int i = 0; i < panel.n; ++i) {
      for (int j = 0; j < panel.n; ++j) {
        if (i == j) continue;
        data.t.push_back(t);
        data.i.push_back(i);
        data.j.push_back(j);
        data.occurrence(r) = panel.occurrence[t](i, j);
        data.weight(r) = panel.weight[t](i, j);
        data.X.row(r) = assemble_covariates(panel, i, j, t).transpose();
        ++r;
      }
    }
  }
  return data;
}

namespace {

// Similarity and its partial derivatives for one dyad, given cached norms.
struct SimilarityTerms {
  double value;
  double inner;
  double ni;
  double nj;
};

inline SimilarityTerms similarity_terms(const Eigen::MatrixXd& Z, const Eigen::VectorXd& norms, int i, int j,
                                        double alpha) {
  const double inner = Z.row(i).dot(Z.row(j));
  const double ni = norms(i);
  const double nj = norms(j);
  return {alpha * inner / nj + (1.0 - alpha) * inner / ni, inner, ni, nj};
}

// Adds upstream * dL/d(z_i, z_j, alpha) into the gradient block.
inline void backprop_similarity(const Eigen::MatrixXd& Z, const SimilarityTerms& s, int i, int j, double alpha,
                                 double upstream, Eigen::MatrixXd& gZ, double& g_alpha) {
  const double coef = alpha / s.nj + (1.0 - alpha) / s.ni;
  const double ci = -upstream * s.inner * (1.0 - alpha) / (s.ni * s.ni * s.ni);
  const double cj = -upstream * s.inner * alpha / (s.nj * s.nj * s.nj);
  gZ.row(i) += upstream * coef * Z.row(j) + ci * Z.row(i);
  gZ.row(j) += upstream * coef * Z.row(i) + cj * Z.row(j);
  g_alpha += upstream * s.inner * (1.0 / s.nj - 1.0 / s.ni);
}

std::vector<Eigen::VectorXd> row_norms(const LatentBlock& block) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(block.Z.size());
  for (const auto& Z : block.Z) out.push_back(Z.rowwise().norm());
  return out;
}

}  // namespace

double accumulate_loglik(const ModelParams& params, const DyadData& data, ModelParams* grad,
                         Eigen::VectorXd* pointwise, const Eigen::VectorXd* row_weights) {
  const bool joint = params.blocks.size() == 1;
  const LatentBlock& bc = params.weight_block();
  const LatentBlock& bp = params.occurrence_block();
  const bool is_static = bc.Z.size() == 1;
  if (!is_static && static_cast<int>(bc.Z.size()) < data.t_end) {
    throw std::invalid_argument("loglik: latent trajectory shorter than data window");
  }
  const auto norms_c = row_norms(bc);
  const auto norms_p = joint ? std::vector<Eigen::VectorXd>{} : row_norms(bp);

  const Eigen::VectorXd lin_c = data.X * params.beta_c;
  const Eigen::VectorXd lin_p = data.X * params.beta_p;
  const double a = params.a, b = params.b, gamma = params.gamma, sigma2 = params.sigma2;
  const double log_norm_c = -0.5 * (numeric::log_two_pi + std::log(sigma2));

  const Eigen::Index N = data.size();
  if (pointwise) pointwise->resize(N);
  Eigen::VectorXd g_mc, g_mp;
  double g_a = 0.0, g_b = 0.0, g_gamma = 0.0, g_sigma2 = 0.0;
  if (grad) {
    g_mc = Eigen::VectorXd::Zero(N);
    g_mp = Eigen::VectorXd::Zero(N);
  }

  double total = 0.0;
  for (Eigen::Index r = 0; r < N; ++r) {
    const int t = data.t[r], i = data.i[r], j = data.j[r];
    const int tz = is_static ? 0 : t;
    const auto sc = similarity_terms(bc.Z[tz], norms_c[tz], i, j, bc.alpha);
    const auto sp_terms = joint ? sc : similarity_terms(bp.Z[tz], norms_p[tz], i, j, bp.alpha);
    const double m_c = lin_c(r) + sc.value;
    const double m_p = lin_p(r) + sp_terms.value;
    const bool present = data.occurrence(r) != 0.0;

    const double v = a - b * m_p;
    const double sp = numeric::softplus(v);
    const double log_g = -sp / gamma;
    const double log_1mg = v < -700.0 ? v - std::log(gamma) : numeric::log1mexp(log_g);
    double term = present ? log_g : log_1mg;
    double resid = 0.0;
    if (present) {
      resid = data.weight(r) - m_c;
      term += log_norm_c - 0.5 * resid * resid / sigma2;
    }
    if (pointwise) (*pointwise)(r) = term;
    const double w = row_weights ? (*row_weights)(r) : 1.0;
    total += w * term;

    if (grad && w != 0.0) {
      // d term / d log_g is 1 for present edges and -g/(1-g) otherwise
      double dv;
      if (!present && v < -700.0) {
        dv = 1.0;
        g_gamma -= w / gamma;
      } else {
        const double dlg = present ? 1.0 : -std::exp(log_g - log_1mg);
        dv = -dlg * numeric::sigmoid(v) / gamma;
        g_gamma += w * dlg * sp / (gamma * gamma);
      }
      g_a += w * dv;
      g_b -= w * dv * m_p;
      g_mp(r) = -w * dv * b;
      if (present) {
        g_mc(r) = w * resid / sigma2;
        g_sigma2 += w * (-0.5 / sigma2 + 0.5 * resid * resid / (sigma2 * sigma2));
      }
    }
  }

  if (grad) {
    grad->beta_c += data.X.transpose() * g_mc;
    grad->beta_p += data.X.transpose() * g_mp;
    grad->a += g_a;
    grad->b += g_b;
    grad->gamma += g_gamma;
    grad->sigma2 += g_sigma2;
    LatentBlock& gc = grad->blocks.front();
    LatentBlock& gp = grad->blocks.back();
    for (Eigen::Index r = 0; r < N; ++r) {
      const int t = data.t[r], i = data.i[r], j = data.j[r];
      const int tz = is_static ? 0 : t;
      if (joint) {
        const double up = g_mc(r) + g_mp(r);
        if (up == 0.0) continue;
        const auto s = similarity_terms(bc.Z[tz], norms_c[tz], i, j, bc.alpha);
        backprop_similarity(bc.Z[tz], s, i, j, bc.alpha, up, gc.Z[tz], gc.alpha);
      } else {
        if (g_mc(r) != 0.0) {
          const auto s = similarity_terms(bc.Z[tz], norms_c[tz], i, j, bc.alpha);
          backprop_similarity(bc.Z[tz], s, i, j, bc.alpha, g_mc(r), gc.Z[tz], gc.alpha);
        }
        if (g_mp(r) != 0.0) {
          const auto s = similarity_terms(bp.Z[tz], norms_p[tz], i, j, bp.alpha);
          backprop_similarity(bp.Z[tz], s, i, j, bp.alpha, g_mp(r), gp.Z[tz], gp.alpha);
        }
      }
    }
  }
  return total;
}

double loglik_joint(const ModelParams& params, const NetPanel& panel, int t_begin, int t_end) {
  const double value = accumulate_loglik(params, DyadData::from_panel(panel, t_begin, t_end), nullptr);
  if (!std::isfinite(value)) throw NumericalError("loglik_joint: non-finite log-likelihood");
  return value;
}

double loglik_joint(const ModelParams& params, const NetPanel& panel) {
  return loglik_joint(params, panel, 0, panel.T);
}

Eigen::VectorXd pointwise_loglik(const ModelParams& params, const NetPanel& panel) {
  Eigen::VectorXd out;
  accumulate_loglik(params, DyadData::from_panel(panel), nullptr, &out);
  if (!out.allFinite()) throw NumericalError("pointwise_loglik: non-finite term");
  return out;
}

}  // namespace hurdlenet
