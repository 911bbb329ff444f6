#include "hurdlenet/eval.hpp"

#include "hurdlenet/csv.hpp"
#include "hurdlenet/dsp_prior.hpp"
#include "hurdlenet/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace hurdlenet {

GpdFit gpd_fit(const std::vector<double>& x) {
  const auto N = static_cast<int>(x.size());
  if (N < 2) throw std::invalid_argument("gpd_fit: need at least two values");
  constexpr double prior = 3.0;
  const int M = 30 + static_cast<int>(std::floor(std::sqrt(static_cast<double>(N))));
  const double xstar = x[static_cast<std::size_t>(std::floor(N / 4.0 + 0.5)) - 1];  // first quartile
  const double xmax = x.back();

  Eigen::VectorXd theta(M), l_theta(M);
  for (int j = 1; j <= M; ++j) {
    const double th = 1.0 / xmax + (1.0 - std::sqrt(M / (j - 0.5))) / prior / xstar;
    double mk = 0.0;
    for (double v : x) mk += std::log1p(-th * v);
    const double k = mk / N;
    theta(j - 1) = th;
    l_theta(j - 1) = N * (std::log(-th / k) - k - 1.0);
  }
  const Eigen::VectorXd w = (l_theta.array() - numeric::log_sum_exp(l_theta)).exp();
  const double theta_hat = theta.dot(w);

  double k = 0.0;
  for (double v : x) k += std::log1p(-theta_hat * v);
  k /= N;
  GpdFit fit;
  fit.sigma = -k / theta_hat;
  // weakly informative prior pulling k toward 0.5
  fit.k = (k * N + 0.5 * 10.0) / (N + 10.0);
  if (std::isnan(fit.k)) fit.k = std::numeric_limits<double>::infinity();
  return fit;
}

double gpd_quantile(double p, double k, double sigma) {
  if (k == 0.0) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

Eigen::VectorXd psis_log_weights(const Eigen::VectorXd& log_ratios, double* k_out) {
  const Eigen::Index S = log_ratios.size();
  if (S < 2) throw std::invalid_argument("psis: need at least two draws");
  if (!log_ratios.allFinite()) throw std::invalid_argument("psis: non-finite log ratio");
  Eigen::VectorXd lw = log_ratios.array() - log_ratios.maxCoeff();
  double khat = 0.0;

  if (lw.minCoeff() == 0.0) {
    // every draw carries the same weight
    if (k_out) *k_out = 0.0;
    return Eigen::VectorXd::Constant(S, -std::log(static_cast<double>(S)));
  }

  const auto tail_len = static_cast<Eigen::Index>(
      std::ceil(std::min(0.2 * static_cast<double>(S), 3.0 * std::sqrt(static_cast<double>(S)))));
  if (tail_len >= 5 && tail_len < S) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(S));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return lw(a) < lw(b); });
    const Eigen::Index first = S - tail_len;
    const double cutoff = lw(order[static_cast<std::size_t>(first - 1)]);
    const double tail_min = lw(order[static_cast<std::size_t>(first)]);
    const double tail_max = lw(order.back());
    if (std::abs(tail_max - tail_min) < std::numeric_limits<double>::epsilon() / 100.0) {
      khat = std::numeric_limits<double>::infinity();
    } else {
      const double exp_cutoff = std::exp(cutoff);
      std::vector<double> x(static_cast<std::size_t>(tail_len));
      for (Eigen::Index r = 0; r < tail_len; ++r) {
        x[static_cast<std::size_t>(r)] = std::exp(lw(order[static_cast<std::size_t>(first + r)])) - exp_cutoff;
      }
      const GpdFit fit = gpd_fit(x);
      khat = fit.k;
      if (std::isfinite(fit.k)) {
        for (Eigen::Index r = 0; r < tail_len; ++r) {
          const double p = (static_cast<double>(r) + 0.5) / static_cast<double>(tail_len);
          lw(order[static_cast<std::size_t>(first + r)]) = std::log(gpd_quantile(p, fit.k, fit.sigma) + exp_cutoff);
        }
      }
    }
  } else {
    khat = std::numeric_limits<double>::infinity();
  }
  // truncate at the largest raw ratio
  lw = lw.cwiseMin(0.0);
  lw.array() -= numeric::log_sum_exp(lw);
  if (k_out) *k_out = khat;
  return lw;
}

LooResult psis_loo(const Eigen::MatrixXd& loglik) {
  if (loglik.rows() < 2 || loglik.cols() < 1) throw std::invalid_argument("psis_loo: empty log-likelihood matrix");
  if (!loglik.allFinite()) throw std::invalid_argument("psis_loo: non-finite log-likelihood entry");
  const Eigen::Index N = loglik.cols();
  LooResult res;
  res.pointwise.resize(N);
  res.pareto_k.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const Eigen::VectorXd ll = loglik.col(i);
    if (ll.maxCoeff() == ll.minCoeff()) {
      res.pointwise(i) = ll(0);
      res.pareto_k(i) = 0.0;
      continue;
    }
    double k = 0.0;
    const Eigen::VectorXd lw = psis_log_weights(-ll, &k);
    res.pointwise(i) = numeric::log_sum_exp(lw + ll);
    res.pareto_k(i) = k;
  }
  res.elpd_loo = res.pointwise.sum();
  res.loo_ic = -2.0 * res.elpd_loo;
  res.n_high_k = static_cast<int>((res.pareto_k.array() > 0.7).count());
  return res;
}

double draw_zdist(const ZDistParams& zp, Rng& rng) {
  // logit of Beta(c, s) as a difference of log-gammas
  std::gamma_distribution<double> g1(zp.c, 1.0), g2(zp.s, 1.0);
  const double u = std::log(g1(rng)) - std::log(g2(rng));
  return zp.location + zp.scale * u;
}

namespace {

double binomial(int d, int j) {
  double r = 1.0;
  for (int m = 1; m <= j; ++m) r = r * (d - j + m) / m;
  return r;
}

}  // namespace

Eigen::MatrixXd forecast_block_latents(const LatentBlock& block, const ModelSpec& spec, Rng& rng, bool marginalize) {
  if (block.eta.size() == 0 || !spec.dynamic_latents()) return block.Z.front();
  const int n = static_cast<int>(block.mu.size());
  const int T = static_cast<int>(block.Z.size());
  const Eigen::MatrixXd h = block.log_volatility();
  const LatentConstraintMap map{n, spec.K};
  Eigen::MatrixXd out = block.Z.back();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    double sd = 0.0;
    if (marginalize) {
      const double level = block.mu0 + block.mu(i);
      const double h_next = level + block.phi(i) * (h(i, T - 1) - level) + draw_zdist(spec.zdist, rng);
      sd = std::exp(0.5 * h_next);
    }
    for (int k = 0; k < map.free_in_row(i); ++k) {
      const bool log_entry = map.is_log_entry(i, k);
      auto series = [&](int t) {
        if (t < 0) return 0.0;  // zero pre-sample values
        const double z = block.Z[static_cast<std::size_t>(t)](i, k);
        return log_entry ? std::log(z) : z;
      };
      double w = marginalize ? sd * normal(rng) : 0.0;
      for (int j = 1; j <= spec.d; ++j) w -= ((j % 2) ? -1.0 : 1.0) * binomial(spec.d, j) * series(T - j);
      out(i, k) = log_entry ? std::exp(w) : w;
    }
  }
  return out;
}

Eigen::VectorXd column_medians(const Eigen::MatrixXd& m) {
  Eigen::VectorXd out(m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    out(c) = quantile(std::vector<double>(m.col(c).data(), m.col(c).data() + m.rows()), 0.5);
  }
  return out;
}

PredictionSet predict_next(const DrawSet& draws, const NetPanel& forecast_covs, const ForecastOptions& options) {
  const int n = draws.dims.n;
  if (forecast_covs.n != n || forecast_covs.p() != draws.dims.p || forecast_covs.T < 1) {
    throw std::invalid_argument("predict_next: forecast covariates do not match the fitted panel");
  }
  PredictionSet pred;
  pred.horizon = draws.dims.T;
  pred.horizon_label =
      forecast_covs.time_labels.empty() ? std::to_string(draws.dims.T + 1) : forecast_covs.time_labels.front();
  pred.node_labels = forecast_covs.node_labels;
  pred.forecast_covs = slice_time(forecast_covs, 0, 1);

  std::vector<Eigen::VectorXd> x;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      pred.source.push_back(i);
      pred.target.push_back(j);
      x.push_back(assemble_covariates(forecast_covs, i, j, 0));
    }
  }
  const auto D = static_cast<Eigen::Index>(x.size());
  const Eigen::Index S = draws.num_draws();
  pred.weight_draws.resize(S, D);
  pred.prob_draws.resize(S, D);
  for (Eigen::Index s = 0; s < S; ++s) {
    ModelParams params = draws.params_at(s);
    Rng rng = substream(options.seed, "forecast", static_cast<std::uint64_t>(s));
    for (auto& block : params.blocks) block.Z = {forecast_block_latents(block, draws.spec, rng, options.marginalize)};
    for (Eigen::Index r = 0; r < D; ++r) {
      const int i = pred.source[static_cast<std::size_t>(r)], j = pred.target[static_cast<std::size_t>(r)];
      pred.weight_draws(s, r) = expected_weight(params, x[static_cast<std::size_t>(r)], i, j, 0);
      pred.prob_draws(s, r) = occurrence_prob(params, x[static_cast<std::size_t>(r)], i, j, 0);
    }
  }
  pred.median_weight = column_medians(pred.weight_draws);
  pred.median_prob = column_medians(pred.prob_draws);
  return pred;
}

FittedMeans posterior_fitted_means(const DrawSet& draws, const NetPanel& panel) {
  if (panel.n != draws.dims.n || panel.p() != draws.dims.p || panel.T < draws.dims.T) {
    throw std::invalid_argument("posterior_fitted_means: panel does not match the fitted dimensions");
  }
  const DyadData data = DyadData::from_panel(panel, 0, draws.dims.T);
  FittedMeans out{Eigen::VectorXd::Zero(data.size()), Eigen::VectorXd::Zero(data.size())};
  const Eigen::Index S = draws.num_draws();
  for (Eigen::Index s = 0; s < S; ++s) {
    const ModelParams params = draws.params_at(s);
    for (Eigen::Index r = 0; r < data.size(); ++r) {
      const Eigen::VectorXd x = data.X.row(r).transpose();
      const auto u = static_cast<std::size_t>(r);
      out.weight(r) += expected_weight(params, x, data.i[u], data.j[u], data.t[u]);
      out.prob(r) += occurrence_prob(params, x, data.i[u], data.j[u], data.t[u]);
    }
  }
  out.weight /= static_cast<double>(S);
  out.prob /= static_cast<double>(S);
  return out;
}

double occurrence_error(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
  if (observed.size() != predicted.size()) throw std::invalid_argument("occurrence_error: length mismatch");
  double pos = 0.0, neg = 0.0;
  Eigen::Index n_pos = 0;
  for (Eigen::Index r = 0; r < observed.size(); ++r) {
    if (observed(r) == 1.0) {
      pos += std::abs(predicted(r) - 1.0);
      ++n_pos;
    } else if (observed(r) == 0.0) {
      neg += std::abs(predicted(r));
    } else {
      throw std::invalid_argument("occurrence_error: observed values must be 0 or 1");
    }
  }
  const Eigen::Index n_neg = observed.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("occurrence_error: need both present and absent dyads");
  }
  return pos / static_cast<double>(n_pos) + neg / static_cast<double>(n_neg);
}

double mse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size() || truth.size() == 0) throw std::invalid_argument("mse: index mismatch");
  return (estimate - truth).squaredNorm() / static_cast<double>(truth.size());
}

void write_predictions(const PredictionSet& pred, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"source", "target", "horizon", "median_expected_weight", "median_occurrence_prob"});
  auto label = [&](int i) {
    return pred.node_labels.empty() ? std::to_string(i + 1) : pred.node_labels[static_cast<std::size_t>(i)];
  };
  for (std::size_t r = 0; r < pred.source.size(); ++r) {
    const auto e = static_cast<Eigen::Index>(r);
    csv::write_row(out, {label(pred.source[r]), label(pred.target[r]), pred.horizon_label,
                         csv::format(pred.median_weight(e)), csv::format(pred.median_prob(e))});
  }
}

void write_loo(const std::vector<LooRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"model", "k", "d", "elpd_loo", "loo_ic", "n_high_pareto_k"});
  for (const auto& r : rows) {
    csv::write_row(out, {r.model, std::to_string(r.k), std::to_string(r.d), csv::format(r.result.elpd_loo),
                         csv::format(r.result.loo_ic), std::to_string(r.result.n_high_k)});
  }
}

void write_metrics(const std::vector<std::pair<std::string, double>>& metrics, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"metric", "value"});
  for (const auto& [name, value] : metrics) csv::write_row(out, {name, csv::format(value)});
}

}  // namespace hurdlenet
