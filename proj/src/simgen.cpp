#include "hurdlenet/simgen.hpp"

#include "hurdlenet/csv.hpp"
#include "hurdlenet/model.hpp"
#include "hurdlenet/numeric.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace hurdlenet {

void SimConfig::validate() const {
  if (n < 2) throw std::invalid_argument("simulation needs at least 2 nodes");
  if (T < 1) throw std::invalid_argument("simulation needs at least 1 time point");
  if (K < 1 || group_mean.size() != K) throw std::invalid_argument("group_mean must have K entries");
  if (!(transition_fraction >= 0.0 && transition_fraction <= 1.0)) {
    throw std::invalid_argument("transition_fraction must lie in [0,1]");
  }
  if (!(jitter_sd >= 0.0)) throw std::invalid_argument("jitter_sd must be non-negative");
  if (p1 < 0) throw std::invalid_argument("p1 must be non-negative");
  if (!(binary_rate >= 0.0 && binary_rate <= 1.0)) throw std::invalid_argument("binary_rate must lie in [0,1]");
  if (beta_c.size() != p() || beta_p.size() != p()) throw std::invalid_argument("beta vectors must have 2*p1+2 entries");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
}

SimLatents simulate_latents(const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  const int n = cfg.n, T = cfg.T;
  // nodes [0, n/2) start in the nonzero-mean group
  const int n_nonzero = n / 2;
  const int n_zero = n - n_nonzero;
  const int n_trans = static_cast<int>(std::lround(cfg.transition_fraction * n_zero));

  SimLatents out;
  out.in_nonzero_group = Eigen::MatrixXi::Zero(n, T);
  for (int i = 0; i < n_nonzero; ++i) out.in_nonzero_group.row(i).setOnes();
  for (int m = 0; m < n_trans; ++m) {
    // 1-based change time spread evenly over 2..T
    const int change = 2 + (m * (T - 1)) / n_trans;
    for (int t = change - 1; t < T; ++t) out.in_nonzero_group(n_nonzero + m, t) = 1;
  }

  std::normal_distribution<double> jitter(0.0, 1.0);
  for (int t = 0; t < T; ++t) {
    Eigen::MatrixXd Z(n, cfg.K);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < cfg.K; ++k) {
        const double mean = out.in_nonzero_group(i, t) ? cfg.group_mean(k) : 0.0;
        Z(i, k) = mean + cfg.jitter_sd * jitter(rng);
      }
    }
    out.Z.push_back(std::move(Z));
  }
  return out;
}

NetPanel simulate_covariates(const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  NetPanel panel = NetPanel::zeros(cfg.n, cfg.T, cfg.p1, 2);
  panel.covariate_names.back() = "pair_binary";
  panel.covariate_kinds.back() = CovariateKind::binary;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution flag(cfg.binary_rate);
  for (int t = 0; t < cfg.T; ++t) {
    for (int i = 0; i < cfg.n; ++i) {
      for (int l = 0; l < cfg.p1; ++l) panel.node_covs[t](i, l) = normal(rng);
    }
    for (int i = 0; i < cfg.n; ++i) {
      for (int j = i + 1; j < cfg.n; ++j) {
        const double c = normal(rng);
        const double b = flag(rng) ? 1.0 : 0.0;
        panel.pair_covs[t].row(i * cfg.n + j) << c, b;
        panel.pair_covs[t].row(j * cfg.n + i) << c, b;
      }
    }
  }
  return panel;
}

SimResult simulate_panel(const SimConfig& cfg, const SimLatents& latents, NetPanel covariates, Rng& rng) {
  cfg.validate();
  const int n = cfg.n, T = cfg.T;
  if (covariates.n != n || covariates.T != T || covariates.p() != cfg.p() ||
      static_cast<int>(latents.Z.size()) != T) {
    throw std::invalid_argument("simulate_panel: inconsistent shapes");
  }
  SimResult res{std::move(covariates), {latents, {}, {}, {}}};
  NetPanel& panel = res.panel;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < T; ++t) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n), P = L, W = L;
    const Eigen::MatrixXd& Z = latents.Z[t];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const Eigen::VectorXd x = assemble_covariates(panel, i, j, t);
        // a node sitting exactly at the origin (jitter_sd = 0) contributes no similarity
        const bool origin = Z.row(i).squaredNorm() == 0.0 || Z.row(j).squaredNorm() == 0.0;
        L(i, j) = origin ? 0.0 : latent_similarity(Z.row(i).transpose(), Z.row(j).transpose(), cfg.alpha);
        P(i, j) = numeric::normal_cdf(cfg.beta_p0 + x.dot(cfg.beta_p) + L(i, j));
        W(i, j) = x.dot(cfg.beta_c) + L(i, j);
        if (unif(rng) < P(i, j)) {
          panel.occurrence[t](i, j) = 1;
          panel.weight[t](i, j) = W(i, j) + cfg.sigma * normal(rng);
        }
      }
    }
    res.truth.similarity.push_back(std::move(L));
    res.truth.occurrence_prob.push_back(std::move(P));
    res.truth.expected_weight.push_back(std::move(W));
  }
  panel.validate();
  return res;
}

SimResult simulate(const SimConfig& cfg) {
  cfg.validate();
  Rng latent_rng = substream(cfg.seed, "latents");
  Rng cov_rng = substream(cfg.seed, "covariates");
  Rng panel_rng = substream(cfg.seed, "panel");
  const SimLatents latents = simulate_latents(cfg, latent_rng);
  return simulate_panel(cfg, latents, simulate_covariates(cfg, cov_rng), panel_rng);
}

Eigen::VectorXd truth_vector(const std::vector<Eigen::MatrixXd>& per_time, int t_begin, int t_end) {
  if (t_begin < 0 || t_end > static_cast<int>(per_time.size()) || t_begin >= t_end) {
    throw std::out_of_range("truth_vector: bad time range");
  }
  const auto n = per_time.front().rows();
  Eigen::VectorXd out((t_end - t_begin) * n * (n - 1));
  Eigen::Index r = 0;
  for (int t = t_begin; t < t_end; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j) out(r++) = per_time[t](i, j);
      }
    }
  }
  return out;
}

void write_truth(const SimConfig& cfg, const SimTruth& truth, const std::filesystem::path& dir) {
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    return out;
  };
  const int n = cfg.n;
  {
    auto out = open("truth_latents.csv");
    csv::write_row(out, {"time", "node", "k", "value", "nonzero_group"});
    for (int t = 0; t < cfg.T; ++t) {
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < cfg.K; ++k) {
          csv::write_row(out, {std::to_string(t + 1), std::to_string(i + 1), std::to_string(k + 1),
                               csv::format(truth.latents.Z[t](i, k)),
                               std::to_string(truth.latents.in_nonzero_group(i, t))});
        }
      }
    }
  }
  {
    auto out = open("truth_dyads.csv");
    csv::write_row(out, {"time", "source", "target", "similarity", "occurrence_prob", "expected_weight"});
    for (int t = 0; t < cfg.T; ++t) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          csv::write_row(out, {std::to_string(t + 1), std::to_string(i + 1), std::to_string(j + 1),
                               csv::format(truth.similarity[t](i, j)), csv::format(truth.occurrence_prob[t](i, j)),
                               csv::format(truth.expected_weight[t](i, j))});
        }
      }
    }
  }
  {
    auto out = open("truth_parameters.csv");
    csv::write_row(out, {"parameter", "value"});
    for (Eigen::Index l = 0; l < cfg.beta_c.size(); ++l) {
      csv::write_row(out, {"betaC." + std::to_string(l + 1), csv::format(cfg.beta_c(l))});
    }
    for (Eigen::Index l = 0; l < cfg.beta_p.size(); ++l) {
      csv::write_row(out, {"betaP." + std::to_string(l + 1), csv::format(cfg.beta_p(l))});
    }
    csv::write_row(out, {"betaP0", csv::format(cfg.beta_p0)});
    csv::write_row(out, {"alpha", csv::format(cfg.alpha)});
    csv::write_row(out, {"sigma2", csv::format(cfg.sigma * cfg.sigma)});
  }
}

SimTruth read_truth(const std::filesystem::path& dir, int n, int T) {
  const auto path = dir / "truth_dyads.csv";
  const auto table = csv::read(path);
  const int ct = table.column("time"), cs = table.column("source"), cg = table.column("target");
  const int cl = table.column("similarity"), cp = table.column("occurrence_prob"), cw = table.column("expected_weight");
  if (ct < 0 || cs < 0 || cg < 0 || cl < 0 || cp < 0 || cw < 0) throw DataError(path.string() + ": missing columns");
  SimTruth truth;
  truth.similarity.assign(T, Eigen::MatrixXd::Zero(n, n));
  truth.occurrence_prob = truth.similarity;
  truth.expected_weight = truth.similarity;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int t = static_cast<int>(csv::to_double(row[ct], path, r + 2)) - 1;
    const int i = static_cast<int>(csv::to_double(row[cs], path, r + 2)) - 1;
    const int j = static_cast<int>(csv::to_double(row[cg], path, r + 2)) - 1;
    if (t < 0 || t >= T || i < 0 || i >= n || j < 0 || j >= n) {
      throw DataError(path.string() + ":" + std::to_string(r + 2) + ": index out of range");
    }
    truth.similarity[t](i, j) = csv::to_double(row[cl], path, r + 2);
    truth.occurrence_prob[t](i, j) = csv::to_double(row[cp], path, r + 2);
    truth.expected_weight[t](i, j) = csv::to_double(row[cw], path, r + 2);
  }
  return truth;
}

}  // namespace hurdlenet
