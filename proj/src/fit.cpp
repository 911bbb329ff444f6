#include "hurdlenet/fit.hpp"

#include "hurdlenet/csv.hpp"
#include "hurdlenet/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace hurdlenet {

Eigen::Index DrawSet::num_draws() const {
  Eigen::Index s = 0;
  for (const auto& c : chains) s += c.draws.rows();
  return s;
}

Eigen::MatrixXd DrawSet::free_draws() const {
  if (chains.empty()) return {};
  Eigen::MatrixXd out(num_draws(), chains.front().draws.cols());
  Eigen::Index row = 0;
  for (const auto& c : chains) {
    out.middleRows(row, c.draws.rows()) = c.draws;
    row += c.draws.rows();
  }
  return out;
}

ModelParams DrawSet::params_at(Eigen::Index draw) const {
  for (const auto& c : chains) {
    if (draw < c.draws.rows()) return parameterization().unpack(c.draws.row(draw).transpose());
    draw -= c.draws.rows();
  }
  throw std::out_of_range("DrawSet::params_at: draw index out of range");
}

std::vector<Eigen::MatrixXd> DrawSet::natural_draws() const {
  const auto param = parameterization();
  std::vector<Eigen::MatrixXd> out;
  for (const auto& c : chains) {
    Eigen::MatrixXd m(c.draws.rows(), static_cast<Eigen::Index>(param.natural_names().size()));
    for (Eigen::Index s = 0; s < c.draws.rows(); ++s) {
      m.row(s) = param.flatten(param.unpack(c.draws.row(s).transpose())).transpose();
    }
    out.push_back(std::move(m));
  }
  return out;
}

double DrawSet::divergence_rate() const {
  const Eigen::Index s = num_draws();
  if (s == 0) return 0.0;
  double div = 0.0;
  for (const auto& c : chains) div += c.divergences;
  return div / static_cast<double>(s);
}

DrawSet run(const NetPanel& panel, const ModelSpec& spec, const HmcConfig& config, bool store_pointwise) {
  const Posterior post(panel, spec);
  DrawSet draws;
  draws.spec = spec;
  draws.dims = post.parameterization().dims();
  draws.config = config;
  const LogDensity target = [&post](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    return post.evaluate(theta, grad);
  };
  draws.chains = run_chains(target, post.dimension(), config);
  const bool all_diverged = std::all_of(draws.chains.begin(), draws.chains.end(),
                                        [](const ChainResult& c) { return c.divergences == c.draws.rows(); });
  if (all_diverged) throw std::runtime_error("every sampling transition diverged in every chain");
  if (store_pointwise) draws.pointwise = pointwise_matrix(draws, panel);
  return draws;
}

Eigen::MatrixXd pointwise_matrix(const DrawSet& draws, const NetPanel& panel) {
  const Posterior post(panel, draws.spec);
  if (post.dimension() != draws.parameterization().size()) {
    throw std::invalid_argument("pointwise_matrix: panel does not match the fitted dimensions");
  }
  Eigen::MatrixXd out(draws.num_draws(), post.data().size());
  Eigen::Index row = 0;
  for (const auto& c : draws.chains) {
    for (Eigen::Index s = 0; s < c.draws.rows(); ++s) {
      out.row(row++) = post.pointwise_loglik(c.draws.row(s).transpose()).transpose();
    }
  }
  return out;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

double mean_of(const Eigen::VectorXd& v) { return v.mean(); }

double sample_var(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

// Between/within based PSRF on equal-length chains.
double rhat_of(const std::vector<Eigen::VectorXd>& chains) {
  const double m = static_cast<double>(chains.size());
  const double n = static_cast<double>(chains.front().size());
  Eigen::VectorXd means(chains.size()), vars(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    means(c) = mean_of(chains[c]);
    vars(c) = sample_var(chains[c]);
  }
  const double W = vars.mean();
  const double B = m > 1 ? n * sample_var(means) : 0.0;
  if (W == 0.0) return B == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

}  // namespace

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.empty()) throw std::invalid_argument("split_rhat: no chains");
  Eigen::Index n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  const Eigen::Index half = n / 2;
  if (half < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<Eigen::VectorXd> split;
  for (const auto& c : chains) {
    split.emplace_back(c.head(half));
    split.emplace_back(c.segment(n - half, half));
  }
  return rhat_of(split);
}

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.empty()) throw std::invalid_argument("effective_sample_size: no chains");
  Eigen::Index n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  const double m = static_cast<double>(chains.size());
  if (n < 4) return std::numeric_limits<double>::quiet_NaN();

  std::vector<Eigen::VectorXd> centered;
  Eigen::VectorXd means(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const Eigen::VectorXd x = chains[c].head(n);
    means(c) = x.mean();
    centered.emplace_back(x.array() - means(c));
  }
  auto acov_mean = [&](Eigen::Index lag) {
    double total = 0.0;
    for (const auto& x : centered) total += x.head(n - lag).dot(x.tail(n - lag)) / static_cast<double>(n);
    return total / m;
  };
  const double nn = static_cast<double>(n);
  const double mean_var = acov_mean(0) * nn / (nn - 1.0);
  double var_plus = mean_var * (nn - 1.0) / nn;
  if (chains.size() > 1) var_plus += sample_var(means);
  if (!(var_plus > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  std::vector<double> rho(static_cast<std::size_t>(n) + 2, 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mean_var - acov_mean(1)) / var_plus;
  rho[1] = rho_odd;
  Eigen::Index t = 0;
  while (t < n - 5 && rho_even + rho_odd > 0.0) {
    t += 2;
    rho_even = 1.0 - (mean_var - acov_mean(t)) / var_plus;
    rho_odd = 1.0 - (mean_var - acov_mean(t + 1)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[t] = rho_even;
      rho[t + 1] = rho_odd;
    }
  }
  const Eigen::Index max_t = t;
  if (rho_even > 0.0) rho[max_t] = rho_even;
  // initial monotone sequence
  for (Eigen::Index k = 1; k <= max_t - 2; k += 2) {
    if (rho[k + 1] + rho[k + 2] > rho[k - 1] + rho[k]) {
      rho[k + 1] = (rho[k - 1] + rho[k]) / 2.0;
      rho[k + 2] = rho[k + 1];
    }
  }
  double tau = -1.0 + rho[max_t];
  for (Eigen::Index k = 0; k < max_t; ++k) tau += 2.0 * rho[k];
  tau = std::max(tau, 1.0 / std::log10(m * nn));
  return m * nn / tau;
}

std::vector<ParameterSummary> summarize(const std::vector<Eigen::MatrixXd>& chains,
                                        const std::vector<std::string>& names) {
  if (chains.empty() || chains.front().rows() == 0) throw std::invalid_argument("summarize: empty draw set");
  const Eigen::Index cols = chains.front().cols();
  if (static_cast<Eigen::Index>(names.size()) != cols) throw std::invalid_argument("summarize: name count mismatch");
  std::vector<ParameterSummary> out;
  out.reserve(cols);
  for (Eigen::Index k = 0; k < cols; ++k) {
    std::vector<Eigen::VectorXd> per_chain;
    std::vector<double> all;
    for (const auto& c : chains) {
      per_chain.emplace_back(c.col(k));
      all.insert(all.end(), c.col(k).data(), c.col(k).data() + c.rows());
    }
    const Eigen::Map<const Eigen::VectorXd> v(all.data(), static_cast<Eigen::Index>(all.size()));
    ParameterSummary s;
    s.name = names[k];
    s.mean = v.mean();
    s.sd = std::sqrt(sample_var(v));
    s.median = quantile(all, 0.5);
    s.q025 = quantile(all, 0.025);
    s.q975 = quantile(all, 0.975);
    s.rhat = split_rhat(per_chain);
    s.ess = s.sd > 0.0 ? effective_sample_size(per_chain) : std::numeric_limits<double>::quiet_NaN();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ParameterSummary> summarize(const DrawSet& draws) {
  return summarize(draws.natural_draws(), draws.parameterization().natural_names());
}

void write_summary(const std::vector<ParameterSummary>& summary, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"parameter", "mean", "median", "sd", "q2.5", "q97.5", "rhat", "ess"});
  for (const auto& s : summary) {
    csv::write_row(out, {s.name, csv::format(s.mean), csv::format(s.median), csv::format(s.sd), csv::format(s.q025),
                         csv::format(s.q975), csv::format(s.rhat), csv::format(s.ess)});
  }
}

void write_draws(const DrawSet& draws, const std::filesystem::path& dir) {
  const auto param = draws.parameterization();
  std::vector<std::string> header{"lp__"};
  const auto names = param.natural_names();
  header.insert(header.end(), names.begin(), names.end());
  const auto natural = draws.natural_draws();
  for (std::size_t c = 0; c < draws.chains.size(); ++c) {
    Eigen::MatrixXd m(natural[c].rows(), natural[c].cols() + 1);
    m.col(0) = draws.chains[c].log_density;
    m.rightCols(natural[c].cols()) = natural[c];
    write_matrix(m, dir / ("chain_" + std::to_string(c + 1) + ".csv"), header);
  }
}

DrawSet read_draws(const std::filesystem::path& dir, const ModelSpec& spec, const ModelDims& dims,
                   const HmcConfig& config) {
  DrawSet draws;
  draws.spec = spec;
  draws.dims = dims;
  draws.config = config;
  const auto param = draws.parameterization();
  const auto names = param.natural_names();
  for (int c = 0; c < config.chains; ++c) {
    const auto path = dir / ("chain_" + std::to_string(c + 1) + ".csv");
    const auto table = csv::read(path);
    if (table.header.size() != names.size() + 1 || !std::equal(names.begin(), names.end(), table.header.begin() + 1)) {
      throw DataError(path.string() + ": header does not match the model's parameter names");
    }
    ChainResult chain;
    chain.draws.resize(static_cast<Eigen::Index>(table.rows.size()), param.size());
    chain.log_density.resize(static_cast<Eigen::Index>(table.rows.size()));
    Eigen::VectorXd natural(static_cast<Eigen::Index>(names.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      chain.log_density(static_cast<Eigen::Index>(r)) = csv::to_double(table.rows[r][0], path, r + 2);
      for (std::size_t k = 0; k < names.size(); ++k) {
        natural(static_cast<Eigen::Index>(k)) = csv::to_double(table.rows[r][k + 1], path, r + 2);
      }
      chain.draws.row(static_cast<Eigen::Index>(r)) = param.pack(param.unflatten(natural)).transpose();
    }
    draws.chains.push_back(std::move(chain));
  }
  return draws;
}

void write_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path, const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  if (!header.empty()) csv::write_row(out, header);
  std::string line;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) line += ',';
      line += csv::format(m(r, c));
    }
    line += '\n';
    out << line;
  }
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = csv::to_double(table.rows[r][c], path, r + 2);
    }
  }
  return m;
}

}  // namespace hurdlenet
