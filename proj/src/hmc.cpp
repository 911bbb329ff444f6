#include "hurdlenet/hmc.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

namespace hurdlenet {

void HmcConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be positive");
  if (burnin < 0 || burnin >= iterations) throw std::invalid_argument("burnin must lie in [0, iterations)");
  if (chains < 1) throw std::invalid_argument("chains must be positive");
  if (max_leapfrog < 1) throw std::invalid_argument("max_leapfrog must be at least 1");
  if (initial_step < 0.0) throw std::invalid_argument("initial_step must be positive (or 0 for automatic)");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw std::invalid_argument("target_accept must lie in (0,1)");
  if (!(init_sd > 0.0)) throw std::invalid_argument("init_sd must be positive");
}

PhasePoint make_point(const LogDensity& target, Eigen::VectorXd theta) {
  PhasePoint p;
  p.theta = std::move(theta);
  p.log_density = target(p.theta, &p.grad);
  return p;
}

double hamiltonian(const PhasePoint& point, const Eigen::VectorXd& momentum, const Eigen::VectorXd& inv_metric) {
  return -point.log_density + 0.5 * (momentum.array().square() * inv_metric.array()).sum();
}

LeapfrogResult leapfrog(const PhasePoint& start, Eigen::VectorXd momentum, double step, int steps,
                        const Eigen::VectorXd& inv_metric, const LogDensity& target) {
  LeapfrogResult out{start, std::move(momentum), false};
  PhasePoint& p = out.point;
  Eigen::VectorXd& nu = out.momentum;
  for (int s = 0; s < steps; ++s) {
    // grad holds d log p / d theta = -dU/dtheta
    nu += 0.5 * step * p.grad;
    p.theta += step * inv_metric.cwiseProduct(nu);
    p.log_density = target(p.theta, &p.grad);
    if (!std::isfinite(p.log_density) || !p.grad.allFinite()) {
      out.diverged = true;
      return out;
    }
    nu += 0.5 * step * p.grad;
  }
  return out;
}

TransitionInfo hmc_step(PhasePoint& state, double step, int steps, const Eigen::VectorXd& inv_metric,
                        const LogDensity& target, Rng& rng, double divergence_threshold) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd momentum(state.theta.size());
  for (Eigen::Index k = 0; k < momentum.size(); ++k) momentum(k) = normal(rng) / std::sqrt(inv_metric(k));
  const double h0 = hamiltonian(state, momentum, inv_metric);

  TransitionInfo info;
  auto proposal = leapfrog(state, std::move(momentum), step, steps, inv_metric, target);
  // the uniform is drawn unconditionally so the stream does not depend on the outcome
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (proposal.diverged) {
    info.diverged = true;
    info.energy_error = std::numeric_limits<double>::infinity();
    return info;
  }
  const double dH = hamiltonian(proposal.point, proposal.momentum, inv_metric) - h0;
  info.energy_error = dH;
  if (!std::isfinite(dH) || std::abs(dH) > divergence_threshold) {
    info.diverged = true;
    return info;
  }
  info.accept_prob = dH <= 0.0 ? 1.0 : std::exp(-dH);
  if (u < info.accept_prob) {
    state = std::move(proposal.point);
    info.accepted = true;
  }
  return info;
}

DualAveraging::DualAveraging(double initial_step, double target_accept)
    : mu_(std::log(10.0 * initial_step)), target_(target_accept), log_step_(std::log(initial_step)) {}

void DualAveraging::update(double accept_prob) {
  constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;
  counter_ += 1.0;
  const double w = 1.0 / (counter_ + t0);
  s_bar_ = (1.0 - w) * s_bar_ + w * (target_ - accept_prob);
  log_step_ = mu_ - std::sqrt(counter_) / gamma * s_bar_;
  const double x_eta = std::pow(counter_, -kappa);
  log_step_bar_ = x_eta * log_step_ + (1.0 - x_eta) * log_step_bar_;
}

namespace {

// Doubles or halves the step until a single leapfrog step crosses acceptance 1/2.
double find_reasonable_step(const PhasePoint& state, double step, const Eigen::VectorXd& inv_metric,
                            const LogDensity& target, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto log_accept = [&](double eps) {
    Eigen::VectorXd momentum(state.theta.size());
    for (Eigen::Index k = 0; k < momentum.size(); ++k) momentum(k) = normal(rng) / std::sqrt(inv_metric(k));
    const double h0 = hamiltonian(state, momentum, inv_metric);
    auto res = leapfrog(state, momentum, eps, 1, inv_metric, target);
    if (res.diverged) return -std::numeric_limits<double>::infinity();
    const double dH = hamiltonian(res.point, res.momentum, inv_metric) - h0;
    return std::isfinite(dH) ? -dH : -std::numeric_limits<double>::infinity();
  };
  double la = log_accept(step);
  const double direction = la > std::log(0.5) ? 1.0 : -1.0;
  for (int iter = 0; iter < 100; ++iter) {
    if (!(direction * la > -direction * std::log(2.0))) break;
    step *= std::pow(2.0, direction);
    if (step < 1e-10 || step > 1e4) break;
    la = log_accept(step);
  }
  return step;
}

// End indices (exclusive) of the metric-estimation windows, Stan-style layout.
std::vector<int> window_ends(int warmup, int& window_start) {
  std::vector<int> ends;
  int init_buffer = 75, term_buffer = 50, base = 25;
  if (warmup < 20) {
    window_start = warmup;
    return ends;
  }
  if (init_buffer + base + term_buffer > warmup) {
    init_buffer = static_cast<int>(0.15 * warmup);
    term_buffer = static_cast<int>(0.1 * warmup);
    base = warmup - init_buffer - term_buffer;
  }
  window_start = init_buffer;
  const int last = warmup - term_buffer;
  int start = init_buffer, size = base;
  while (true) {
    int end = start + size;
    if (end + 2 * size > last) {
      ends.push_back(last);
      break;
    }
    ends.push_back(end);
    start = end;
    size *= 2;
  }
  return ends;
}

}  // namespace

ChainResult run_chain(const LogDensity& target, Eigen::VectorXd init, const HmcConfig& config, Rng& rng) {
  config.validate();
  const Eigen::Index dim = init.size();
  PhasePoint state = make_point(target, std::move(init));
  if (!std::isfinite(state.log_density) || !state.grad.allFinite()) {
    throw std::runtime_error("run_chain: initial point has non-finite log density");
  }
  Eigen::VectorXd inv_metric = Eigen::VectorXd::Ones(dim);
  double step = config.initial_step > 0.0 ? config.initial_step
                                          : find_reasonable_step(state, 1.0, inv_metric, target, rng);
  DualAveraging adapter(step, config.target_accept);

  int window_start = config.burnin;
  const std::vector<int> ends =
      config.metric == MetricMode::diagonal ? window_ends(config.burnin, window_start) : std::vector<int>{};
  std::size_t next_window = 0;
  Eigen::VectorXd w_mean = Eigen::VectorXd::Zero(dim), w_m2 = Eigen::VectorXd::Zero(dim);
  long w_count = 0;

  const int kept = config.iterations - config.burnin;
  ChainResult result;
  result.draws.resize(kept, dim);
  result.log_density.resize(kept);
  std::uniform_int_distribution<int> steps_dist(1, config.max_leapfrog);
  double sampling_step = step;
  double accept_sum = 0.0;

  for (int it = 0; it < config.iterations; ++it) {
    const bool warmup = it < config.burnin;
    const int steps = steps_dist(rng);
    const double eps = warmup ? adapter.current() : sampling_step;
    const TransitionInfo info =
        hmc_step(state, eps, steps, inv_metric, target, rng, config.divergence_threshold);
    if (warmup) {
      if (info.diverged) ++result.warmup_divergences;
      adapter.update(info.accept_prob);
      if (next_window < ends.size() && it >= window_start) {
        ++w_count;
        const Eigen::VectorXd delta = state.theta - w_mean;
        w_mean += delta / static_cast<double>(w_count);
        w_m2 += delta.cwiseProduct(state.theta - w_mean);
        if (it + 1 == ends[next_window]) {
          const double nn = static_cast<double>(w_count);
          if (w_count > 1) {
            const Eigen::VectorXd var = w_m2 / (nn - 1.0);
            inv_metric = (nn / (nn + 5.0)) * var.array() + 1e-3 * (5.0 / (nn + 5.0));
          }
          w_mean.setZero();
          w_m2.setZero();
          w_count = 0;
          ++next_window;
          step = find_reasonable_step(state, adapter.current(), inv_metric, target, rng);
          adapter = DualAveraging(step, config.target_accept);
        }
      }
      if (it + 1 == config.burnin) sampling_step = adapter.final();
    } else {
      const int row = it - config.burnin;
      result.draws.row(row) = state.theta.transpose();
      result.log_density(row) = state.log_density;
      accept_sum += info.accept_prob;
      if (info.diverged) ++result.divergences;
    }
  }
  result.step_size = sampling_step;
  result.inv_metric = inv_metric;
  result.mean_accept_prob = accept_sum / static_cast<double>(kept);
  return result;
}

std::vector<ChainResult> run_chains(const LogDensity& target, Eigen::Index dim, const HmcConfig& config) {
  config.validate();
  std::vector<ChainResult> results(config.chains);
  std::vector<std::exception_ptr> errors(config.chains);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int c = next++; c < config.chains; c = next++) {
      try {
        Rng rng = substream(config.seed, "chain", static_cast<std::uint64_t>(c));
        std::normal_distribution<double> init_dist(0.0, config.init_sd);
        Eigen::VectorXd init(dim);
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
          for (Eigen::Index k = 0; k < dim; ++k) init(k) = init_dist(rng);
          Eigen::VectorXd g;
          const double lp = target(init, &g);
          ok = std::isfinite(lp) && g.allFinite();
        }
        if (!ok) throw std::runtime_error("could not find a finite initial point");
        results[c] = run_chain(target, init, config, rng);
        results[c].seed = substream_seed(config.seed, "chain", static_cast<std::uint64_t>(c));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const int nthreads = config.threads > 0 ? std::min(config.threads, config.chains) : config.chains;
  std::vector<std::thread> pool;
  for (int w = 0; w < nthreads; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace hurdlenet
