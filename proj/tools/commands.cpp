#include "commands.hpp"

#include "manifest.hpp"

#include "hurdlenet/csv.hpp"
#include "hurdlenet/eval.hpp"
#include "hurdlenet/fit.hpp"
#include "hurdlenet/netpanel.hpp"
#include "hurdlenet/rng.hpp"
#include "hurdlenet/simgen.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>

#ifndef HURDLENET_VERSION
#define HURDLENET_VERSION "0.0.0"
#endif

namespace hurdlenet::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::string abs_path(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

// Creates `dir` and checks that a file can be written into it.
void prepare_output(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

void record_panel_inputs(Manifest& manifest, const fs::path& data) {
  const auto files = PanelFiles::in_directory(data);
  for (const auto& p : {files.edges, files.node_covariates, files.pair_covariates, files.covariate_kinds}) {
    if (fs::is_regular_file(p)) manifest.input(p);
  }
}

// ---- simulate -------------------------------------------------------------

struct SimulateOptions {
  int n = 10;
  int T = 11;
  std::uint64_t seed = 1;
  double transition_fraction = 0.8;
  double jitter_sd = 0.1;
  fs::path out;
};

void run_simulate(const SimulateOptions& o) {
  Manifest manifest("simulate");
  SimConfig cfg;
  cfg.n = o.n;
  cfg.T = o.T;
  cfg.seed = o.seed;
  cfg.transition_fraction = o.transition_fraction;
  cfg.jitter_sd = o.jitter_sd;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  prepare_output(o.out);
  const SimResult sim = simulate(cfg);
  write_panel(sim.panel, PanelFiles::in_directory(o.out));
  write_truth(cfg, sim.truth, o.out);

  const double rate = static_cast<double>(sim.panel.edge_count()) / (static_cast<double>(cfg.n) * (cfg.n - 1) * cfg.T);
  spdlog::info("simulated n={} T={} seed={}: occurrence rate {:.3f}", cfg.n, cfg.T, cfg.seed, rate);

  manifest.config("n", std::to_string(cfg.n));
  manifest.config("t", std::to_string(cfg.T));
  manifest.config("k", std::to_string(cfg.K));
  manifest.config("transition_fraction", csv::format(cfg.transition_fraction));
  manifest.config("jitter_sd", csv::format(cfg.jitter_sd));
  manifest.config("p1", std::to_string(cfg.p1));
  manifest.config("binary_rate", csv::format(cfg.binary_rate));
  manifest.config("alpha", csv::format(cfg.alpha));
  manifest.config("sigma", csv::format(cfg.sigma));
  manifest.config("beta_p0", csv::format(cfg.beta_p0));
  manifest.seed("run", cfg.seed);
  for (const char* role : {"latents", "covariates", "panel"}) manifest.seed(role, substream_seed(cfg.seed, role));
  manifest.result("occurrence_rate", csv::format(rate));
  manifest.write(o.out);
}

// ---- fit ------------------------------------------------------------------

struct FitOptions {
  std::string model = "hurdle1";
  int k = 2;
  int d = -1;  // -1: implied by the model name
  int iterations = 4000;
  int burnin = 1000;
  int chains = 4;
  std::uint64_t seed = 1;
  int train_end = 0;  // 0: every time point
  int threads = 0;
  int max_leapfrog = 32;
  bool no_standardize = false;
  bool no_loglik = false;
  bool centered = false;
  fs::path data;
};

void add_fit_flags(CLI::App* cmd, FitOptions& o) {
  cmd->add_option("--model", o.model, "hurdle1, hurdle0, static or independent")
      ->check(CLI::IsMember({"hurdle1", "hurdle0", "static", "independent"}))
      ->capture_default_str();
  cmd->add_option("--d", o.d, "differencing order; fixed by name for hurdle1/hurdle0")->check(CLI::NonNegativeNumber);
  cmd->add_option("--iters", o.iterations, "MCMC iterations including burn-in")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--burnin", o.burnin, "burn-in iterations")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd->add_option("--chains", o.chains, "number of chains")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--seed", o.seed, "run seed")->capture_default_str();
  cmd->add_option("--train-end", o.train_end, "number of leading time points to fit (default: all)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-leapfrog", o.max_leapfrog, "upper end of the uniform leapfrog step count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--threads", o.threads, "worker threads (0: one per chain)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--data", o.data, "panel directory (edges.csv, node_covariates.csv, pair_covariates.csv)");
  cmd->add_flag("--no-standardize", o.no_standardize, "use continuous covariates on their raw scale");
  cmd->add_flag("--no-loglik", o.no_loglik, "do not store the pointwise log-likelihood matrix");
  cmd->add_flag("--centered", o.centered, "sample latent positions directly instead of scaled increments");
}

ModelSpec model_spec(const FitOptions& o, int k) {
  ModelSpec spec;
  spec.K = k;
  spec.noncentered = !o.centered;
  if (o.model == "hurdle1" || o.model == "hurdle0") {
    const int implied = o.model == "hurdle1" ? 1 : 0;
    if (o.d >= 0 && o.d != implied) {
      throw UsageError("--d " + std::to_string(o.d) + " conflicts with --model " + o.model);
    }
    spec.variant = Variant::dynamic;
    spec.d = implied;
  } else if (o.model == "static") {
    if (o.d >= 0) spdlog::warn("d is ignored for the static model");
    spec.variant = Variant::static_time;
    spec.d = 0;
  } else if (o.model == "independent") {
    spec.variant = Variant::independent;
    spec.d = o.d >= 0 ? o.d : 1;
  } else {
    throw UsageError("unknown model '" + o.model + "'");
  }
  return spec;
}

struct Training {
  NetPanel full;  // standardized when requested
  NetPanel train;
  std::optional<StandardizationStats> stats;
  int train_end = 0;
};

Training prepare_training(const fs::path& data, int train_end, bool standardize_covariates) {
  NetPanel panel = load_panel(PanelFiles::in_directory(data));
  Training tr;
  tr.train_end = train_end == 0 ? panel.T : train_end;
  if (tr.train_end < 1 || tr.train_end > panel.T) {
    throw UsageError("--train-end must lie in [1, " + std::to_string(panel.T) + "]");
  }
  if (standardize_covariates && panel.p() > 0) {
    auto [std_panel, stats] = standardize(panel, tr.train_end);
    tr.full = std::move(std_panel);
    tr.stats = std::move(stats);
  } else {
    tr.full = std::move(panel);
  }
  tr.train = slice_time(tr.full, 0, tr.train_end);
  return tr;
}

// column labels of the pointwise matrix: time:source:target in likelihood order
std::vector<std::string> dyad_header(const NetPanel& panel) {
  std::vector<std::string> out;
  for (int t = 0; t < panel.T; ++t) {
    for (int i = 0; i < panel.n; ++i) {
      for (int j = 0; j < panel.n; ++j) {
        if (i != j) out.push_back(panel.time_labels[t] + ":" + panel.node_labels[i] + ":" + panel.node_labels[j]);
      }
    }
  }
  return out;
}

void write_standardization(const StandardizationStats& stats, const NetPanel& panel, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  csv::write_row(out, {"covariate", "mean", "sd", "standardized"});
  for (std::size_t l = 0; l < stats.mean.size(); ++l) {
    csv::write_row(out, {panel.covariate_names[l], csv::format(stats.mean[l]), csv::format(stats.sd[l]),
                         stats.standardized[l] ? "1" : "0"});
  }
}

DrawSet fit_into(const FitOptions& o, int k, const fs::path& out) {
  Manifest manifest("fit");
  const ModelSpec spec = model_spec(o, k);
  Training tr = prepare_training(o.data, o.train_end, !o.no_standardize);
  try {
    spec.validate(tr.train.n);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  HmcConfig cfg;
  cfg.iterations = o.iterations;
  cfg.burnin = o.burnin;
  cfg.chains = o.chains;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.max_leapfrog = o.max_leapfrog;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  prepare_output(out);

  spdlog::info("fitting {} (K={}, d={}) on n={} T={}: {} chains x {} iterations ({} burn-in)", o.model, spec.K,
               spec.d, tr.train.n, tr.train.T, cfg.chains, cfg.iterations, cfg.burnin);
  DrawSet draws;
  try {
    draws = run(tr.train, spec, cfg, !o.no_loglik);
  } catch (const NumericalError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw NumericalError(e.what());
  }
  draws.data_digest = sha256_file(PanelFiles::in_directory(o.data).edges);

  write_draws(draws, out);
  if (!o.no_loglik) write_matrix(draws.pointwise, out / "loglik.csv", dyad_header(tr.train));
  write_summary(summarize(draws), out / "summary.csv");
  if (tr.stats) write_standardization(*tr.stats, tr.full, out / "standardization.csv");

  const double divergence = draws.divergence_rate();
  if (divergence > 0.05) {
    spdlog::warn("divergence rate {:.4f} exceeds 5%", divergence);
  } else {
    spdlog::info("divergence rate {:.4f}", divergence);
  }

  manifest.config("model", o.model);
  manifest.config("variant", to_string(spec.variant));
  manifest.config("k", std::to_string(spec.K));
  manifest.config("d", std::to_string(spec.d));
  manifest.config("iterations", std::to_string(cfg.iterations));
  manifest.config("burnin", std::to_string(cfg.burnin));
  manifest.config("chains", std::to_string(cfg.chains));
  manifest.config("threads", std::to_string(cfg.threads));
  manifest.config("max_leapfrog", std::to_string(cfg.max_leapfrog));
  manifest.config("target_accept", csv::format(cfg.target_accept));
  manifest.config("train_end", std::to_string(tr.train_end));
  manifest.config("standardize", fmt_bool(tr.stats.has_value()));
  manifest.config("loglik", fmt_bool(!o.no_loglik));
  manifest.config("data", abs_path(o.data));
  manifest.config("n", std::to_string(draws.dims.n));
  manifest.config("T", std::to_string(draws.dims.T));
  manifest.config("p", std::to_string(draws.dims.p));
  manifest.config("sigma0", csv::format(spec.sigma0));
  manifest.config("epsilon", csv::format(spec.epsilon));
  manifest.config("gamma_shape", csv::format(spec.gamma_shape));
  manifest.config("gamma_rate", csv::format(spec.gamma_rate));
  manifest.config("zdist_c", csv::format(spec.zdist.c));
  manifest.config("zdist_s", csv::format(spec.zdist.s));
  manifest.config("latent_coordinates", spec.noncentered ? "noncentered" : "centered");
  manifest.seed("run", cfg.seed);
  for (int c = 0; c < cfg.chains; ++c) {
    manifest.seed("chain." + std::to_string(c + 1), substream_seed(cfg.seed, "chain", static_cast<std::uint64_t>(c)));
  }
  record_panel_inputs(manifest, o.data);
  manifest.result("draws", std::to_string(draws.num_draws()));
  manifest.result("divergence_rate", csv::format(divergence));
  for (std::size_t c = 0; c < draws.chains.size(); ++c) {
    manifest.result("step_size.chain." + std::to_string(c + 1), csv::format(draws.chains[c].step_size));
  }
  manifest.write(out);
  return draws;
}

struct LoadedFit {
  fs::path dir;
  ManifestData manifest;
  std::string model;
  Training training;
  DrawSet draws;
};

LoadedFit load_fit(const fs::path& dir) {
  LoadedFit lf;
  lf.dir = dir;
  lf.manifest = read_manifest(dir);
  auto get = [&](const std::string& key) -> const std::string& { return manifest_value(lf.manifest, key, dir); };
  if (get("command") != "fit") throw DataError(dir.string() + " is not a fit directory");
  for (const auto& [key, digest] : lf.manifest) {
    if (key.rfind("input.", 0) != 0) continue;
    const fs::path input = key.substr(6);
    if (!fs::is_regular_file(input)) throw DataError("fit input " + input.string() + " is missing");
    if (sha256_file(input) != digest) throw DataError("fit input " + input.string() + " changed since the fit");
  }
  lf.model = get("config.model");

  ModelSpec spec;
  spec.variant = variant_from_string(get("config.variant"));
  spec.K = std::stoi(get("config.k"));
  spec.d = std::stoi(get("config.d"));
  spec.sigma0 = std::stod(get("config.sigma0"));
  spec.epsilon = std::stod(get("config.epsilon"));
  spec.gamma_shape = std::stod(get("config.gamma_shape"));
  spec.gamma_rate = std::stod(get("config.gamma_rate"));
  spec.zdist.c = std::stod(get("config.zdist_c"));
  spec.zdist.s = std::stod(get("config.zdist_s"));
  spec.noncentered = get("config.latent_coordinates") == "noncentered";
  HmcConfig cfg;
  cfg.iterations = std::stoi(get("config.iterations"));
  cfg.burnin = std::stoi(get("config.burnin"));
  cfg.chains = std::stoi(get("config.chains"));
  cfg.seed = std::stoull(get("seed.run"));
  cfg.max_leapfrog = std::stoi(get("config.max_leapfrog"));
  const ModelDims dims{std::stoi(get("config.n")), std::stoi(get("config.T")), std::stoi(get("config.p"))};

  lf.training = prepare_training(get("config.data"), std::stoi(get("config.train_end")),
                                 get("config.standardize") == "true");
  const NetPanel& train = lf.training.train;
  if (train.n != dims.n || train.T != dims.T || train.p() != dims.p) {
    throw DataError(dir.string() + ": data dimensions do not match the fit");
  }
  lf.draws = read_draws(dir, spec, dims, cfg);
  return lf;
}

void record_fit_inputs(Manifest& manifest, const LoadedFit& lf) {
  manifest.input(lf.dir / Manifest::file_name);
  for (int c = 0; c < lf.draws.config.chains; ++c) manifest.input(lf.dir / ("chain_" + std::to_string(c + 1) + ".csv"));
}

// ---- loo ------------------------------------------------------------------

struct LooOptions {
  std::vector<fs::path> fits;
  std::vector<int> grid;
  FitOptions fit;
  fs::path out;
};

LooResult loo_of_fit(const LoadedFit& lf) {
  const auto path = lf.dir / "loglik.csv";
  Eigen::MatrixXd loglik;
  if (fs::is_regular_file(path)) {
    loglik = read_matrix(path);
    const auto expected = static_cast<Eigen::Index>(lf.training.train.T) * lf.training.train.n * (lf.training.train.n - 1);
    if (loglik.rows() != lf.draws.num_draws() || loglik.cols() != expected) {
      throw DataError(path.string() + ": shape does not match the fit");
    }
  } else {
    loglik = pointwise_matrix(lf.draws, lf.training.train);
  }
  return psis_loo(loglik);
}

void run_loo(const LooOptions& o) {
  if (o.fits.empty() == o.grid.empty()) throw UsageError("loo needs either --fit DIR... or --grid K1,K2,...");
  Manifest manifest("loo");
  prepare_output(o.out);
  std::vector<LooRow> rows;
  if (!o.grid.empty()) {
    if (o.fit.data.empty()) throw UsageError("--grid requires --data");
    for (int k : o.grid) {
      const fs::path dir = o.out / ("k" + std::to_string(k));
      const DrawSet draws = fit_into(o.fit, k, dir);
      Training tr = prepare_training(o.fit.data, o.fit.train_end, !o.fit.no_standardize);
      const Eigen::MatrixXd loglik = draws.pointwise.size() ? draws.pointwise : pointwise_matrix(draws, tr.train);
      rows.push_back({o.fit.model, k, draws.spec.d, psis_loo(loglik)});
      manifest.config("fit.k" + std::to_string(k), abs_path(dir));
    }
    record_panel_inputs(manifest, o.fit.data);
    manifest.config("model", o.fit.model);
    manifest.seed("run", o.fit.seed);
  } else {
    for (const auto& dir : o.fits) {
      const LoadedFit lf = load_fit(dir);
      rows.push_back({lf.model, lf.draws.spec.K, lf.draws.spec.d, loo_of_fit(lf)});
      record_fit_inputs(manifest, lf);
      manifest.config("fit." + std::to_string(rows.size()), abs_path(dir));
    }
  }
  for (const auto& r : rows) {
    spdlog::info("{} K={} d={}: elpd_loo={:.3f} loo_ic={:.3f} high-k points={}", r.model, r.k, r.d, r.result.elpd_loo,
                 r.result.loo_ic, r.result.n_high_k);
    if (r.result.n_high_k > 0) spdlog::warn("{} K={}: {} points with Pareto k > 0.7", r.model, r.k, r.result.n_high_k);
  }
  write_loo(rows, o.out / "loo.csv");
  const auto best = std::min_element(rows.begin(), rows.end(), [](const LooRow& a, const LooRow& b) {
    return a.result.loo_ic < b.result.loo_ic;
  });
  std::cout << "selected model=" << best->model << " k=" << best->k << " d=" << best->d
            << " loo_ic=" << csv::format(best->result.loo_ic) << '\n';
  manifest.result("selected_model", best->model);
  manifest.result("selected_k", std::to_string(best->k));
  manifest.result("selected_loo_ic", csv::format(best->result.loo_ic));
  manifest.write(o.out);
}

// ---- predict --------------------------------------------------------------

struct PredictOptions {
  fs::path fit;
  fs::path covariates;
  bool condition = false;
  std::uint64_t seed = 1;
  fs::path out;
};

NetPanel forecast_covariates(const LoadedFit& lf, const fs::path& dir, Manifest& manifest) {
  const NetPanel& full = lf.training.full;
  const int train_end = lf.training.train_end;
  if (dir.empty()) {
    if (train_end < full.T) return slice_time(full, train_end, train_end + 1);
    const fs::path data = manifest_value(lf.manifest, "config.data", lf.dir);
    throw DataError("no forecast covariates after time " + full.time_labels.back() + ": " +
                    (data / "pair_covariates.csv").string() + " ends with the training window; pass --covariates DIR");
  }
  PanelFiles files = PanelFiles::in_directory(dir);
  files.edges.clear();
  for (const auto& p : {files.node_covariates, files.pair_covariates}) {
    if (!fs::is_regular_file(p)) throw DataError("missing forecast covariate file " + p.string());
    manifest.input(p);
  }
  NetPanel covs = load_panel(files);
  if (covs.T != 1) {
    throw DataError(dir.string() + ": forecast covariates must cover one time point, found " + std::to_string(covs.T));
  }
  if (covs.node_labels != full.node_labels) throw DataError(dir.string() + ": nodes differ from the training data");
  if (covs.covariate_names != full.covariate_names) {
    throw DataError(dir.string() + ": covariate columns differ from the training data");
  }
  covs.covariate_kinds = full.covariate_kinds;
  return lf.training.stats ? apply_standardization(covs, *lf.training.stats) : covs;
}

void run_predict(const PredictOptions& o) {
  Manifest manifest("predict");
  const LoadedFit lf = load_fit(o.fit);
  const NetPanel covs = forecast_covariates(lf, o.covariates, manifest);
  prepare_output(o.out);
  ForecastOptions fo;
  fo.marginalize = !o.condition;
  fo.seed = o.seed;
  const PredictionSet pred = predict_next(lf.draws, covs, fo);
  write_predictions(pred, o.out / "predictions.csv");
  spdlog::info("predicted {} dyads at time {} from {} draws", pred.source.size(), pred.horizon_label,
               pred.weight_draws.rows());

  manifest.config("fit", abs_path(o.fit));
  if (!o.covariates.empty()) manifest.config("covariates", abs_path(o.covariates));
  manifest.config("marginalize", fmt_bool(fo.marginalize));
  manifest.config("horizon", pred.horizon_label);
  manifest.seed("run", o.seed);
  record_fit_inputs(manifest, lf);
  manifest.write(o.out);
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateOptions {
  fs::path predictions;
  fs::path data;
  fs::path truth;
  fs::path fit;
  fs::path out;
};

std::map<std::string, double> read_truth_parameters(const fs::path& dir) {
  const auto path = dir / "truth_parameters.csv";
  const auto table = csv::read(path);
  const int cn = table.column("parameter"), cv = table.column("value");
  if (cn < 0 || cv < 0) throw DataError(path.string() + ": schema violation, expected parameter,value");
  std::map<std::string, double> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) out[table.rows[r][cn]] = csv::to_double(table.rows[r][cv], path, r + 2);
  return out;
}

void run_evaluate(const EvaluateOptions& o) {
  Manifest manifest("evaluate");
  const fs::path pred_path = fs::is_directory(o.predictions) ? o.predictions / "predictions.csv" : o.predictions;
  if (!fs::is_regular_file(pred_path)) throw DataError("missing predictions file " + pred_path.string());
  const NetPanel panel = load_panel(PanelFiles::in_directory(o.data));

  const auto table = csv::read(pred_path);
  const int cs = table.column("source"), cg = table.column("target"), ch = table.column("horizon");
  const int cw = table.column("median_expected_weight"), cp = table.column("median_occurrence_prob");
  if (cs < 0 || cg < 0 || ch < 0 || cw < 0 || cp < 0) throw DataError(pred_path.string() + ": schema violation");
  auto index = [](const std::vector<std::string>& labels, const std::string& v, const char* what) {
    const auto it = std::find(labels.begin(), labels.end(), v);
    if (it == labels.end()) throw DataError(std::string("prediction ") + what + " '" + v + "' not in the data");
    return static_cast<int>(it - labels.begin());
  };
  const auto R = static_cast<Eigen::Index>(table.rows.size());
  Eigen::VectorXd obs_occ(R), obs_w(R), pred_w(R), pred_p(R);
  std::vector<int> tt(R), ii(R), jj(R);
  for (Eigen::Index r = 0; r < R; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    tt[r] = index(panel.time_labels, row[ch], "time");
    ii[r] = index(panel.node_labels, row[cs], "node");
    jj[r] = index(panel.node_labels, row[cg], "node");
    obs_occ(r) = panel.occurrence[tt[r]](ii[r], jj[r]);
    obs_w(r) = panel.weight[tt[r]](ii[r], jj[r]);
    pred_w(r) = csv::to_double(row[cw], pred_path, static_cast<std::size_t>(r) + 2);
    pred_p(r) = csv::to_double(row[cp], pred_path, static_cast<std::size_t>(r) + 2);
  }

  std::vector<std::pair<std::string, double>> metrics;
  metrics.emplace_back("occurrence_error", occurrence_error(obs_occ, pred_p));
  double sq = 0.0;
  int positives = 0;
  for (Eigen::Index r = 0; r < R; ++r) {
    if (obs_occ(r) == 1.0) {
      sq += (obs_w(r) - pred_w(r)) * (obs_w(r) - pred_w(r));
      ++positives;
    }
  }
  if (positives > 0) metrics.emplace_back("weight_mspe_observed", sq / positives);

  std::optional<SimTruth> truth;
  if (!o.truth.empty()) {
    truth = read_truth(o.truth, panel.n, panel.T);
    manifest.input(o.truth / "truth_dyads.csv");
    Eigen::VectorXd tw(R), tp(R);
    for (Eigen::Index r = 0; r < R; ++r) {
      tw(r) = truth->expected_weight[tt[r]](ii[r], jj[r]);
      tp(r) = truth->occurrence_prob[tt[r]](ii[r], jj[r]);
    }
    metrics.emplace_back("weight_mse_truth", mse(pred_w, tw));
    metrics.emplace_back("prob_mse_truth", mse(pred_p, tp));
  }

  if (!o.fit.empty()) {
    const LoadedFit lf = load_fit(o.fit);
    record_fit_inputs(manifest, lf);
    if (!truth) {
      spdlog::warn("--fit without --truth: no in-sample metrics to report");
    } else {
      const FittedMeans fm = posterior_fitted_means(lf.draws, lf.training.train);
      const int T = lf.training.train_end;
      metrics.emplace_back("fitted_weight_mse", mse(fm.weight, truth_vector(truth->expected_weight, 0, T)));
      metrics.emplace_back("fitted_prob_mse", mse(fm.prob, truth_vector(truth->occurrence_prob, 0, T)));
      if (lf.training.stats) {
        spdlog::warn("coefficient metrics skipped: the fit used standardized covariates");
      } else {
        const auto params = read_truth_parameters(o.truth);
        manifest.input(o.truth / "truth_parameters.csv");
        const auto summary = summarize(lf.draws);
        double err = 0.0;
        int covered = 0, count = 0;
        for (const auto& s : summary) {
          const auto it = params.find(s.name);
          if (s.name.rfind("betaC.", 0) != 0 || it == params.end()) continue;
          err += (s.mean - it->second) * (s.mean - it->second);
          covered += (s.q025 <= it->second && it->second <= s.q975) ? 1 : 0;
          ++count;
        }
        if (count > 0) {
          metrics.emplace_back("beta_c_mse", err / count);
          metrics.emplace_back("beta_c_coverage", static_cast<double>(covered) / count);
        }
      }
    }
  }

  prepare_output(o.out);
  write_metrics(metrics, o.out / "metrics.csv");
  for (const auto& [name, value] : metrics) spdlog::info("{} = {:.6g}", name, value);

  manifest.config("predictions", abs_path(pred_path));
  manifest.config("data", abs_path(o.data));
  if (!o.truth.empty()) manifest.config("truth", abs_path(o.truth));
  if (!o.fit.empty()) manifest.config("fit", abs_path(o.fit));
  manifest.input(pred_path);
  record_panel_inputs(manifest, o.data);
  manifest.write(o.out);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  auto logger = std::make_shared<spdlog::logger>("hurdlenet", std::make_shared<spdlog::sinks::stderr_sink_mt>());
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);

  CLI::App app{"Joint latent space hurdle models for zero-inflated directed network time series"};
  app.set_version_flag("--version", HURDLENET_VERSION);
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "only log warnings and errors");
  app.add_flag("-v,--verbose", verbose, "log debug detail");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic panel with known truth");
  sim_cmd->add_option("--n", sim.n, "number of nodes")->check(CLI::Range(2, 100000))->capture_default_str();
  sim_cmd->add_option("--t", sim.T, "number of time points")->check(CLI::Range(1, 100000))->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "run seed")->capture_default_str();
  sim_cmd->add_option("--transition-fraction", sim.transition_fraction, "share of zero-group nodes that move")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sim_cmd->add_option("--jitter-sd", sim.jitter_sd, "latent jitter standard deviation")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "output directory")->required();

  FitOptions fit;
  fs::path fit_out;
  auto* fit_cmd = app.add_subcommand("fit", "sample the posterior of one model");
  add_fit_flags(fit_cmd, fit);
  fit_cmd->get_option("--data")->required();
  fit_cmd->add_option("--k", fit.k, "latent dimension")->check(CLI::PositiveNumber)->required();
  fit_cmd->add_option("--out", fit_out, "fit directory")->required();

  LooOptions loo;
  auto* loo_cmd = app.add_subcommand("loo", "PSIS-LOO model comparison over fits or a K grid");
  add_fit_flags(loo_cmd, loo.fit);
  loo_cmd->add_option("--fit", loo.fits, "fit directories to compare");
  loo_cmd->add_option("--grid", loo.grid, "latent dimensions to fit and compare")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  loo_cmd->add_option("--out", loo.out, "output directory")->required();

  PredictOptions pred;
  auto* pred_cmd = app.add_subcommand("predict", "one-step-ahead predictions from a fit");
  pred_cmd->add_option("--fit", pred.fit, "fit directory")->required();
  pred_cmd->add_option("--covariates", pred.covariates, "directory with forecast-time covariate files");
  pred_cmd->add_flag("--condition", pred.condition, "condition on the last latent state instead of drawing the innovation");
  pred_cmd->add_option("--seed", pred.seed, "forecast seed")->capture_default_str();
  pred_cmd->add_option("--out", pred.out, "output directory")->required();

  EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against observed and true values");
  eval_cmd->add_option("--predictions", eval.predictions, "predictions.csv or the predict output directory")->required();
  eval_cmd->add_option("--data", eval.data, "panel directory with the observed horizon")->required();
  eval_cmd->add_option("--truth", eval.truth, "simulation directory with truth files");
  eval_cmd->add_option("--fit", eval.fit, "fit directory for in-sample and coefficient metrics");
  eval_cmd->add_option("--out", eval.out, "output directory")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }
  logger->set_level(quiet ? spdlog::level::warn : verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*sim_cmd) run_simulate(sim);
    if (*fit_cmd) fit_into(fit, fit.k, fit_out);
    if (*loo_cmd) run_loo(loo);
    if (*pred_cmd) run_predict(pred);
    if (*eval_cmd) run_evaluate(eval);
  } catch (const UsageError& e) {
    spdlog::error("argument error: {}", e.what());
    return exit_usage;
  } catch (const std::invalid_argument& e) {
    spdlog::error("argument error: {}", e.what());
    return exit_usage;
  } catch (const IoError& e) {
    spdlog::error("io error: {}", e.what());
    return exit_io;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("io error: {}", e.what());
    return exit_io;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return exit_data;
  } catch (const NumericalError& e) {
    spdlog::error("numerical error: {}", e.what());
    return exit_numerical;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return exit_failure;
  }
  return exit_ok;
}

}  // namespace hurdlenet::cli
