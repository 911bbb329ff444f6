#include "hurdlenet/netpanel.hpp"

#include "hurdlenet/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace hurdlenet {

namespace {

bool parses_as_number(const std::string& s) {
  double v;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Deterministic label order: numeric when every label is numeric, else lexicographic.
std::vector<std::string> sorted_labels(const std::set<std::string>& labels) {
  std::vector<std::string> out(labels.begin(), labels.end());
  const bool numeric = std::all_of(out.begin(), out.end(), parses_as_number);
  if (numeric) {
    std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      return std::stod(a) < std::stod(b);
    });
  }
  return out;
}

std::map<std::string, int> index_of(const std::vector<std::string>& labels) {
  std::map<std::string, int> out;
  for (std::size_t k = 0; k < labels.size(); ++k) out[labels[k]] = static_cast<int>(k);
  return out;
}

void require_columns(const csv::Table& table, const std::vector<std::string>& leading,
                     const std::filesystem::path& path) {
  if (table.header.size() < leading.size()) {
    throw DataError(path.string() + ": schema violation, expected leading columns");
  }
  for (std::size_t c = 0; c < leading.size(); ++c) {
    if (table.header[c] != leading[c]) {
      throw DataError(path.string() + ": schema violation, column " + std::to_string(c + 1) +
                      " should be '" + leading[c] + "' but is '" + table.header[c] + "'");
    }
  }
}

std::string label_for(const std::vector<std::string>& labels, int index) {
  if (index < static_cast<int>(labels.size())) return labels[index];
  return std::to_string(index + 1);
}

}  // namespace

NetPanel NetPanel::zeros(int n, int T, int p1, int p2) {
  NetPanel panel;
  panel.n = n;
  panel.T = T;
  panel.p1 = p1;
  panel.p2 = p2;
  panel.occurrence.assign(T, Eigen::MatrixXi::Zero(n, n));
  panel.weight.assign(T, Eigen::MatrixXd::Zero(n, n));
  panel.node_covs.assign(T, Eigen::MatrixXd::Zero(n, p1));
  panel.pair_covs.assign(T, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * n, p2));
  for (int l = 0; l < p1 + p2; ++l) {
    panel.covariate_names.push_back(l < p1 ? "node" + std::to_string(l + 1)
                                           : "pair" + std::to_string(l - p1 + 1));
  }
  panel.covariate_kinds.assign(p1 + p2, CovariateKind::continuous);
  for (int i = 0; i < n; ++i) panel.node_labels.push_back(std::to_string(i + 1));
  for (int t = 0; t < T; ++t) panel.time_labels.push_back(std::to_string(t + 1));
  return panel;
}

void NetPanel::validate() const {
  if (n < 2) throw DataError("panel needs at least 2 nodes");
  if (T < 1) throw DataError("panel needs at least 1 time point");
  auto bad_shape = [](const char* what) { throw DataError(std::string("panel shape mismatch: ") + what); };
  if (static_cast<int>(occurrence.size()) != T || static_cast<int>(weight.size()) != T) bad_shape("edges");
  if (static_cast<int>(node_covs.size()) != T || static_cast<int>(pair_covs.size()) != T) bad_shape("covariates");
  if (static_cast<int>(covariate_names.size()) != p1 + p2 ||
      static_cast<int>(covariate_kinds.size()) != p1 + p2) {
    bad_shape("covariate metadata");
  }
  for (int t = 0; t < T; ++t) {
    if (occurrence[t].rows() != n || occurrence[t].cols() != n) bad_shape("occurrence");
    if (weight[t].rows() != n || weight[t].cols() != n) bad_shape("weight");
    if (node_covs[t].rows() != n || node_covs[t].cols() != p1) bad_shape("node covariates");
    if (pair_covs[t].rows() != static_cast<Eigen::Index>(n) * n || pair_covs[t].cols() != p2) {
      bad_shape("pair covariates");
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const int d = occurrence[t](i, j);
        const double y = weight[t](i, j);
        if (d != 0 && d != 1) throw DataError("occurrence must be 0 or 1");
        if (!std::isfinite(y)) throw DataError("non-finite weight");
        if ((d == 1) != (y != 0.0)) {
          throw DataError("hurdle violation at time " + label_for(time_labels, t) + ", " +
                          label_for(node_labels, i) + " -> " + label_for(node_labels, j));
        }
        if (symmetric_pairs && j > i && pair_covs[t].row(i * n + j) != pair_covs[t].row(j * n + i)) {
          throw DataError("pair covariates are flagged symmetric but differ for " +
                          label_for(node_labels, i) + ", " + label_for(node_labels, j));
        }
      }
    }
  }
}

long NetPanel::edge_count() const {
  long count = 0;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) count += occurrence[t](i, j);
      }
    }
  }
  return count;
}

Eigen::VectorXd assemble_covariates(const NetPanel& panel, int i, int j, int t) {
  if (i == j) throw std::invalid_argument("assemble_covariates: self-dyad");
  if (t < 0 || t >= panel.T || i < 0 || j < 0 || i >= panel.n || j >= panel.n) {
    throw std::out_of_range("assemble_covariates: index out of range");
  }
  Eigen::VectorXd x(panel.p());
  x.head(panel.p1) = panel.node_covs[t].row(i).transpose();
  x.segment(panel.p1, panel.p1) = panel.node_covs[t].row(j).transpose();
  x.tail(panel.p2) = panel.pair_covs[t].row(i * panel.n + j).transpose();
  return x;
}

std::pair<NetPanel, StandardizationStats> standardize(const NetPanel& panel, int train_end) {
  if (train_end < 2 || train_end > panel.T) {
    throw std::invalid_argument("standardize: train_end must lie in [2, T]");
  }
  StandardizationStats stats;
  stats.train_end = train_end;
  const int ncov = panel.p1 + panel.p2;
  stats.mean.assign(ncov, 0.0);
  stats.sd.assign(ncov, 1.0);
  stats.standardized.assign(ncov, false);

  for (int l = 0; l < ncov; ++l) {
    if (panel.covariate_kinds[l] == CovariateKind::binary) continue;
    std::vector<double> values;
    for (int t = 0; t < train_end; ++t) {
      if (l < panel.p1) {
        for (int i = 0; i < panel.n; ++i) values.push_back(panel.node_covs[t](i, l));
      } else {
        for (int i = 0; i < panel.n; ++i) {
          for (int j = 0; j < panel.n; ++j) {
            if (i != j) values.push_back(panel.pair_covs[t](i * panel.n + j, l - panel.p1));
          }
        }
      }
    }
    const Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
    const double m = v.mean();
    const double sd = std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(m)))) {
      throw DataError("covariate '" + panel.covariate_names[l] +
                      "' has zero variance over the training window; declare it binary or drop it");
    }
    stats.mean[l] = m;
    stats.sd[l] = sd;
    stats.standardized[l] = true;
  }
  return {apply_standardization(panel, stats), stats};
}

NetPanel apply_standardization(const NetPanel& panel, const StandardizationStats& stats) {
  const int ncov = panel.p1 + panel.p2;
  if (static_cast<int>(stats.mean.size()) != ncov) {
    throw std::invalid_argument("standardization stats do not match covariate count");
  }
  NetPanel out = panel;
  for (int l = 0; l < ncov; ++l) {
    if (!stats.standardized[l]) continue;
    for (int t = 0; t < panel.T; ++t) {
      if (l < panel.p1) {
        out.node_covs[t].col(l) = (panel.node_covs[t].col(l).array() - stats.mean[l]) / stats.sd[l];
      } else {
        auto col = out.pair_covs[t].col(l - panel.p1);
        col = (panel.pair_covs[t].col(l - panel.p1).array() - stats.mean[l]) / stats.sd[l];
        for (int i = 0; i < panel.n; ++i) col(i * panel.n + i) = 0.0;
      }
    }
  }
  return out;
}

NetPanel transpose(const NetPanel& panel) {
  NetPanel out = panel;
  for (int t = 0; t < panel.T; ++t) {
    out.occurrence[t] = panel.occurrence[t].transpose();
    out.weight[t] = panel.weight[t].transpose();
    for (int i = 0; i < panel.n; ++i) {
      for (int j = 0; j < panel.n; ++j) {
        out.pair_covs[t].row(i * panel.n + j) = panel.pair_covs[t].row(j * panel.n + i);
      }
    }
  }
  return out;
}

NetPanel slice_time(const NetPanel& panel, int begin, int end) {
  if (begin < 0 || end > panel.T || begin >= end) throw std::out_of_range("slice_time: bad range");
  NetPanel out = panel;
  out.T = end - begin;
  auto cut = [&](auto& v) { v = std::decay_t<decltype(v)>(v.begin() + begin, v.begin() + end); };
  cut(out.occurrence);
  cut(out.weight);
  cut(out.node_covs);
  cut(out.pair_covs);
  if (static_cast<int>(out.time_labels.size()) == panel.T) cut(out.time_labels);
  return out;
}

PanelFiles PanelFiles::in_directory(const std::filesystem::path& dir) {
  PanelFiles files{dir / "edges.csv", dir / "node_covariates.csv", dir / "pair_covariates.csv",
                   dir / "covariate_kinds.txt"};
  return files;
}

std::vector<std::pair<std::string, CovariateKind>> read_covariate_kinds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::pair<std::string, CovariateKind>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto fields = csv::split(line, '=');
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 2) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected name=kind");
    }
    if (fields[1] == "continuous") {
      out.emplace_back(fields[0], CovariateKind::continuous);
    } else if (fields[1] == "binary") {
      out.emplace_back(fields[0], CovariateKind::binary);
    } else {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": unknown kind '" + fields[1] + "'");
    }
  }
  return out;
}

NetPanel load_panel(const PanelFiles& files) {
  // an empty edges path loads covariates only (e.g. forecast-time covariates)
  const auto edges = files.edges.empty() ? csv::Table{{"time", "source", "target", "occurrence", "weight"}, {}}
                                         : csv::read(files.edges);
  const auto nodes = csv::read(files.node_covariates);
  const auto pairs = csv::read(files.pair_covariates);
  require_columns(edges, {"time", "source", "target", "occurrence", "weight"}, files.edges);
  if (edges.header.size() != 5) throw DataError(files.edges.string() + ": schema violation, expected 5 columns");
  require_columns(nodes, {"time", "node"}, files.node_covariates);
  require_columns(pairs, {"time", "source", "target"}, files.pair_covariates);

  std::set<std::string> time_set, node_set;
  for (const auto& r : edges.rows) {
    time_set.insert(r[0]);
    node_set.insert(r[1]);
    node_set.insert(r[2]);
  }
  for (const auto& r : nodes.rows) {
    time_set.insert(r[0]);
    node_set.insert(r[1]);
  }
  for (const auto& r : pairs.rows) {
    time_set.insert(r[0]);
    node_set.insert(r[1]);
    node_set.insert(r[2]);
  }

  const int p1 = static_cast<int>(nodes.header.size()) - 2;
  const int p2 = static_cast<int>(pairs.header.size()) - 3;
  NetPanel panel = NetPanel::zeros(static_cast<int>(node_set.size()), static_cast<int>(time_set.size()), p1, p2);
  panel.node_labels = sorted_labels(node_set);
  panel.time_labels = sorted_labels(time_set);
  panel.covariate_names.clear();
  for (int l = 0; l < p1; ++l) panel.covariate_names.push_back(nodes.header[2 + l]);
  for (int l = 0; l < p2; ++l) panel.covariate_names.push_back(pairs.header[3 + l]);
  if (!files.covariate_kinds.empty() && std::filesystem::exists(files.covariate_kinds)) {
    for (const auto& [name, kind] : read_covariate_kinds(files.covariate_kinds)) {
      auto it = std::find(panel.covariate_names.begin(), panel.covariate_names.end(), name);
      if (it == panel.covariate_names.end()) {
        throw DataError(files.covariate_kinds.string() + ": unknown covariate '" + name + "'");
      }
      panel.covariate_kinds[it - panel.covariate_names.begin()] = kind;
    }
  }
  const auto tindex = index_of(panel.time_labels);
  const auto nindex = index_of(panel.node_labels);
  const int n = panel.n;

  std::vector<char> seen(static_cast<std::size_t>(panel.T) * n * n, 0);
  for (std::size_t r = 0; r < edges.rows.size(); ++r) {
    const auto& row = edges.rows[r];
    const std::size_t line = r + 2;
    const int t = tindex.at(row[0]);
    const int i = nindex.at(row[1]);
    const int j = nindex.at(row[2]);
    if (i == j) {
      throw DataError(files.edges.string() + ":" + std::to_string(line) + ": self-loop row for node " + row[1]);
    }
    auto& flag = seen[(static_cast<std::size_t>(t) * n + i) * n + j];
    if (flag) {
      throw DataError(files.edges.string() + ":" + std::to_string(line) + ": duplicate row (" + row[0] + "," +
                      row[1] + "," + row[2] + ")");
    }
    flag = 1;
    const double occ = csv::to_double(row[3], files.edges, line);
    const double y = csv::to_double(row[4], files.edges, line);
    if (occ != 0.0 && occ != 1.0) {
      throw DataError(files.edges.string() + ":" + std::to_string(line) + ": occurrence must be 0 or 1");
    }
    if ((occ == 1.0) != (y != 0.0)) {
      throw DataError(files.edges.string() + ":" + std::to_string(line) +
                      ": hurdle violation, weight must be nonzero exactly when occurrence is 1");
    }
    panel.occurrence[t](i, j) = static_cast<int>(occ);
    panel.weight[t](i, j) = y;
  }

  std::vector<char> node_seen(static_cast<std::size_t>(panel.T) * n, 0);
  for (std::size_t r = 0; r < nodes.rows.size(); ++r) {
    const auto& row = nodes.rows[r];
    const int t = tindex.at(row[0]);
    const int i = nindex.at(row[1]);
    if (node_seen[static_cast<std::size_t>(t) * n + i]++) {
      throw DataError(files.node_covariates.string() + ":" + std::to_string(r + 2) + ": duplicate row");
    }
    for (int l = 0; l < p1; ++l) panel.node_covs[t](i, l) = csv::to_double(row[2 + l], files.node_covariates, r + 2);
  }
  if (p1 > 0) {
    for (int t = 0; t < panel.T; ++t) {
      for (int i = 0; i < n; ++i) {
        if (!node_seen[static_cast<std::size_t>(t) * n + i]) {
          throw DataError(files.node_covariates.string() + ": missing row for time " + panel.time_labels[t] +
                          ", node " + panel.node_labels[i]);
        }
      }
    }
  }

  std::vector<char> pair_seen(static_cast<std::size_t>(panel.T) * n * n, 0);
  for (std::size_t r = 0; r < pairs.rows.size(); ++r) {
    const auto& row = pairs.rows[r];
    const int t = tindex.at(row[0]);
    const int i = nindex.at(row[1]);
    const int j = nindex.at(row[2]);
    if (i == j) {
      throw DataError(files.pair_covariates.string() + ":" + std::to_string(r + 2) + ": self-loop row");
    }
    auto& flag = pair_seen[(static_cast<std::size_t>(t) * n + i) * n + j];
    if (flag == 1) throw DataError(files.pair_covariates.string() + ":" + std::to_string(r + 2) + ": duplicate row");
    flag = 1;
    for (int l = 0; l < p2; ++l) {
      panel.pair_covs[t](i * n + j, l) = csv::to_double(row[3 + l], files.pair_covariates, r + 2);
    }
  }
  if (p2 > 0) {
    for (int t = 0; t < panel.T; ++t) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          const auto at = [&](int a, int b) { return pair_seen[(static_cast<std::size_t>(t) * n + a) * n + b]; };
          if (at(i, j)) continue;
          if (panel.symmetric_pairs && at(j, i)) {
            panel.pair_covs[t].row(i * n + j) = panel.pair_covs[t].row(j * n + i);
            continue;
          }
          throw DataError(files.pair_covariates.string() + ": missing row for time " + panel.time_labels[t] +
                          ", " + panel.node_labels[i] + " -> " + panel.node_labels[j]);
        }
      }
    }
  }
  panel.validate();
  return panel;
}

void write_panel(const NetPanel& panel, const PanelFiles& files) {
  const int n = panel.n;
  auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
  };
  auto tl = [&](int t) { return label_for(panel.time_labels, t); };
  auto nl = [&](int i) { return label_for(panel.node_labels, i); };
  {
    auto out = open(files.edges);
    csv::write_row(out, {"time", "source", "target", "occurrence", "weight"});
    for (int t = 0; t < panel.T; ++t) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          csv::write_row(out, {tl(t), nl(i), nl(j), std::to_string(panel.occurrence[t](i, j)),
                               csv::format(panel.weight[t](i, j))});
        }
      }
    }
  }
  {
    auto out = open(files.node_covariates);
    std::vector<std::string> header{"time", "node"};
    for (int l = 0; l < panel.p1; ++l) header.push_back(panel.covariate_names[l]);
    csv::write_row(out, header);
    for (int t = 0; t < panel.T; ++t) {
      for (int i = 0; i < n; ++i) {
        std::vector<std::string> row{tl(t), nl(i)};
        for (int l = 0; l < panel.p1; ++l) row.push_back(csv::format(panel.node_covs[t](i, l)));
        csv::write_row(out, row);
      }
    }
  }
  {
    auto out = open(files.pair_covariates);
    std::vector<std::string> header{"time", "source", "target"};
    for (int l = 0; l < panel.p2; ++l) header.push_back(panel.covariate_names[panel.p1 + l]);
    csv::write_row(out, header);
    for (int t = 0; t < panel.T; ++t) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          std::vector<std::string> row{tl(t), nl(i), nl(j)};
          for (int l = 0; l < panel.p2; ++l) row.push_back(csv::format(panel.pair_covs[t](i * n + j, l)));
          csv::write_row(out, row);
        }
      }
    }
  }
  if (!files.covariate_kinds.empty()) {
    auto out = open(files.covariate_kinds);
    for (std::size_t l = 0; l < panel.covariate_names.size(); ++l) {
      out << panel.covariate_names[l] << '='
          << (panel.covariate_kinds[l] == CovariateKind::binary ? "binary" : "continuous") << '\n';
    }
  }
}

}  // namespace hurdlenet
