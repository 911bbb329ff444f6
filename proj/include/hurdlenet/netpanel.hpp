#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace hurdlenet {

/// Raised for malformed input files and violated panel invariants.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CovariateKind { continuous, binary };

/**
 * Zero-inflated directed network time series.
 *
 * All indices are 0-based internally. Occurrence and weight are stored as one
 * n x n matrix per time point; the diagonal is ignored. Pair covariates are
 * stored per time point as an (n*n) x p2 matrix with row i*n + j.
 *
 * Covariate names and kinds list the p1 node covariates first, then the p2
 * pair covariates.
 */
struct NetPanel {
  int n = 0;
  int T = 0;
  int p1 = 0;
  int p2 = 0;
  std::vector<Eigen::MatrixXi> occurrence;
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::MatrixXd> node_covs;
  std::vector<Eigen::MatrixXd> pair_covs;
  std::vector<std::string> covariate_names;
  std::vector<CovariateKind> covariate_kinds;
  bool symmetric_pairs = true;
  std::vector<std::string> node_labels;
  std::vector<std::string> time_labels;

  int p() const { return 2 * p1 + p2; }

  Eigen::RowVectorXd pair_cov(int t, int i, int j) const {
    return pair_covs[t].row(i * n + j);
  }

  /// Allocates zero-filled storage for the given shape.
  static NetPanel zeros(int n, int T, int p1, int p2);

  /// Throws DataError on any broken invariant (shape, hurdle coupling,
  /// binary occurrence, pair-covariate symmetry when flagged).
  void validate() const;

  /// Number of ordered dyads with an edge, summed over time.
  long edge_count() const;
};

/// Covariates of the directed dyad i -> j at time t, laid out as
/// (exporter node block, importer node block, pair block).
Eigen::VectorXd assemble_covariates(const NetPanel& panel, int i, int j, int t);

struct StandardizationStats {
  std::vector<double> mean;  // one per covariate, node block then pair block
  std::vector<double> sd;
  std::vector<bool> standardized;
  int train_end = 0;  // number of time points pooled
};

/// Standardizes continuous covariates with moments pooled over t < train_end.
/// Node covariates pool over nodes, pair covariates over ordered dyads i != j.
/// Binary covariates are left unchanged.
std::pair<NetPanel, StandardizationStats> standardize(const NetPanel& panel, int train_end);

/// Applies previously computed statistics (e.g. to forecast covariates).
NetPanel apply_standardization(const NetPanel& panel, const StandardizationStats& stats);

/// Swaps edge direction at every time point.
NetPanel transpose(const NetPanel& panel);

/// Keeps time points [begin, end).
NetPanel slice_time(const NetPanel& panel, int begin, int end);

struct PanelFiles {
  std::filesystem::path edges;  // empty: no edges (covariates only)
  std::filesystem::path node_covariates;
  std::filesystem::path pair_covariates;
  std::filesystem::path covariate_kinds;  // optional; a missing file means all continuous

  static PanelFiles in_directory(const std::filesystem::path& dir);
};

NetPanel load_panel(const PanelFiles& files);

void write_panel(const NetPanel& panel, const PanelFiles& files);

/// Sidecar format: one `name=continuous|binary` per line, `#` comments.
std::vector<std::pair<std::string, CovariateKind>> read_covariate_kinds(
    const std::filesystem::path& path);

}  // namespace hurdlenet
