#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cellfclust {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using BoolVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// n x J data matrix with an observed mask. Missing cells hold NaN and must
/// never be read.
struct DataSet {
  MatrixXd values;
  BoolMatrix observed;
  std::vector<std::string> variable_names;

  DataSet() = default;
  /// Fully observed data.
  explicit DataSet(MatrixXd v, std::vector<std::string> names = {});
  DataSet(MatrixXd v, BoolMatrix obs, std::vector<std::string> names = {});

  Index n() const { return values.rows(); }
  Index J() const { return values.cols(); }
  Index observed_count(Index j) const { return observed.col(j).count(); }

  /// Throws DataError if shapes disagree, n or J is zero, or an observed
  /// value is not finite.
  void validate() const;
};

/// Cellwise reliability indicator; w(i,j) = true means the cell is reliable.
struct CellIndicator {
  BoolMatrix w;

  Index n() const { return w.rows(); }
  Index J() const { return w.cols(); }
  BoolVector row(Index i) const { return w.row(i).transpose(); }
};

/// Row-stochastic n x K fuzzy memberships.
struct MembershipMatrix {
  MatrixXd u;

  Index n() const { return u.rows(); }
  Index K() const { return u.cols(); }
  /// Index of the largest membership of row i (smallest index on ties).
  Index argmax(Index i) const;
  std::vector<Index> hard_labels() const;
};

struct ClusterParams {
  VectorXd weights;
  std::vector<VectorXd> means;
  std::vector<MatrixXd> covariances;

  Index K() const { return weights.size(); }
  Index J() const { return means.empty() ? 0 : means.front().size(); }
};

struct FitConfig {
  int K = 2;
  double alpha = 0.05;
  double c = 50.0;
  double m = 1.5;
  bool equal_weights = false;
  double tol = 1e-6;
  int max_iter = 500;
  int n_starts = 20;
  std::uint64_t seed = 0;
  /// Worker cap for concurrent starts; results never depend on it.
  int threads = 1;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct FitResult {
  ClusterParams params;
  CellIndicator indicator;
  MembershipMatrix membership;
  /// Data with every unreliable cell replaced by its conditional mean under
  /// the unit's argmax cluster.
  MatrixXd completed;
  std::vector<double> objective_trace;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  int start_index = 0;
  FitConfig config;
  /// Best objective of every start; empty entries mark discarded starts.
  std::vector<std::optional<double>> start_objectives;
};

/// Number of reliable cells to keep in a column with `n_observed` observed
/// cells: ceil((1 - alpha) * n_observed).
Index compute_h(Index n_observed, double alpha);

/// ceil(x) that snaps values within 1e-9 (relative) of an integer onto it.
Index stable_ceil(double x);

}  // namespace cellfclust
