#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cellfclust/types.hpp"

namespace cellfclust {

struct TuningRow {
  int K = 0;
  double alpha = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  FitResult fit;
};

struct TuningFailure {
  int K = 0;
  double alpha = 0.0;
  std::string reason;
};

/// One fit per (K, alpha); failed cells are listed in `failures`, not `rows`.
/// Rows are ordered K-major, then alpha, as in the input lists.
struct TuningGridResult {
  std::vector<int> K_list;
  std::vector<double> alpha_list;
  std::vector<TuningRow> rows;
  std::vector<TuningFailure> failures;

  const TuningRow* find(int K, double alpha) const;
};

TuningGridResult objective_curves(const DataSet& data, const std::vector<int>& K_list,
                                  const std::vector<double>& alpha_list,
                                  const FitConfig& base_config);

/// Sorted Delta curve of one variable: points (rank / n_observed, Delta_(rank)).
struct DeltaCurve {
  Index variable = 0;
  std::vector<double> proportion;
  std::vector<double> delta;
};

/// Delta recomputed at the fitted parameters, sorted ascending per variable.
std::vector<DeltaCurve> delta_plot_data(const FitResult& result, const DataSet& data);

/// Knee of an ascending curve: both axes min-max rescaled to [0, 1], the
/// point with the largest vertical distance above the chord joining the
/// endpoints (first point on ties). Returns its index, or nullopt for fewer
/// than 3 points.
std::optional<std::size_t> knee_index(const std::vector<double>& x, const std::vector<double>& y);

struct KneeRow {
  double alpha = 0.0;
  /// Knee proportion per variable; nullopt where the column was skipped.
  std::vector<std::optional<double>> knees;
  double median_diff = 0.0;
  double mad_diff = 0.0;
};

struct KneeSummary {
  int K = 0;
  std::vector<KneeRow> rows;
};

KneeSummary knee_points(const DataSet& data, const std::vector<double>& alpha_list, int K,
                        const FitConfig& base_config);

/// Knee row for an existing fit.
KneeRow knee_row(const FitResult& result, const DataSet& data);

struct WeakAssignment {
  Index unit = 0;
  VectorXd membership;
};

/// Fractions in [0, 1]: rows whose largest membership is exactly 1, and rows
/// whose largest membership is below the threshold.
struct AssignmentStats {
  double pct_hard = 0.0;
  double pct_weak = 0.0;
  std::vector<WeakAssignment> weak;
};

AssignmentStats assignment_stats(const MembershipMatrix& u, double wa_threshold = 0.9);

enum class CellStatus { reliable, imputed_above, imputed_below, imputed_equal, missing };

const char* to_string(CellStatus status);

struct OutlierSummary {
  /// proportions(j, k): flagged observed cells of variable j whose unit's
  /// argmax cluster is k, divided by n.
  MatrixXd proportions;
  /// status(i, j) for every cell.
  std::vector<std::vector<CellStatus>> status;
};

OutlierSummary outlier_summary(const FitResult& result, const DataSet& data);

}  // namespace cellfclust
