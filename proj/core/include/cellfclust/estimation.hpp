#pragma once

#include <vector>

#include "cellfclust/density.hpp"
#include "cellfclust/init.hpp"
#include "cellfclust/types.hpp"

namespace cellfclust {

/// Moments of a unit's unreliable cells given its reliable ones under one
/// cluster. `unreliable` lists the variables in ascending order.
struct ConditionalMoments {
  std::vector<Index> unreliable;
  VectorXd cond_mean;
  MatrixXd cond_cov;
};

/// Conditional moments of the cells outside `reliable_mask`. `x_reliable`
/// holds the reliable values in variable order.
ConditionalMoments conditional_moments(const BoolVector& reliable_mask, const VectorXd& x_reliable,
                                       const VectorXd& mean, const MatrixXd& cov);

/// Per observed cell (i, j):
///   Delta_ij = -1/2 sum_k u_ik^m [log 2pi + log C + (x_ij - xhat)^2 / C]
/// where (xhat, C) condition variable j on the unit's other reliable cells.
/// Unobserved cells hold NaN.
MatrixXd compute_delta(const DataSet& data, const CellIndicator& w, const MembershipMatrix& u,
                       const ClusterParams& params, double m);

/// Delta for a single column, reusing evaluators.
VectorXd compute_delta_column(const DataSet& data, const CellIndicator& w,
                              const MembershipMatrix& u, double m, Index j,
                              std::vector<ClusterGaussian>& evaluators);

/// Keeps the h_j observed cells with the largest Delta in each column
/// reliable (ties: smaller row index wins). Throws ConfigError if some
/// column would keep no cell.
CellIndicator concentration_step(const MatrixXd& delta, const BoolMatrix& observed, double alpha);

/// Top-h selection on one column; writes the column of `w`.
void concentrate_column(const VectorXd& delta, const BoolMatrix& observed, Index j, Index h,
                        BoolMatrix& w);

/// L_ik = log p_k + log phi(x_i[w_i]; m_k, S_k), p_k = 1/K when `equal_weights`.
MatrixXd log_fit_matrix(const DataSet& data, const CellIndicator& w, const ClusterParams& params,
                        bool equal_weights, std::vector<ClusterGaussian>& evaluators);

/// Crisp argmax when max_k L_ik >= 0 or m == 1, otherwise
/// u_ik = 1 / sum_k' (L_ik / L_ik')^(1/(m-1)).
MembershipMatrix update_membership(const MatrixXd& log_fit, double m);

/// moments[i][k]; left empty where u_ik = 0 or the unit is fully reliable.
using MomentTable = std::vector<std::vector<ConditionalMoments>>;

MomentTable compute_moments(const DataSet& data, const CellIndicator& w, const MembershipMatrix& u,
                            std::vector<ClusterGaussian>& evaluators);

/// Weighted M-step on the per-cluster completed data followed by eigenvalue
/// truncation with masses sum_i u_ik^m. Throws DegenerateFitError when a
/// cluster mass drops below 1e-10.
ClusterParams m_step(const DataSet& data, const CellIndicator& w, const MembershipMatrix& u,
                     const MomentTable& moments, double m, double c, bool equal_weights);

/// Imputes each unreliable cell with its conditional mean under the unit's
/// argmax cluster.
MatrixXd complete_data(const DataSet& data, const CellIndicator& w, const MembershipMatrix& u,
                       std::vector<ClusterGaussian>& evaluators);

/// One run of the alternating algorithm from `init`.
FitResult fit_single(const DataSet& data, const FitConfig& config, const InitialState& init);

/// Multi-start driver: n_starts runs seeded with config.seed + start index,
/// best objective wins (ties: smallest start index). Throws
/// DegenerateFitError when every start fails.
FitResult fit(const DataSet& data, const FitConfig& config);

}  // namespace cellfclust
