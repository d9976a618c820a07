#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's estimation code.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cellfclust/types.hpp"

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Random SPD matrix with eigenvalues log-uniform in [lo, hi].
MatrixXd random_spd(Index J, std::mt19937_64& rng, double lo = 0.1, double hi = 10.0);

/// Gaussian log density through a dense inverse and determinant.
double dense_log_density(const VectorXd& x, const VectorXd& mean, const MatrixXd& cov);

/// Conditional moments of the unreliable block from the joint precision matrix.
void precision_conditional(const std::vector<bool>& reliable, const VectorXd& x, const VectorXd& mean,
                           const MatrixXd& cov, VectorXd& cond_mean, MatrixXd& cond_cov);

/// Truncation loss: sum_k mass_k sum_l [log t_kl + d_kl / t_kl], t = clip(d, theta, c theta).
double truncation_loss(const std::vector<VectorXd>& eigenvalues, const std::vector<double>& masses,
                       double theta, double c);

/// Minimum of the truncation loss over theta: 1e5-point log grid, then
/// golden-section refinement around the best grid point.
double truncation_min(const std::vector<VectorXd>& eigenvalues, const std::vector<double>& masses,
                      double c, double* argmin = nullptr);

/// max over the simplex of sum_k u_k^m L_k, by pairwise golden-section sweeps.
double simplex_max(const VectorXd& L, double m);

/// Exhaustive best size-h subset of the candidates maximizing the sum of scores.
std::vector<Index> best_subset(const std::vector<double>& scores, const std::vector<Index>& candidates,
                               Index h);

/// Adjusted Rand index between two labelings.
double adjusted_rand(const std::vector<Index>& a, const std::vector<Index>& b);

struct FlagScore {
  Index true_positive = 0;
  Index false_positive = 0;
  Index false_negative = 0;
  double precision() const;
  double recall() const;
};

/// Flagged = observed and not reliable, scored against a ground-truth mask.
FlagScore score_flags(const cellfclust::CellIndicator& w, const cellfclust::BoolMatrix& observed,
                      const cellfclust::BoolMatrix& truth);

}  // namespace oracle
