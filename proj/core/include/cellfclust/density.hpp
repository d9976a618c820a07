#pragma once

#include <unordered_map>
#include <vector>

#include "cellfclust/types.hpp"

namespace cellfclust {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Gaussian regression of a target block of variables on a conditioning
/// block: cond_mean = mean_T + coef * (x_R - mean_R), cond_cov = S_TT - coef * S_RT.
struct Regression {
  std::vector<Index> reliable;
  std::vector<Index> target;
  MatrixXd coef;
  MatrixXd cond_cov;
};

/// One cluster's Gaussian with masked evaluations. Factorizations are cached
/// per mask pattern, so an instance must not be shared between threads.
class ClusterGaussian {
 public:
  ClusterGaussian(VectorXd mean, MatrixXd cov, Index cluster_id = -1);

  const VectorXd& mean() const { return mean_; }
  const MatrixXd& cov() const { return cov_; }
  Index cluster_id() const { return cluster_id_; }
  double largest_eigenvalue() const { return lambda_max_; }

  /// log phi(x[mask]; mean[mask], cov[mask, mask]). Zero for an empty mask.
  double log_density(const VectorXd& x, const BoolVector& mask);

  /// Regression of `target` on `reliable` (both J-length selectors).
  /// Cached; the reference lives as long as the evaluator.
  const Regression& regression(const BoolVector& reliable, const BoolVector& target);

  /// Conditional mean and variance of variable j given the cells in
  /// `reliable` other than j.
  void conditional_scalar(const VectorXd& x, const BoolVector& reliable, Index j,
                          double& cond_mean, double& cond_var);

 private:
  struct Factor {
    std::vector<Index> idx;
    Eigen::LLT<MatrixXd> llt;
    double log_det = 0.0;
  };

  const Factor& factor(const BoolVector& mask);
  MatrixXd floored_block(const std::vector<Index>& idx) const;

  VectorXd mean_;
  MatrixXd cov_;
  Index cluster_id_;
  double lambda_max_ = 0.0;
  double diag_floor_ = 0.0;
  double var_floor_ = 0.0;
  std::unordered_map<std::vector<bool>, Factor> factors_;
  std::unordered_map<std::vector<bool>, Regression> regressions_;
};

/// Builds one evaluator per cluster.
std::vector<ClusterGaussian> make_evaluators(const ClusterParams& params);

/// Log-density of the masked sub-vector of x. Returns exactly 0 when the
/// mask is empty. Throws NumericalDomainError if the masked block of `cov`
/// is not positive definite.
double log_density_subset(const VectorXd& x, const BoolVector& mask, const VectorXd& mean,
                          const MatrixXd& cov);

/// Fuzzy classification objective
///   sum_i sum_k u_ik^m [log p_k + log phi(x_i[w_i]; m_k, S_k)]
/// with p_k = 1/K when `equal_weights`. Terms with u_ik = 0 contribute 0.
double objective(const DataSet& data, const CellIndicator& w, const MembershipMatrix& u,
                 const ClusterParams& params, double m, bool equal_weights);

/// Same, reusing caller-owned evaluators.
double objective(const DataSet& data, const CellIndicator& w, const MembershipMatrix& u,
                 const ClusterParams& params, double m, bool equal_weights,
                 std::vector<ClusterGaussian>& evaluators);

/// u^m with 0^m = 0 and 1^m = 1 exactly.
double membership_power(double u, double m);

}  // namespace cellfclust
