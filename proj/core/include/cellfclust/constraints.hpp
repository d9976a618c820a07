#pragma once

#include <vector>

#include "cellfclust/types.hpp"

namespace cellfclust {

/// Spectral decomposition of one cluster's scatter matrix together with the
/// cluster mass sum_i u_ik^m. Eigenvalues are sorted descending.
struct EigenSystem {
  VectorXd eigenvalues;
  MatrixXd eigenvectors;
  double mass = 0.0;

  /// Decomposes a symmetric matrix; negative round-off eigenvalues are
  /// clamped to zero.
  static EigenSystem from_matrix(const MatrixXd& cov, double mass);
  MatrixXd reconstruct() const;
};

/// True iff max eigenvalue / min eigenvalue over all matrices is at most
/// c * (1 + 1e-8). Negative eigenvalues count as zero.
bool check_ratio(const std::vector<MatrixXd>& covariances, double c);

/// Loss minimized by the optimal truncation threshold:
///   sum_k mass_k sum_j [log clip(d_kj) + d_kj / clip(d_kj)],
/// clip(d) = min(max(d, theta), c * theta).
double truncation_loss(const std::vector<EigenSystem>& systems, double theta, double c);

/// The loss-minimizing threshold. Throws DegenerateFitError when every
/// eigenvalue with positive mass is zero or all masses are zero.
double optimal_threshold(const std::vector<EigenSystem>& systems, double c);

/// Rebuilds every covariance with its eigenvalues clipped to
/// [theta*, c * theta*]. Inputs that already satisfy the ratio are returned
/// unchanged.
std::vector<MatrixXd> truncate_eigenvalues(const std::vector<EigenSystem>& systems, double c);

/// Convenience overload: decomposes `covariances` first.
std::vector<MatrixXd> truncate_eigenvalues(const std::vector<MatrixXd>& covariances,
                                           const std::vector<double>& masses, double c);

}  // namespace cellfclust
