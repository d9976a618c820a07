#include "cellfclust/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cellfclust/error.hpp"

namespace cellfclust {
namespace {

double clip(double d, double theta, double c) { return std::min(std::max(d, theta), c * theta); }

bool eigenvalues_feasible(const std::vector<VectorXd>& eigenvalues, double c) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& d : eigenvalues) {
    for (Index j = 0; j < d.size(); ++j) {
      const double v = std::max(d(j), 0.0);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi == 0.0) return true;
  if (lo == 0.0) return false;
  return hi / lo <= c * (1.0 + 1e-8);
}

}  // namespace

EigenSystem EigenSystem::from_matrix(const MatrixXd& cov, double mass) {
  const MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(sym);
  const Index J = sym.rows();
  EigenSystem es;
  es.mass = mass;
  es.eigenvalues.resize(J);
  es.eigenvectors.resize(J, J);
  // The solver sorts ascending; store descending.
  for (Index j = 0; j < J; ++j) {
    es.eigenvalues(j) = std::max(solver.eigenvalues()(J - 1 - j), 0.0);
    es.eigenvectors.col(j) = solver.eigenvectors().col(J - 1 - j);
  }
  return es;
}

MatrixXd EigenSystem::reconstruct() const {
  MatrixXd out = eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  return 0.5 * (out + out.transpose());
}

bool check_ratio(const std::vector<MatrixXd>& covariances, double c) {
  std::vector<VectorXd> eig;
  eig.reserve(covariances.size());
  for (const auto& s : covariances) {
    const MatrixXd sym = 0.5 * (s + s.transpose());
    eig.push_back(Eigen::SelfAdjointEigenSolver<MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues());
  }
  return eigenvalues_feasible(eig, c);
}

double truncation_loss(const std::vector<EigenSystem>& systems, double theta, double c) {
  double loss = 0.0;
  for (const auto& es : systems) {
    if (es.mass == 0.0) continue;
    double inner = 0.0;
    for (Index j = 0; j < es.eigenvalues.size(); ++j) {
      const double d = es.eigenvalues(j);
      const double t = clip(d, theta, c);
      inner += std::log(t) + d / t;
    }
    loss += es.mass * inner;
  }
  return loss;
}

double optimal_threshold(const std::vector<EigenSystem>& systems, double c) {
  double total_mass = 0.0;
  double weighted = 0.0;
  std::vector<double> breaks;
  for (const auto& es : systems) {
    if (es.mass < 0.0) throw DegenerateFitError("negative cluster mass in eigenvalue truncation");
    total_mass += es.mass;
    for (Index j = 0; j < es.eigenvalues.size(); ++j) {
      const double d = es.eigenvalues(j);
      weighted += es.mass * d;
      if (d > 0.0) {
        breaks.push_back(d);
        breaks.push_back(d / c);
      }
    }
  }
  if (total_mass <= 0.0) throw DegenerateFitError("all cluster masses are zero");
  if (weighted <= 0.0 || breaks.empty())
    throw DegenerateFitError("all covariance eigenvalues are zero (collapsed clusters)");

  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  std::vector<double> candidates = breaks;
  // Within each interval the clipping pattern is fixed and the stationary
  // point is a mass-weighted mean of the clipped eigenvalues.
  for (std::size_t b = 0; b < breaks.size(); ++b) {
    const double lo = b == 0 ? 0.0 : breaks[b - 1];
    const double hi = breaks[b];
    const double probe = 0.5 * (lo + hi);
    double num = 0.0;
    double den = 0.0;
    for (const auto& es : systems) {
      if (es.mass == 0.0) continue;
      for (Index j = 0; j < es.eigenvalues.size(); ++j) {
        const double d = es.eigenvalues(j);
        if (d < probe) {
          num += es.mass * d;
          den += es.mass;
        } else if (d > c * probe) {
          num += es.mass * d / c;
          den += es.mass;
        }
      }
    }
    if (den <= 0.0) continue;
    const double theta = std::clamp(num / den, lo, hi);
    if (theta > 0.0) candidates.push_back(theta);
  }

  double best_theta = candidates.front();
  double best_loss = truncation_loss(systems, best_theta, c);
  for (double theta : candidates) {
    const double l = truncation_loss(systems, theta, c);
    if (l < best_loss) {
      best_loss = l;
      best_theta = theta;
    }
  }
  return best_theta;
}

std::vector<MatrixXd> truncate_eigenvalues(const std::vector<EigenSystem>& systems, double c) {
  if (!(c >= 1.0)) throw ConfigError("eigenvalue-ratio bound c must be >= 1");
  std::vector<VectorXd> eig;
  eig.reserve(systems.size());
  for (const auto& es : systems) eig.push_back(es.eigenvalues);

  std::vector<MatrixXd> out;
  out.reserve(systems.size());
  bool any_positive = false;
  for (const auto& d : eig) any_positive = any_positive || (d.array() > 0.0).any();
  if (!any_positive) throw DegenerateFitError("all covariance eigenvalues are zero (collapsed clusters)");

  if (eigenvalues_feasible(eig, c)) {
    for (const auto& es : systems) out.push_back(es.reconstruct());
    return out;
  }

  const double theta = optimal_threshold(systems, c);
  for (const auto& es : systems) {
    EigenSystem clipped = es;
    for (Index j = 0; j < clipped.eigenvalues.size(); ++j)
      clipped.eigenvalues(j) = clip(es.eigenvalues(j), theta, c);
    out.push_back(clipped.reconstruct());
  }
  return out;
}

std::vector<MatrixXd> truncate_eigenvalues(const std::vector<MatrixXd>& covariances,
                                           const std::vector<double>& masses, double c) {
  if (covariances.size() != masses.size())
    throw std::invalid_argument("truncate_eigenvalues: one mass per covariance required");
  std::vector<EigenSystem> systems;
  systems.reserve(covariances.size());
  std::vector<VectorXd> eig;
  for (std::size_t k = 0; k < covariances.size(); ++k) {
    systems.push_back(EigenSystem::from_matrix(covariances[k], masses[k]));
    eig.push_back(systems.back().eigenvalues);
  }
  bool any_positive = false;
  for (const auto& d : eig) any_positive = any_positive || (d.array() > 0.0).any();
  if (any_positive && eigenvalues_feasible(eig, c)) return covariances;
  return truncate_eigenvalues(systems, c);
}

}  // namespace cellfclust
