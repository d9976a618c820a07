#include "cellfclust/density.hpp"

#include <cmath>
#include <sstream>

#include "cellfclust/error.hpp"

namespace cellfclust {
namespace {

std::vector<bool> mask_key(const BoolVector& mask) {
  std::vector<bool> key(static_cast<std::size_t>(mask.size()));
  for (Index j = 0; j < mask.size(); ++j) key[static_cast<std::size_t>(j)] = mask(j);
  return key;
}

std::vector<Index> mask_indices(const BoolVector& mask) {
  std::vector<Index> idx;
  for (Index j = 0; j < mask.size(); ++j)
    if (mask(j)) idx.push_back(j);
  return idx;
}

}  // namespace

ClusterGaussian::ClusterGaussian(VectorXd mean, MatrixXd cov, Index cluster_id)
    : mean_(std::move(mean)), cov_(std::move(cov)), cluster_id_(cluster_id) {
  if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size())
    throw std::invalid_argument("ClusterGaussian: mean/covariance dimensions disagree");
  if (cov_.size() > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(cov_, Eigen::EigenvaluesOnly);
    lambda_max_ = solver.eigenvalues().maxCoeff();
    var_floor_ = 1e-10 * cov_.diagonal().maxCoeff();
  }
  diag_floor_ = 1e-12 * lambda_max_;
}

MatrixXd ClusterGaussian::floored_block(const std::vector<Index>& idx) const {
  const auto p = static_cast<Index>(idx.size());
  MatrixXd block(p, p);
  for (Index a = 0; a < p; ++a)
    for (Index b = 0; b < p; ++b)
      block(a, b) = cov_(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  for (Index a = 0; a < p; ++a) block(a, a) = std::max(block(a, a), diag_floor_);
  return block;
}

const ClusterGaussian::Factor& ClusterGaussian::factor(const BoolVector& mask) {
  auto key = mask_key(mask);
  if (auto it = factors_.find(key); it != factors_.end()) return it->second;

  Factor f;
  f.idx = mask_indices(mask);
  if (!f.idx.empty()) {
    f.llt.compute(floored_block(f.idx));
    const MatrixXd& L = f.llt.matrixLLT();
    bool ok = f.llt.info() == Eigen::Success;
    double log_det = 0.0;
    for (Index a = 0; ok && a < L.rows(); ++a) {
      ok = L(a, a) > 0.0 && std::isfinite(L(a, a));
      log_det += 2.0 * std::log(L(a, a));
    }
    if (!ok) {
      std::ostringstream os;
      os << "covariance of cluster " << cluster_id_ + 1
         << " restricted to variables {";
      for (std::size_t a = 0; a < f.idx.size(); ++a) os << (a ? "," : "") << f.idx[a] + 1;
      os << "} is not positive definite";
      throw NumericalDomainError(os.str());
    }
    f.log_det = log_det;
  }
  return factors_.emplace(std::move(key), std::move(f)).first->second;
}

double ClusterGaussian::log_density(const VectorXd& x, const BoolVector& mask) {
  const Factor& f = factor(mask);
  if (f.idx.empty()) return 0.0;
  const auto p = static_cast<Index>(f.idx.size());
  VectorXd diff(p);
  for (Index a = 0; a < p; ++a) {
    const Index j = f.idx[static_cast<std::size_t>(a)];
    diff(a) = x(j) - mean_(j);
  }
  const VectorXd z = f.llt.matrixL().solve(diff);
  return -0.5 * (static_cast<double>(p) * kLog2Pi + f.log_det + z.squaredNorm());
}

const Regression& ClusterGaussian::regression(const BoolVector& reliable, const BoolVector& target) {
  std::vector<bool> key = mask_key(reliable);
  const std::vector<bool> tkey = mask_key(target);
  key.insert(key.end(), tkey.begin(), tkey.end());
  if (auto it = regressions_.find(key); it != regressions_.end()) return it->second;

  Regression r;
  r.reliable = mask_indices(reliable);
  r.target = mask_indices(target);
  const auto nt = static_cast<Index>(r.target.size());
  const auto nr = static_cast<Index>(r.reliable.size());

  MatrixXd s_tt(nt, nt);
  for (Index a = 0; a < nt; ++a)
    for (Index b = 0; b < nt; ++b)
      s_tt(a, b) = cov_(r.target[static_cast<std::size_t>(a)], r.target[static_cast<std::size_t>(b)]);

  if (nr == 0) {
    r.coef = MatrixXd::Zero(nt, 0);
    r.cond_cov = s_tt;
  } else {
    MatrixXd s_rt(nr, nt);
    for (Index a = 0; a < nr; ++a)
      for (Index b = 0; b < nt; ++b)
        s_rt(a, b) = cov_(r.reliable[static_cast<std::size_t>(a)], r.target[static_cast<std::size_t>(b)]);
    const Factor& f = factor(reliable);
    const MatrixXd solved = f.llt.solve(s_rt);  // S_RR^{-1} S_RT
    r.coef = solved.transpose();
    r.cond_cov = s_tt - s_rt.transpose() * solved;
    r.cond_cov = 0.5 * (r.cond_cov + r.cond_cov.transpose()).eval();
  }
  return regressions_.emplace(std::move(key), std::move(r)).first->second;
}

void ClusterGaussian::conditional_scalar(const VectorXd& x, const BoolVector& reliable, Index j,
                                         double& cond_mean, double& cond_var) {
  BoolVector others = reliable;
  others(j) = false;
  BoolVector target = BoolVector::Constant(reliable.size(), false);
  target(j) = true;
  const Regression& r = regression(others, target);
  double mu = mean_(j);
  for (std::size_t a = 0; a < r.reliable.size(); ++a) {
    const Index l = r.reliable[a];
    mu += r.coef(0, static_cast<Index>(a)) * (x(l) - mean_(l));
  }
  cond_mean = mu;
  cond_var = std::max(r.cond_cov(0, 0), var_floor_);
}

std::vector<ClusterGaussian> make_evaluators(const ClusterParams& params) {
  std::vector<ClusterGaussian> out;
  out.reserve(static_cast<std::size_t>(params.K()));
  for (Index k = 0; k < params.K(); ++k)
    out.emplace_back(params.means[static_cast<std::size_t>(k)],
                     params.covariances[static_cast<std::size_t>(k)], k);
  return out;
}

double log_density_subset(const VectorXd& x, const BoolVector& mask, const VectorXd& mean,
                          const MatrixXd& cov) {
  if (!mask.any()) return 0.0;
  ClusterGaussian g(mean, cov);
  return g.log_density(x, mask);
}

double membership_power(double u, double m) {
  if (u <= 0.0) return 0.0;
  if (u == 1.0 || m == 1.0) return u;
  return std::pow(u, m);
}

double objective(const DataSet& data, const CellIndicator& w, const MembershipMatrix& u,
                 const ClusterParams& params, double m, bool equal_weights,
                 std::vector<ClusterGaussian>& evaluators) {
  const Index K = params.K();
  VectorXd log_p(K);
  for (Index k = 0; k < K; ++k)
    log_p(k) = equal_weights ? -std::log(static_cast<double>(K)) : std::log(params.weights(k));

  double total = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const VectorXd x = data.values.row(i).transpose();
    const BoolVector mask = w.row(i);
    for (Index k = 0; k < K; ++k) {
      const double um = membership_power(u.u(i, k), m);
      if (um == 0.0) continue;
      total += um * (log_p(k) + evaluators[static_cast<std::size_t>(k)].log_density(x, mask));
    }
  }
  return total;
}

double objective(const DataSet& data, const CellIndicator& w, const MembershipMatrix& u,
                 const ClusterParams& params, double m, bool equal_weights) {
  auto evaluators = make_evaluators(params);
  return objective(data, w, u, params, m, equal_weights, evaluators);
}

}  // namespace cellfclust
