#include "cellfclust/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "cellfclust/constraints.hpp"
#include "cellfclust/error.hpp"

namespace cellfclust {
namespace {

constexpr double kDegenerateMass = 1e-10;

std::size_t sz(Index i) { return static_cast<std::size_t>(i); }

std::vector<Index> column_h(const DataSet& data, double alpha) {
  std::vector<Index> h(sz(data.J()));
  for (Index j = 0; j < data.J(); ++j) {
    const Index n_obs = data.observed_count(j);
    h[sz(j)] = n_obs == 0 ? 0 : compute_h(n_obs, alpha);
    if (h[sz(j)] == 0)
      throw ConfigError("variable " + std::to_string(j + 1) +
                        " would keep no reliable cell (no observed values or alpha too large)");
  }
  return h;
}

}  // namespace

ConditionalMoments conditional_moments(const BoolVector& reliable_mask, const VectorXd& x_reliable,
                                       const VectorXd& mean, const MatrixXd& cov) {
  const Index J = reliable_mask.size();
  if (x_reliable.size() != reliable_mask.count())
    throw std::invalid_argument("conditional_moments: x_reliable must hold one value per reliable cell");
  VectorXd x = VectorXd::Constant(J, std::numeric_limits<double>::quiet_NaN());
  for (Index j = 0, a = 0; j < J; ++j)
    if (reliable_mask(j)) x(j) = x_reliable(a++);

  ClusterGaussian g(mean, cov);
  const BoolVector target = !reliable_mask;
  ConditionalMoments out;
  if (!target.any()) {
    out.cond_mean = VectorXd(0);
    out.cond_cov = MatrixXd(0, 0);
    return out;
  }
  const Regression& r = g.regression(reliable_mask, target);
  out.unreliable = r.target;
  const auto nt = static_cast<Index>(r.target.size());
  out.cond_mean.resize(nt);
  for (Index a = 0; a < nt; ++a) {
    double mu = mean(r.target[sz(a)]);
    for (std::size_t b = 0; b < r.reliable.size(); ++b) {
      const Index l = r.reliable[b];
      mu += r.coef(a, static_cast<Index>(b)) * (x(l) - mean(l));
    }
    out.cond_mean(a) = mu;
  }
  out.cond_cov = r.cond_cov;
  return out;
}

VectorXd compute_delta_column(const DataSet& data, const CellIndicator& w,
                              const MembershipMatrix& u, double m, Index j,
                              std::vector<ClusterGaussian>& evaluators) {
  const Index n = data.n();
  VectorXd delta = VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  for (Index i = 0; i < n; ++i) {
    if (!data.observed(i, j)) continue;
    const VectorXd x = data.values.row(i).transpose();
    const BoolVector reliable = w.row(i);
    double sum = 0.0;
    // Fixed summation order over clusters keeps the result bit-stable.
    for (std::size_t k = 0; k < evaluators.size(); ++k) {
      const double um = membership_power(u.u(i, static_cast<Index>(k)), m);
      if (um == 0.0) continue;
      double xhat = 0.0;
      double cvar = 1.0;
      evaluators[k].conditional_scalar(x, reliable, j, xhat, cvar);
      const double r = x(j) - xhat;
      sum += um * (kLog2Pi + std::log(cvar) + r * r / cvar);
    }
    delta(i) = -0.5 * sum;
  }
  return delta;
}

MatrixXd compute_delta(const DataSet& data, const CellIndicator& w, const MembershipMatrix& u,
                       const ClusterParams& params, double m) {
  auto evaluators = make_evaluators(params);
  MatrixXd delta(data.n(), data.J());
  for (Index j = 0; j < data.J(); ++j)
    delta.col(j) = compute_delta_column(data, w, u, m, j, evaluators);
  return delta;
}

void concentrate_column(const VectorXd& delta, const BoolMatrix& observed, Index j, Index h,
                        BoolMatrix& w) {
  std::vector<Index> rows;
  for (Index i = 0; i < observed.rows(); ++i) {
    w(i, j) = false;
    if (observed(i, j)) rows.push_back(i);
  }
  const auto keep = std::min<std::size_t>(sz(h), rows.size());
  std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(keep), rows.end(),
                    [&](Index a, Index b) {
                      if (delta(a) != delta(b)) return delta(a) > delta(b);
                      return a < b;
                    });
  for (std::size_t r = 0; r < keep; ++r) w(rows[r], j) = true;
}

CellIndicator concentration_step(const MatrixXd& delta, const BoolMatrix& observed, double alpha) {
  if (delta.rows() != observed.rows() || delta.cols() != observed.cols())
    throw std::invalid_argument("concentration_step: delta and mask shapes differ");
  CellIndicator out;
  out.w = BoolMatrix::Constant(observed.rows(), observed.cols(), false);
  for (Index j = 0; j < observed.cols(); ++j) {
    const Index n_obs = observed.col(j).count();
    const Index h = n_obs == 0 ? 0 : compute_h(n_obs, alpha);
    if (h == 0)
      throw ConfigError("variable " + std::to_string(j + 1) + " would keep no reliable cell");
    concentrate_column(delta.col(j), observed, j, h, out.w);
  }
  return out;
}

MatrixXd log_fit_matrix(const DataSet& data, const CellIndicator& w, const ClusterParams& params,
                        bool equal_weights, std::vector<ClusterGaussian>& evaluators) {
  const Index K = params.K();
  MatrixXd L(data.n(), K);
  for (Index i = 0; i < data.n(); ++i) {
    const VectorXd x = data.values.row(i).transpose();
    const BoolVector mask = w.row(i);
    for (Index k = 0; k < K; ++k) {
      const double log_p = equal_weights ? -std::log(static_cast<double>(K)) : std::log(params.weights(k));
      L(i, k) = log_p + evaluators[sz(k)].log_density(x, mask);
    }
  }
  return L;
}

MembershipMatrix update_membership(const MatrixXd& log_fit, double m) {
  const Index n = log_fit.rows();
  const Index K = log_fit.cols();
  MembershipMatrix out;
  out.u = MatrixXd::Zero(n, K);
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    for (Index k = 1; k < K; ++k)
      if (log_fit(i, k) > log_fit(i, best)) best = k;
    if (m == 1.0 || log_fit(i, best) >= 0.0) {
      out.u(i, best) = 1.0;
      continue;
    }
    const double expo = 1.0 / (m - 1.0);
    for (Index k = 0; k < K; ++k) {
      double s = 0.0;
      for (Index kk = 0; kk < K; ++kk) s += std::pow(log_fit(i, k) / log_fit(i, kk), expo);
      out.u(i, k) = 1.0 / s;
    }
    out.u.row(i) /= out.u.row(i).sum();
  }
  return out;
}

MomentTable compute_moments(const DataSet& data, const CellIndicator& w, const MembershipMatrix& u,
                            std::vector<ClusterGaussian>& evaluators) {
  const Index n = data.n();
  const auto K = static_cast<Index>(evaluators.size());
  MomentTable table(sz(n), std::vector<ConditionalMoments>(sz(K)));
  for (Index i = 0; i < n; ++i) {
    const BoolVector reliable = w.row(i);
    if (reliable.all()) continue;
    const BoolVector target = !reliable;
    for (Index k = 0; k < K; ++k) {
      if (u.u(i, k) <= 0.0) continue;
      ClusterGaussian& g = evaluators[sz(k)];
      const Regression& r = g.regression(reliable, target);
      ConditionalMoments& cm = table[sz(i)][sz(k)];
      cm.unreliable = r.target;
      const auto nt = static_cast<Index>(r.target.size());
      cm.cond_mean.resize(nt);
      for (Index a = 0; a < nt; ++a) {
        double mu = g.mean()(r.target[sz(a)]);
        for (std::size_t b = 0; b < r.reliable.size(); ++b) {
          const Index l = r.reliable[b];
          mu += r.coef(a, static_cast<Index>(b)) * (data.values(i, l) - g.mean()(l));
        }
        cm.cond_mean(a) = mu;
      }
      cm.cond_cov = r.cond_cov;
    }
  }
  return table;
}

ClusterParams m_step(const DataSet& data, const CellIndicator& w, const MembershipMatrix& u,
                     const MomentTable& moments, double m, double c, bool equal_weights) {
  const Index n = data.n();
  const Index J = data.J();
  const Index K = u.K();

  VectorXd mass = VectorXd::Zero(K);
  MatrixXd um(n, K);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < K; ++k) {
      um(i, k) = membership_power(u.u(i, k), m);
      mass(k) += um(i, k);
    }
  for (Index k = 0; k < K; ++k)
    if (!(mass(k) >= kDegenerateMass))
      throw DegenerateFitError("cluster " + std::to_string(k + 1) + " collapsed (mass " +
                               std::to_string(mass(k)) + ")");

  ClusterParams out;
  out.weights = equal_weights ? VectorXd::Constant(K, 1.0 / static_cast<double>(K))
                              : VectorXd(mass / mass.sum());
  out.means.assign(sz(K), VectorXd::Zero(J));
  std::vector<MatrixXd> scatter(sz(K), MatrixXd::Zero(J, J));

  auto completed = [&](Index i, Index k) {
    VectorXd x = data.values.row(i).transpose();
    const ConditionalMoments& cm = moments[sz(i)][sz(k)];
    const Index unreliable = J - w.w.row(i).count();
    if (static_cast<Index>(cm.unreliable.size()) != unreliable)
      throw std::logic_error("m_step: missing conditional moments for a unit with unreliable cells");
    for (std::size_t a = 0; a < cm.unreliable.size(); ++a) x(cm.unreliable[a]) = cm.cond_mean(static_cast<Index>(a));
    return x;
  };

  for (Index k = 0; k < K; ++k) {
    VectorXd& mu = out.means[sz(k)];
    for (Index i = 0; i < n; ++i)
      if (um(i, k) > 0.0) mu += um(i, k) * completed(i, k);
    mu /= mass(k);

    MatrixXd& s = scatter[sz(k)];
    for (Index i = 0; i < n; ++i) {
      if (um(i, k) == 0.0) continue;
      const VectorXd d = completed(i, k) - mu;
      s.noalias() += um(i, k) * (d * d.transpose());
      const ConditionalMoments& cm = moments[sz(i)][sz(k)];
      for (std::size_t a = 0; a < cm.unreliable.size(); ++a)
        for (std::size_t b = 0; b < cm.unreliable.size(); ++b)
          s(cm.unreliable[a], cm.unreliable[b]) +=
              um(i, k) * cm.cond_cov(static_cast<Index>(a), static_cast<Index>(b));
    }
    s /= mass(k);
    s = (0.5 * (s + s.transpose())).eval();
  }

  std::vector<double> masses(mass.data(), mass.data() + K);
  out.covariances = truncate_eigenvalues(scatter, masses, c);
  return out;
}

MatrixXd complete_data(const DataSet& data, const CellIndicator& w, const MembershipMatrix& u,
                       std::vector<ClusterGaussian>& evaluators) {
  MatrixXd out = data.values;
  for (Index i = 0; i < data.n(); ++i) {
    const BoolVector reliable = w.row(i);
    if (reliable.all()) continue;
    ClusterGaussian& g = evaluators[sz(u.argmax(i))];
    const Regression& r = g.regression(reliable, !reliable);
    for (std::size_t a = 0; a < r.target.size(); ++a) {
      double mu = g.mean()(r.target[a]);
      for (std::size_t b = 0; b < r.reliable.size(); ++b) {
        const Index l = r.reliable[b];
        mu += r.coef(static_cast<Index>(a), static_cast<Index>(b)) * (data.values(i, l) - g.mean()(l));
      }
      out(i, r.target[a]) = mu;
    }
  }
  return out;
}

FitResult fit_single(const DataSet& data, const FitConfig& config, const InitialState& init) {
  config.validate();
  data.validate();
  if (init.params0.K() != config.K || init.u0.K() != config.K)
    throw ConfigError("initial state has a different number of clusters than the configuration");

  const std::vector<Index> h = column_h(data, config.alpha);
  const double m = config.m;

  CellIndicator w = init.w0;
  MembershipMatrix u = init.u0;
  ClusterParams params = init.params0;
  auto evaluators = make_evaluators(params);
  double previous = objective(data, w, u, params, m, config.equal_weights, evaluators);

  FitResult result;
  result.config = config;
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    // Step 1: column-wise concentration. Delta of column j is evaluated with
    // the columns before j already updated.
    for (Index j = 0; j < data.J(); ++j) {
      const VectorXd delta = compute_delta_column(data, w, u, m, j, evaluators);
      concentrate_column(delta, data.observed, j, h[sz(j)], w.w);
    }
    // Step 2
    const MatrixXd L = log_fit_matrix(data, w, params, config.equal_weights, evaluators);
    u = update_membership(L, m);
    // Steps 3 and 4
    const MomentTable moments = compute_moments(data, w, u, evaluators);
    params = m_step(data, w, u, moments, m, config.c, config.equal_weights);
    evaluators = make_evaluators(params);

    const double current = objective(data, w, u, params, m, config.equal_weights, evaluators);
    result.objective_trace.push_back(current);
    result.iterations = iter;
    if (current - previous < config.tol) {
      result.converged = true;
      break;
    }
    previous = current;
  }

  result.completed = complete_data(data, w, u, evaluators);
  result.objective = result.objective_trace.back();
  result.params = std::move(params);
  result.indicator = std::move(w);
  result.membership = std::move(u);
  return result;
}

FitResult fit(const DataSet& data, const FitConfig& config) {
  config.validate();
  data.validate();
  const auto starts = static_cast<std::size_t>(config.n_starts);
  std::vector<std::optional<FitResult>> results(starts);
  std::vector<std::exception_ptr> fatal(starts);

  auto run = [&](std::size_t s) {
    try {
      const InitialState init = initialize(data, config, config.seed + s);
      results[s] = fit_single(data, config, init);
    } catch (const DegenerateFitError&) {
    } catch (const NumericalDomainError&) {
    } catch (...) {
      fatal[s] = std::current_exception();
    }
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), starts);
  if (workers <= 1) {
    for (std::size_t s = 0; s < starts; ++s) run(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (std::size_t s = next++; s < starts; s = next++) run(s);
      });
  }
  for (const auto& e : fatal)
    if (e) std::rethrow_exception(e);

  std::optional<std::size_t> best;
  std::vector<std::optional<double>> objectives(starts);
  for (std::size_t s = 0; s < starts; ++s) {
    if (!results[s]) continue;
    objectives[s] = results[s]->objective;
    if (!best || results[s]->objective > results[*best]->objective) best = s;
  }
  if (!best) throw DegenerateFitError("all " + std::to_string(starts) + " starts were degenerate");

  FitResult out = std::move(*results[*best]);
  out.start_index = static_cast<int>(*best);
  out.start_objectives = std::move(objectives);
  return out;
}

}  // namespace cellfclust
