#include "cellfclust/init.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cellfclust/constraints.hpp"
#include "cellfclust/density.hpp"
#include "cellfclust/error.hpp"
#include "cellfclust/estimation.hpp"
#include "cellfclust/robust.hpp"

namespace cellfclust {
namespace {

constexpr double kMadFloor = 1e-12;
constexpr double kRidge = 1e-6;

std::size_t sz(Index i) { return static_cast<std::size_t>(i); }

}  // namespace

CellIndicator marginal_indicator(const DataSet& data, double alpha) {
  CellIndicator out;
  out.w = BoolMatrix::Constant(data.n(), data.J(), false);
  for (Index j = 0; j < data.J(); ++j) {
    std::vector<Index> rows;
    std::vector<double> vals;
    for (Index i = 0; i < data.n(); ++i)
      if (data.observed(i, j)) {
        rows.push_back(i);
        vals.push_back(data.values(i, j));
      }
    if (rows.empty()) throw ConfigError("variable " + std::to_string(j + 1) + " has no observed values");
    const double med = median(vals);
    double scale = mad(vals);
    if (!(scale > 0.0)) scale = kMadFloor;

    const Index h = compute_h(static_cast<Index>(rows.size()), alpha);
    if (h == 0) throw ConfigError("variable " + std::to_string(j + 1) + " would keep no reliable cell");
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(vals[a] - med) / scale < std::abs(vals[b] - med) / scale;
    });
    for (Index r = 0; r < h; ++r) out.w(rows[order[sz(r)]], j) = true;
  }
  return out;
}

InitialState initialize(const DataSet& data, const FitConfig& config, std::uint64_t start_seed) {
  config.validate();
  data.validate();
  const Index n = data.n();
  const Index J = data.J();
  const Index K = config.K;

  InitialState state;
  state.w0 = marginal_indicator(data, config.alpha);
  const BoolMatrix& w = state.w0.w;

  // Column medians of the reliable cells stand in for unreliable ones.
  VectorXd fill(J);
  double average_variance = 0.0;
  for (Index j = 0; j < J; ++j) {
    std::vector<double> vals;
    for (Index i = 0; i < n; ++i)
      if (w(i, j)) vals.push_back(data.values(i, j));
    fill(j) = median(vals);
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    average_variance += var / static_cast<double>(vals.size());
  }
  average_variance /= static_cast<double>(J);
  if (!(average_variance > 0.0)) average_variance = 1.0;

  MatrixXd filled = data.values;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < J; ++j)
      if (!w(i, j)) filled(i, j) = fill(j);

  std::mt19937_64 rng(start_seed);
  if (K == 1) {
    std::vector<Index> all(sz(n));
    std::iota(all.begin(), all.end(), Index{0});
    state.seed_units.push_back(std::move(all));
  } else {
    Index group = J + 1;
    if (K * group > n) {
      if (n < 2 * K)
        throw ConfigError("too few units (" + std::to_string(n) + ") to seed " + std::to_string(K) +
                          " clusters");
      group = 2;
    }
    std::vector<Index> pool(sz(n));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index a = 0; a < K * group; ++a) {
      std::uniform_int_distribution<Index> pick(a, n - 1);
      std::swap(pool[sz(a)], pool[sz(pick(rng))]);
    }
    for (Index k = 0; k < K; ++k)
      state.seed_units.emplace_back(pool.begin() + k * group, pool.begin() + (k + 1) * group);
  }

  std::vector<MatrixXd> covs;
  state.params0.weights = VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  for (const auto& units : state.seed_units) {
    VectorXd mean = VectorXd::Zero(J);
    for (Index i : units) mean += filled.row(i).transpose();
    mean /= static_cast<double>(units.size());
    MatrixXd cov = MatrixXd::Zero(J, J);
    for (Index i : units) {
      const VectorXd d = filled.row(i).transpose() - mean;
      cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(units.size());
    cov.diagonal().array() += kRidge * average_variance;
    state.params0.means.push_back(std::move(mean));
    covs.push_back(std::move(cov));
  }
  state.params0.covariances = truncate_eigenvalues(covs, std::vector<double>(sz(K), 1.0), config.c);

  auto evaluators = make_evaluators(state.params0);
  const MatrixXd L = log_fit_matrix(data, state.w0, state.params0, config.equal_weights, evaluators);
  state.u0 = update_membership(L, config.m);
  return state;
}

}  // namespace cellfclust
