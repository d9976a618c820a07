#include "cellfclust/tuning.hpp"

#include <algorithm>
#include <cmath>

#include "cellfclust/error.hpp"
#include "cellfclust/estimation.hpp"
#include "cellfclust/robust.hpp"

namespace cellfclust {

const TuningRow* TuningGridResult::find(int K, double alpha) const {
  for (const auto& row : rows)
    if (row.K == K && row.alpha == alpha) return &row;
  return nullptr;
}

TuningGridResult objective_curves(const DataSet& data, const std::vector<int>& K_list,
                                  const std::vector<double>& alpha_list,
                                  const FitConfig& base_config) {
  if (K_list.empty() || alpha_list.empty()) throw ConfigError("tuning grid lists must be non-empty");
  TuningGridResult grid;
  grid.K_list = K_list;
  grid.alpha_list = alpha_list;
  for (int K : K_list) {
    for (double alpha : alpha_list) {
      FitConfig cfg = base_config;
      cfg.K = K;
      cfg.alpha = alpha;
      try {
        FitResult r = fit(data, cfg);
        TuningRow row;
        row.K = K;
        row.alpha = alpha;
        row.objective = r.objective;
        row.iterations = r.iterations;
        row.converged = r.converged;
        row.fit = std::move(r);
        grid.rows.push_back(std::move(row));
      } catch (const Error& e) {
        grid.failures.push_back({K, alpha, e.what()});
      }
    }
  }
  return grid;
}

std::vector<DeltaCurve> delta_plot_data(const FitResult& result, const DataSet& data) {
  const MatrixXd delta = compute_delta(data, result.indicator, result.membership, result.params,
                                       result.config.m);
  std::vector<DeltaCurve> curves;
  for (Index j = 0; j < data.J(); ++j) {
    DeltaCurve curve;
    curve.variable = j;
    for (Index i = 0; i < data.n(); ++i)
      if (data.observed(i, j)) curve.delta.push_back(delta(i, j));
    std::sort(curve.delta.begin(), curve.delta.end());
    const auto n_obs = static_cast<double>(curve.delta.size());
    for (std::size_t r = 0; r < curve.delta.size(); ++r)
      curve.proportion.push_back(static_cast<double>(r + 1) / n_obs);
    curves.push_back(std::move(curve));
  }
  return curves;
}

std::optional<std::size_t> knee_index(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("knee_index: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 3) return std::nullopt;

  auto rescale = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double span = *hi - *lo;
    std::vector<double> out(v.size(), 0.0);
    if (span > 0.0)
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / span;
    return out;
  };
  const std::vector<double> xs = rescale(x);
  const std::vector<double> ys = rescale(y);

  const double x0 = xs.front(), y0 = ys.front();
  const double dx = xs.back() - x0, dy = ys.back() - y0;
  std::vector<double> dist(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double chord = dx == 0.0 ? y0 : y0 + dy * (xs[i] - x0) / dx;
    dist[i] = ys[i] - chord;
  }
  const double best = *std::max_element(dist.begin(), dist.end());
  for (std::size_t i = 0; i < n; ++i)
    if (dist[i] >= best - 1e-12) return i;
  return 0;
}

KneeRow knee_row(const FitResult& result, const DataSet& data) {
  KneeRow row;
  row.alpha = result.config.alpha;
  std::vector<double> diffs;
  for (const auto& curve : delta_plot_data(result, data)) {
    const auto idx = knee_index(curve.proportion, curve.delta);
    if (!idx) {
      row.knees.emplace_back(std::nullopt);
      continue;
    }
    const double knee = curve.proportion[*idx];
    row.knees.emplace_back(knee);
    diffs.push_back(knee - row.alpha);
  }
  if (diffs.empty()) {
    row.median_diff = std::nan("");
    row.mad_diff = std::nan("");
  } else {
    row.median_diff = median(diffs);
    row.mad_diff = mad(diffs);
  }
  return row;
}

KneeSummary knee_points(const DataSet& data, const std::vector<double>& alpha_list, int K,
                        const FitConfig& base_config) {
  if (alpha_list.empty()) throw ConfigError("alpha list must be non-empty");
  KneeSummary summary;
  summary.K = K;
  for (double alpha : alpha_list) {
    FitConfig cfg = base_config;
    cfg.K = K;
    cfg.alpha = alpha;
    summary.rows.push_back(knee_row(fit(data, cfg), data));
  }
  return summary;
}

AssignmentStats assignment_stats(const MembershipMatrix& u, double wa_threshold) {
  AssignmentStats stats;
  const Index n = u.n();
  if (n == 0) return stats;
  Index hard = 0;
  std::vector<std::pair<double, Index>> weak;
  for (Index i = 0; i < n; ++i) {
    const double top = u.u.row(i).maxCoeff();
    if (top == 1.0) ++hard;
    if (top < wa_threshold) weak.emplace_back(top, i);
  }
  std::stable_sort(weak.begin(), weak.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  stats.pct_hard = static_cast<double>(hard) / static_cast<double>(n);
  stats.pct_weak = static_cast<double>(weak.size()) / static_cast<double>(n);
  for (const auto& [top, i] : weak) stats.weak.push_back({i, u.u.row(i).transpose()});
  return stats;
}

const char* to_string(CellStatus status) {
  switch (status) {
    case CellStatus::reliable: return "reliable";
    case CellStatus::imputed_above: return "imputed_above";
    case CellStatus::imputed_below: return "imputed_below";
    case CellStatus::imputed_equal: return "imputed_equal";
    case CellStatus::missing: return "missing";
  }
  return "unknown";
}

OutlierSummary outlier_summary(const FitResult& result, const DataSet& data) {
  const Index n = data.n();
  const Index J = data.J();
  OutlierSummary out;
  out.proportions = MatrixXd::Zero(J, result.membership.K());
  out.status.assign(static_cast<std::size_t>(n),
                    std::vector<CellStatus>(static_cast<std::size_t>(J), CellStatus::reliable));
  for (Index i = 0; i < n; ++i) {
    const Index k = result.membership.argmax(i);
    for (Index j = 0; j < J; ++j) {
      auto& status = out.status[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (!data.observed(i, j)) {
        status = CellStatus::missing;
        continue;
      }
      if (result.indicator.w(i, j)) continue;
      out.proportions(j, k) += 1.0 / static_cast<double>(n);
      const double diff = result.completed(i, j) - data.values(i, j);
      status = diff > 0.0 ? CellStatus::imputed_above
               : diff < 0.0 ? CellStatus::imputed_below
                            : CellStatus::imputed_equal;
    }
  }
  return out;
}

}  // namespace cellfclust
