#include "cellfclust/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cellfclust/error.hpp"

namespace cellfclust {
namespace {

std::size_t sz(Index i) { return static_cast<std::size_t>(i); }

/// Symmetric square root factor A with A A' = cov. Throws SpecError when cov
/// has a clearly negative eigenvalue.
MatrixXd sampling_factor(const MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(0.5 * (cov + cov.transpose()));
  const VectorXd& ev = solver.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 0.0);
  if (ev.minCoeff() < -1e-10 * std::max(top, 1.0))
    throw SpecError("covariance constructor is not positive semi-definite");
  return solver.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

std::vector<Index> exact_counts(const std::vector<double>& proportions, Index n) {
  std::vector<Index> counts(proportions.size());
  std::vector<std::pair<double, std::size_t>> remainder;
  Index assigned = 0;
  for (std::size_t k = 0; k < proportions.size(); ++k) {
    const double target = proportions[k] * static_cast<double>(n);
    counts[k] = static_cast<Index>(std::floor(target + 1e-9));
    assigned += counts[k];
    remainder.emplace_back(target - static_cast<double>(counts[k]), k);
  }
  std::stable_sort(remainder.begin(), remainder.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[remainder[r % remainder.size()].second];
  return counts;
}

}  // namespace

MatrixXd CovarianceSpec::build(Index J) const {
  if (explicit_matrix) {
    if (explicit_matrix->rows() != J || explicit_matrix->cols() != J)
      throw SpecError("explicit covariance has the wrong dimension");
    return *explicit_matrix;
  }
  if (!(variance > 0.0)) throw SpecError("covariance variance must be positive");
  if (!(std::abs(rho) <= 1.0)) throw SpecError("covariance power base must lie in [-1, 1]");
  MatrixXd s(J, J);
  for (Index a = 0; a < J; ++a)
    for (Index b = 0; b < J; ++b) s(a, b) = variance * std::pow(rho, static_cast<double>(std::abs(a - b)));
  return s;
}

void SyntheticSpec::validate() const {
  if (n < 1 || J < 1 || K < 1) throw SpecError("n, J and K must be positive");
  if (proportions.size() != sz(K) || means.size() != sz(K) || covariances.size() != sz(K))
    throw SpecError("proportions, means and covariances need one entry per cluster");
  double total = 0.0;
  for (double p : proportions) {
    if (!(p > 0.0)) throw SpecError("mixing proportions must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw SpecError("mixing proportions must sum to 1");
  for (const auto& mu : means)
    if (mu.size() != J) throw SpecError("mean vector has the wrong dimension");
  for (const auto& cs : covariances) sampling_factor(cs.build(J));
  if (contamination_rate.size() != sz(J)) throw SpecError("need one contamination rate per variable");
  for (double r : contamination_rate)
    if (!(r >= 0.0 && r <= 0.25)) throw SpecError("contamination rate must lie in [0, 0.25]");
  if (!(low < high)) throw SpecError("contamination bounds need low < high");
  std::vector<Index> per_column(sz(J), 0);
  for (const auto& [i, j] : overrides) {
    if (i < 0 || i >= n || j < 0 || j >= J) throw SpecError("contamination override out of range");
    ++per_column[sz(j)];
  }
  for (Index j = 0; j < J; ++j)
    if (stable_ceil(contamination_rate[sz(j)] * static_cast<double>(n)) + per_column[sz(j)] > n)
      throw SpecError("more contaminated cells than units in variable " + std::to_string(j + 1));
}

SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  const Index n = spec.n;
  const Index J = spec.J;
  std::mt19937_64 rng(spec.seed);

  SyntheticData out;
  const std::vector<Index> counts = exact_counts(spec.proportions, n);
  for (std::size_t k = 0; k < counts.size(); ++k)
    out.true_labels.insert(out.true_labels.end(), sz(counts[k]), static_cast<Index>(k));
  std::shuffle(out.true_labels.begin(), out.true_labels.end(), rng);

  std::vector<MatrixXd> factors;
  for (const auto& cs : spec.covariances) factors.push_back(sampling_factor(cs.build(J)));

  std::normal_distribution<double> normal(0.0, 1.0);
  out.clean_values.resize(n, J);
  for (Index i = 0; i < n; ++i) {
    VectorXd z(J);
    for (Index j = 0; j < J; ++j) z(j) = normal(rng);
    const auto k = sz(out.true_labels[sz(i)]);
    out.clean_values.row(i) = (spec.means[k] + factors[k] * z).transpose();
  }

  out.true_outlier_mask = BoolMatrix::Constant(n, J, false);
  for (const auto& [i, j] : spec.overrides) out.true_outlier_mask(i, j) = true;
  for (Index j = 0; j < J; ++j) {
    const Index count = stable_ceil(spec.contamination_rate[sz(j)] * static_cast<double>(n));
    std::vector<Index> free_rows;
    for (Index i = 0; i < n; ++i)
      if (!out.true_outlier_mask(i, j)) free_rows.push_back(i);
    const auto m = static_cast<Index>(free_rows.size());
    for (Index a = 0; a < count; ++a) {
      std::uniform_int_distribution<Index> pick(a, m - 1);
      std::swap(free_rows[sz(a)], free_rows[sz(pick(rng))]);
      out.true_outlier_mask(free_rows[sz(a)], j) = true;
    }
  }

  MatrixXd values = out.clean_values;
  std::uniform_real_distribution<double> contamination(spec.low, spec.high);
  for (Index j = 0; j < J; ++j)
    for (Index i = 0; i < n; ++i)
      if (out.true_outlier_mask(i, j)) values(i, j) = contamination(rng);

  std::vector<std::string> names;
  for (Index j = 0; j < J; ++j) names.push_back("X" + std::to_string(j + 1));
  out.data = DataSet(std::move(values), std::move(names));
  return out;
}

SyntheticSpec preset(Preset which) {
  SyntheticSpec s;
  s.n = 200;
  s.K = 2;
  s.proportions = {0.7, 0.3};
  s.low = -50.0;
  s.high = 50.0;
  s.seed = 1;
  switch (which) {
    case Preset::paper_design_1: {
      s.name = "paper_design_1";
      s.J = 5;
      s.means = {VectorXd::Zero(5), (VectorXd(5) << 6.0, 0.0, 6.0, 0.0, 6.0).finished()};
      s.covariances = {CovarianceSpec{0.9, 1.0, std::nullopt}, CovarianceSpec{-0.8, 1.0, std::nullopt}};
      // Variables 1 and 2 are contaminated through the planted cells only.
      s.contamination_rate = {0.0, 0.0, 0.05, 0.05, 0.05};
      for (Index unit : {9, 10, 15, 60}) {
        s.overrides.emplace_back(unit - 1, 0);
        s.overrides.emplace_back(unit - 1, 1);
      }
      for (Index unit : {28, 61, 71, 77, 103, 127}) s.overrides.emplace_back(unit - 1, 0);
      for (Index unit : {144, 154, 156, 176, 190, 196}) s.overrides.emplace_back(unit - 1, 1);
      return s;
    }
    case Preset::paper_design_2:
    case Preset::weights_demo: {
      s.name = which == Preset::paper_design_2 ? "paper_design_2" : "weights_demo";
      s.J = 3;
      s.means = {VectorXd::Zero(3), VectorXd::Constant(3, 2.5)};
      s.covariances = {CovarianceSpec{0.9, 1.0, std::nullopt}, CovarianceSpec{-0.8, 1.0, std::nullopt}};
      s.contamination_rate = {0.05, 0.0, 0.0};
      return s;
    }
  }
  throw SpecError("unknown preset");
}

SyntheticSpec preset(const std::string& name) {
  if (name == "paper_design_1") return preset(Preset::paper_design_1);
  if (name == "paper_design_2") return preset(Preset::paper_design_2);
  if (name == "weights_demo") return preset(Preset::weights_demo);
  throw SpecError("unknown preset '" + name + "'");
}

}  // namespace cellfclust
