#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cellfclust/constraints.hpp"
#include "cellfclust/density.hpp"
#include "cellfclust/estimation.hpp"
#include "oracles.hpp"

using namespace cellfclust;

namespace {

struct TruncationCase {
  std::vector<MatrixXd> covariances;
  std::vector<double> masses;
  double c = 1.0;
};

TruncationCase random_truncation_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k_dist(1, 4), j_dist(1, 5);
  std::uniform_real_distribution<double> mass_dist(0.5, 100.0), log_c(0.0, std::log(200.0));
  TruncationCase t;
  const int K = k_dist(rng);
  const Index J = j_dist(rng);
  for (int k = 0; k < K; ++k) {
    t.covariances.push_back(oracle::random_spd(J, rng, 1e-3, 1e3));
    t.masses.push_back(mass_dist(rng));
  }
  t.c = std::exp(log_c(rng));
  return t;
}

std::vector<VectorXd> eigenvalues_of(const std::vector<MatrixXd>& covs) {
  std::vector<VectorXd> out;
  for (const auto& s : covs) out.push_back(Eigen::SelfAdjointEigenSolver<MatrixXd>(s).eigenvalues());
  return out;
}

double achieved_loss(const TruncationCase& t, const std::vector<MatrixXd>& out) {
  // Loss of the output eigenvalues against the input ones, in matching order.
  double total = 0.0;
  const auto in = eigenvalues_of(t.covariances);
  const auto res = eigenvalues_of(out);
  for (std::size_t k = 0; k < in.size(); ++k)
    for (Index l = 0; l < in[k].size(); ++l) total += t.masses[k] * (std::log(res[k](l)) + in[k](l) / res[k](l));
  return total;
}

VectorXd random_fit_row(std::mt19937_64& rng, Index K) {
  std::uniform_real_distribution<double> unif(-30.0, -0.01);
  VectorXd L(K);
  for (Index k = 0; k < K; ++k) L(k) = unif(rng);
  return L;
}

}  // namespace

TEST_CASE("truncation output is feasible, idempotent and near the grid optimum") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const auto t = random_truncation_case(rng);
    const auto out = truncate_eigenvalues(t.covariances, t.masses, t.c);
    CHECK(check_ratio(out, t.c));
    const auto again = truncate_eigenvalues(out, t.masses, t.c);
    for (std::size_t k = 0; k < out.size(); ++k)
      CHECK((again[k] - out[k]).cwiseAbs().maxCoeff() <= 1e-9 * out[k].cwiseAbs().maxCoeff());

    if (check_ratio(t.covariances, t.c)) continue;
    const double best = oracle::truncation_min(eigenvalues_of(t.covariances), t.masses, t.c);
    CHECK(achieved_loss(t, out) <= best + 1e-6 * std::max(1.0, std::abs(best)));
  }
}

TEST_CASE("optimal truncation loss does not increase with c") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    auto t = random_truncation_case(rng);
    double previous = std::numeric_limits<double>::infinity();
    for (double c : {1.0, 2.0, 5.0, 20.0, 100.0, 1e4}) {
      t.c = c;
      const double loss = achieved_loss(t, truncate_eigenvalues(t.covariances, t.masses, c));
      CHECK(loss <= previous + 1e-9 * std::max(1.0, std::abs(previous)));
      previous = loss;
    }
  }
}

TEST_CASE("membership rows lie on the simplex and maximize the weighted fit") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> m_dist(1.05, 4.0);
  std::uniform_int_distribution<int> k_dist(2, 5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Index K = k_dist(rng);
    const double m = m_dist(rng);
    const VectorXd L = random_fit_row(rng, K);
    const MembershipMatrix u = update_membership(L.transpose(), m);
    CHECK(std::abs(u.u.row(0).sum() - 1.0) <= 1e-12);
    CHECK((u.u.array() >= 0.0).all());
    double attained = 0.0;
    for (Index k = 0; k < K; ++k) attained += std::pow(u.u(0, k), m) * L(k);
    // No random simplex point does better.
    for (int probe = 0; probe < 200; ++probe) {
      VectorXd v(K);
      for (Index k = 0; k < K; ++k) v(k) = -std::log(unif(rng) + 1e-300);
      v /= v.sum();
      double value = 0.0;
      for (Index k = 0; k < K; ++k) value += std::pow(v(k), m) * L(k);
      CHECK(value <= attained + 1e-12);
    }
  }
}

TEST_CASE("membership is permutation equivariant and ordered like the fits") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd L = random_fit_row(rng, 4);
    const MembershipMatrix u = update_membership(L.transpose(), 1.7);
    const VectorXd Lr = L.reverse();
    const MembershipMatrix ur = update_membership(Lr.transpose(), 1.7);
    for (Index k = 0; k < 4; ++k) CHECK(ur.u(0, 3 - k) == doctest::Approx(u.u(0, k)).epsilon(1e-12));
    for (Index a = 0; a < 4; ++a)
      for (Index b = 0; b < 4; ++b)
        if (L(a) > L(b)) CHECK(u.u(0, a) >= u.u(0, b));
  }
}

TEST_CASE("concentration matches exhaustive search on small columns") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> n_dist(2, 12);
  std::uniform_real_distribution<double> alpha_dist(0.0, 0.25);
  std::normal_distribution<double> gauss(0.0, 5.0);
  std::bernoulli_distribution missing(0.15);
  for (int trial = 0; trial < 150; ++trial) {
    const Index n = n_dist(rng);
    const Index J = 1 + trial % 3;
    const double alpha = alpha_dist(rng);
    MatrixXd delta(n, J);
    BoolMatrix observed(n, J);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < J; ++j) {
        delta(i, j) = gauss(rng);
        observed(i, j) = !missing(rng);
      }
    for (Index j = 0; j < J; ++j) observed(0, j) = true;
    const auto w = concentration_step(delta, observed, alpha);
    for (Index j = 0; j < J; ++j) {
      std::vector<double> scores(static_cast<std::size_t>(n));
      std::vector<Index> candidates;
      for (Index i = 0; i < n; ++i) {
        scores[static_cast<std::size_t>(i)] = delta(i, j);
        if (observed(i, j)) candidates.push_back(i);
      }
      const Index h = compute_h(static_cast<Index>(candidates.size()), alpha);
      const auto best = oracle::best_subset(scores, candidates, h);
      std::vector<Index> kept;
      for (Index i = 0; i < n; ++i)
        if (w.w(i, j)) kept.push_back(i);
      CHECK(kept == best);
    }
  }
}

TEST_CASE("conditional covariance is positive definite and shrinks the marginal") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Index J = 3 + trial % 4;
    const MatrixXd cov = oracle::random_spd(J, rng, 0.1, 5.0);
    BoolVector mask = BoolVector::Constant(J, true);
    mask(0) = false;
    mask(J - 1) = false;
    const auto cm = conditional_moments(mask, VectorXd::Zero(J - 2), VectorXd::Zero(J), cov);
    const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(cm.cond_cov).eigenvalues();
    CHECK(ev.minCoeff() > 0.0);
    CHECK(cm.cond_cov(0, 0) <= cov(0, 0) + 1e-12);
    CHECK(cm.cond_cov(1, 1) <= cov(J - 1, J - 1) + 1e-12);
  }
}

TEST_CASE("objective is invariant to a common shift of data and means") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss;
  MatrixXd x(12, 3);
  for (Index i = 0; i < 12; ++i)
    for (Index j = 0; j < 3; ++j) x(i, j) = gauss(rng);
  BoolMatrix w = BoolMatrix::Constant(12, 3, true);
  w(2, 1) = w(7, 0) = w(7, 2) = false;
  MatrixXd uu(12, 2);
  for (Index i = 0; i < 12; ++i) {
    uu(i, 0) = std::abs(gauss(rng));
    uu(i, 1) = std::abs(gauss(rng));
    uu.row(i) /= uu.row(i).sum();
  }
  ClusterParams p{VectorXd::Constant(2, 0.5), {VectorXd::Zero(3), VectorXd::Ones(3)},
                  {oracle::random_spd(3, rng), oracle::random_spd(3, rng)}};
  const double base = objective(DataSet(x), CellIndicator{w}, MembershipMatrix{uu}, p, 1.8, false);
  const VectorXd shift = (VectorXd(3) << 10.0, -4.0, 2.5).finished();
  ClusterParams q = p;
  for (auto& mu : q.means) mu += shift;
  const MatrixXd xs = x.rowwise() + shift.transpose();
  CHECK(objective(DataSet(xs), CellIndicator{w}, MembershipMatrix{uu}, q, 1.8, false) ==
        doctest::Approx(base).epsilon(1e-10));
}
