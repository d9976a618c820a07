#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cellfclust/density.hpp"
#include "cellfclust/error.hpp"
#include "oracles.hpp"

using namespace cellfclust;

namespace {

BoolVector mask_of(std::initializer_list<bool> bits) {
  BoolVector m(static_cast<Index>(bits.size()));
  Index j = 0;
  for (bool b : bits) m(j++) = b;
  return m;
}

}  // namespace

TEST_CASE("log density of a standard normal at its mean") {
  const VectorXd x = VectorXd::Zero(1);
  const double v = log_density_subset(x, mask_of({true}), VectorXd::Zero(1), MatrixXd::Identity(1, 1));
  CHECK(v == doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-14));
  CHECK(v == doctest::Approx(-0.91894).epsilon(1e-5));
}

TEST_CASE("empty mask has log density zero") {
  VectorXd x(3);
  x << 100.0, std::numeric_limits<double>::quiet_NaN(), -4.0;
  CHECK(log_density_subset(x, mask_of({false, false, false}), VectorXd::Zero(3),
                           MatrixXd::Identity(3, 3)) == 0.0);
}

TEST_CASE("diagonal bivariate log density") {
  VectorXd x(2);
  x << 1.0, 2.0;
  MatrixXd cov(2, 2);
  cov << 2.0, 0.0, 0.0, 0.5;
  const double expected = -std::log(2.0 * M_PI) - 0.5 * std::log(1.0) - 0.5 * (0.5 + 8.0);
  const double v = log_density_subset(x, mask_of({true, true}), VectorXd::Zero(2), cov);
  CHECK(v == doctest::Approx(expected).epsilon(1e-14));
  CHECK(v == doctest::Approx(-6.08788).epsilon(1e-5));
}

TEST_CASE("subset log density matches a dense marginal computation") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 2.0);
  std::bernoulli_distribution coin(0.6);
  for (int trial = 0; trial < 200; ++trial) {
    const Index J = 1 + static_cast<Index>(trial % 6);
    const MatrixXd cov = oracle::random_spd(J, rng, 0.05, 20.0);
    VectorXd mean(J), x(J);
    for (Index j = 0; j < J; ++j) {
      mean(j) = gauss(rng);
      x(j) = gauss(rng);
    }
    BoolVector mask(J);
    std::vector<Index> idx;
    for (Index j = 0; j < J; ++j) {
      mask(j) = coin(rng);
      if (mask(j)) idx.push_back(j);
    }
    double expected = 0.0;
    if (!idx.empty()) {
      const Index s = static_cast<Index>(idx.size());
      VectorXd xs(s), ms(s);
      MatrixXd cs(s, s);
      for (Index a = 0; a < s; ++a) {
        xs(a) = x(idx[a]);
        ms(a) = mean(idx[a]);
        for (Index b = 0; b < s; ++b) cs(a, b) = cov(idx[a], idx[b]);
      }
      expected = oracle::dense_log_density(xs, ms, cs);
    }
    ClusterGaussian g(mean, cov);
    CHECK(g.log_density(x, mask) == doctest::Approx(expected).epsilon(1e-10));
    // Cached factor gives the same answer on reuse.
    CHECK(g.log_density(x, mask) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("objective of a single standard normal cell") {
  DataSet data(MatrixXd::Zero(1, 1));
  CellIndicator w{BoolMatrix::Constant(1, 1, true)};
  MembershipMatrix u{MatrixXd::Ones(1, 1)};
  ClusterParams p{VectorXd::Ones(1), {VectorXd::Zero(1)}, {MatrixXd::Identity(1, 1)}};
  for (double m : {1.0, 1.5, 3.0})
    CHECK(objective(data, w, u, p, m, false) == doctest::Approx(-0.91894).epsilon(1e-5));
}

TEST_CASE("objective with a crisp row uses only its cluster") {
  MatrixXd x(1, 2);
  x << 0.3, -1.2;
  DataSet data(x);
  CellIndicator w{BoolMatrix::Constant(1, 2, true)};
  MatrixXd uu(1, 2);
  uu << 1.0, 0.0;
  MembershipMatrix u{uu};
  VectorXd mu2(2);
  mu2 << 5.0, 5.0;
  ClusterParams p{VectorXd::Constant(2, 0.5), {VectorXd::Zero(2), mu2},
                  {MatrixXd::Identity(2, 2), 2.0 * MatrixXd::Identity(2, 2)}};
  const double expected = std::log(0.5) + oracle::dense_log_density(x.row(0).transpose(), VectorXd::Zero(2),
                                                                     MatrixXd::Identity(2, 2));
  CHECK(objective(data, w, u, p, 1.0, false) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("objective matches a term-by-term hand sum") {
  MatrixXd x(2, 2);
  x << 0.5, 1.0, -0.7, 2.5;
  BoolMatrix w(2, 2);
  w << true, true, false, true;
  MatrixXd uu(2, 2);
  uu << 0.8, 0.2, 0.5, 0.5;
  MatrixXd s1(2, 2), s2(2, 2);
  s1 << 1.0, 0.3, 0.3, 2.0;
  s2 << 0.5, -0.1, -0.1, 1.5;
  VectorXd m1(2), m2(2);
  m1 << 0.0, 1.0;
  m2 << 1.0, 2.0;
  ClusterParams p{VectorXd(2), {m1, m2}, {s1, s2}};
  p.weights << 0.6, 0.4;

  auto phi1 = [](double v, double mean, double var) {
    return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (v - mean) * (v - mean) / var;
  };
  const double d11 = oracle::dense_log_density(x.row(0).transpose(), m1, s1);
  const double d12 = oracle::dense_log_density(x.row(0).transpose(), m2, s2);
  const double d21 = phi1(2.5, 1.0, 2.0);
  const double d22 = phi1(2.5, 2.0, 1.5);
  const double hand = 0.64 * (std::log(0.6) + d11) + 0.04 * (std::log(0.4) + d12) +
                      0.25 * (std::log(0.6) + d21) + 0.25 * (std::log(0.4) + d22);
  DataSet data(x);
  CHECK(objective(data, CellIndicator{w}, MembershipMatrix{uu}, p, 2.0, false) ==
        doctest::Approx(hand).epsilon(1e-12));

  const double hand_equal = hand - (0.64 + 0.25) * std::log(0.6) - (0.04 + 0.25) * std::log(0.4) +
                            (0.64 + 0.04 + 0.25 + 0.25) * std::log(0.5);
  CHECK(objective(data, CellIndicator{w}, MembershipMatrix{uu}, p, 2.0, true) ==
        doctest::Approx(hand_equal).epsilon(1e-12));
}

TEST_CASE("zero membership contributes nothing even against an impossible density") {
  CHECK(membership_power(0.0, 1.5) == 0.0);
  CHECK(membership_power(1.0, 1.5) == 1.0);
  CHECK(membership_power(0.25, 2.0) == doctest::Approx(0.0625));
}

TEST_CASE("compute_h") {
  CHECK(compute_h(250, 0.05) == 238);
  CHECK(250 - compute_h(250, 0.05) == 12);
  CHECK(compute_h(200, 0.0) == 200);
  CHECK(compute_h(97, 0.10) == 88);
  CHECK(compute_h(200, 0.05) == 190);
  CHECK(compute_h(20, 0.05) == 19);
  CHECK(compute_h(0, 0.05) == 0);
}

TEST_CASE("config validation") {
  FitConfig c;
  CHECK_NOTHROW(c.validate());
  c.K = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = FitConfig{};
  c.alpha = 0.3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = FitConfig{};
  c.m = 0.9;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = FitConfig{};
  c.c = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
