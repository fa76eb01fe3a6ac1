#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "crbm/random.hpp"
#include "crbm/stats.hpp"

using namespace crbm;

namespace {

// Independent reference: plain median of all pairwise slopes, then the plain
// median of residuals.
double plain_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

std::pair<double, double> brute_theil_sen(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> slopes;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      if (i < j && x[i] != x[j]) slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
  double b = plain_median(slopes);
  std::vector<double> r;
  for (std::size_t i = 0; i < x.size(); ++i) r.push_back(y[i] - b * x[i]);
  return {b, plain_median(r)};
}

}  // namespace

TEST(TheilSen, MatchesBruteForceExactly) {
  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    std::size_t n = 2 + rng.next() % 19;
    std::vector<double> x(n), y(n);
    bool grid = trial % 3 == 0;  // integer grids produce ties
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = grid ? static_cast<double>(rng.next() % 5) : rng.normal();
      y[i] = grid ? static_cast<double>(rng.next() % 7) : 2 * x[i] + rng.normal();
    }
    bool distinct = false;
    for (std::size_t i = 1; i < n; ++i) distinct = distinct || x[i] != x[0];
    if (!distinct) {
      EXPECT_THROW(stats::theil_sen(x, y), FitError);
      continue;
    }
    auto [b, a] = brute_theil_sen(x, y);
    auto fit = stats::theil_sen(x, y);
    EXPECT_EQ(fit.slope, b) << "trial " << trial;
    EXPECT_EQ(fit.intercept, a) << "trial " << trial;
    ++checked;
  }
  EXPECT_GT(checked, 350);
}

TEST(TheilSen, UnitWeightsEqualUnweighted) {
  std::vector<double> x{1, 2, 3, 4, 5, 6}, y{1.2, 1.9, 3.4, 3.9, 5.3, 5.8}, w(6, 0.4);
  auto a = stats::theil_sen(x, y), b = stats::theil_sen(x, y, w);
  EXPECT_EQ(a.slope, b.slope);
  EXPECT_EQ(a.intercept, b.intercept);
}

TEST(TheilSen, ZeroWeightIgnoresPoint) {
  std::vector<double> x{1, 2, 3, 4, 100}, y{1, 2, 3, 4, -500}, w{1, 1, 1, 1, 0};
  auto f = stats::theil_sen(x, y, w);
  EXPECT_DOUBLE_EQ(f.slope, 1.0);
  EXPECT_DOUBLE_EQ(f.intercept, 0.0);
}

TEST(LeastSquares, RecoversLineAndR2) {
  std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
  auto f = stats::least_squares(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  std::vector<double> y2{1, 2, 1, 2, 1};
  auto g = stats::least_squares(x, y2);
  EXPECT_NEAR(g.slope, 0.0, 1e-12);
  EXPECT_NEAR(g.r2, 0.0, 1e-12);
}

TEST(Ks, DistanceAndPValue) {
  EXPECT_NEAR(stats::normal_cdf_distance(0.0, 1.0), 0.0, 1e-15);
  // Pure shift: sup |Φ(x - μ) - Φ(x)| = 2Φ(μ/2) - 1.
  EXPECT_NEAR(stats::normal_cdf_distance(0.6, 1.0), 2 * stats::normal_cdf(0.3) - 1, 1e-12);
  // Pure scale: extremes at ±x* with x*² = 2 σ² log σ / (σ² - 1).
  double s = 1.7, xs = std::sqrt(2 * s * s * std::log(s) / (s * s - 1));
  EXPECT_NEAR(stats::normal_cdf_distance(0.0, s), std::abs(stats::normal_cdf(xs / s) - stats::normal_cdf(xs)), 1e-12);
  EXPECT_NEAR(stats::kolmogorov_q(1.36), 0.0494, 5e-4);
  EXPECT_NEAR(stats::kolmogorov_q(1.0), 0.2700, 5e-4);
  EXPECT_DOUBLE_EQ(stats::kolmogorov_q(0.0), 1.0);
  EXPECT_LT(stats::ks_pvalue(0.3, 100), 1e-6);
  EXPECT_GT(stats::ks_pvalue(0.05, 100), 0.9);
}

TEST(Tests, WelchAndLevene) {
  Rng rng(3);
  std::vector<double> a, b, c;
  for (int i = 0; i < 200; ++i) {
    a.push_back(rng.normal());
    b.push_back(rng.normal(1.0, 1.0));
    c.push_back(rng.normal(0.0, 3.0));
  }
  EXPECT_LT(stats::welch_t_test(a, b), 1e-6);
  EXPECT_GT(stats::welch_t_test(a, a), 0.99);
  EXPECT_LT(stats::levene_test(a, c), 1e-6);
  EXPECT_GT(stats::levene_test(a, b), 1e-3);
  // Reference value: two small samples, checked against the textbook formula.
  std::vector<double> g1{1, 2, 3, 4, 5}, g2{2, 4, 6, 8, 10};
  // t = -3 / sqrt(2.5/5 + 10/5) = -1.897; df = 5.882.
  EXPECT_NEAR(stats::welch_t_test(g1, g2), 0.1075, 2e-3);
}

TEST(Median, WeightedAgreesWithPlain) {
  std::vector<double> x{5, 1, 4, 2, 3, 6};
  EXPECT_DOUBLE_EQ(stats::weighted_median(x, std::vector<double>(6, 2.0)), 3.5);
  EXPECT_DOUBLE_EQ(stats::weighted_median(x, {1, 1, 1, 1, 1, 10}), 6.0);
  EXPECT_THROW(stats::median({}), FitError);
}

TEST(Logistic, SeparatesShiftedClasses) {
  Rng rng(1);
  Eigen::MatrixXd X(400, 2);
  Eigen::VectorXd y(400);
  for (int i = 0; i < 400; ++i) {
    y[i] = i % 2;
    X(i, 0) = rng.normal(y[i] * 2.0, 1.0);
    X(i, 1) = rng.normal();
  }
  auto m = stats::fit_logistic(X, y, 1.0);
  EXPECT_GT(m.coefficients[0], 1.0);
  EXPECT_LT(std::abs(m.coefficients[1]), 0.5);
}
