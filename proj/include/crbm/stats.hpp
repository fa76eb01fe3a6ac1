#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "crbm/errors.hpp"

namespace crbm::stats {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ContractError("normal quantile needs 0 < p < 1");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double mean(std::span<const double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample variance (n - 1 denominator).
inline double variance(std::span<const double> x) {
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double m = mean(x), ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

inline double sd(std::span<const double> x) { return std::sqrt(variance(x)); }

/// Median; the mean of the two central values for even sizes.
inline double median(std::vector<double> x) {
  if (x.empty()) throw FitError("median of an empty set");
  std::sort(x.begin(), x.end());
  auto n = x.size();
  return n % 2 ? x[n / 2] : (x[n / 2 - 1] + x[n / 2]) / 2.0;
}

/// Weighted median: the smallest value whose cumulative weight reaches half
/// the total; when it reaches exactly half, the mean of that value and the
/// next. Equal weights reproduce `median` exactly.
inline double weighted_median(const std::vector<double>& x, const std::vector<double>& w) {
  if (x.empty() || x.size() != w.size()) throw FitError("weighted median needs matching non-empty inputs");
  bool equal = std::all_of(w.begin(), w.end(), [&](double v) { return v == w.front(); });
  if (equal) return median(x);
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  double total = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw FitError("weights must be non-negative");
    total += v;
  }
  if (!(total > 0.0)) throw FitError("weights sum to zero");
  double cum = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    cum += w[idx[k]];
    if (2.0 * cum == total && k + 1 < idx.size()) return (x[idx[k]] + x[idx[k + 1]]) / 2.0;
    if (2.0 * cum > total) return x[idx[k]];
  }
  return x[idx.back()];
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Theil-Sen estimator: slope = weighted median of pairwise slopes (pair
/// weight w_i w_j, pairs with equal x skipped), intercept = weighted median
/// of y_i - slope x_i.
inline LineFit theil_sen(std::span<const double> x, std::span<const double> y, std::span<const double> w = {}) {
  if (x.size() != y.size() || (!w.empty() && w.size() != x.size())) throw FitError("mismatched Theil-Sen inputs");
  std::vector<double> slopes, pw;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      if (x[j] == x[i]) continue;
      slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
      pw.push_back(w.empty() ? 1.0 : w[i] * w[j]);
    }
  if (slopes.empty()) throw FitError("Theil-Sen needs at least two distinct x values");
  LineFit f;
  f.slope = weighted_median(slopes, pw);
  std::vector<double> resid(x.size()), rw(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    resid[i] = y[i] - f.slope * x[i];
    rw[i] = w.empty() ? 1.0 : w[i];
  }
  f.intercept = weighted_median(resid, rw);
  return f;
}

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  double r2 = 0.0;
  double pearson = 0.0;
  std::size_t n = 0;
};

/// Weighted least squares of y on x. R² is the weighted coefficient of
/// determination; standard errors assume unit weights (plain OLS).
inline RegressionFit least_squares(std::span<const double> x, std::span<const double> y,
                                   std::span<const double> w = {}) {
  if (x.size() != y.size() || (!w.empty() && w.size() != x.size())) throw FitError("mismatched regression inputs");
  const std::size_t n = x.size();
  if (n < 2) throw FitError("regression needs at least two points");
  double sw = 0, mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    mx += wi * x[i];
    my += wi * y[i];
  }
  if (!(sw > 0)) throw FitError("regression weights sum to zero");
  mx /= sw;
  my /= sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    sxx += wi * (x[i] - mx) * (x[i] - mx);
    sxy += wi * (x[i] - mx) * (y[i] - my);
    syy += wi * (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0)) throw FitError("regressor has zero variance");
  RegressionFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.pearson = syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
  double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    double e = y[i] - f.intercept - f.slope * x[i];
    ssr += wi * e * e;
  }
  f.r2 = syy > 0 ? 1.0 - ssr / syy : 1.0;
  if (n > 2) {
    double s2 = ssr / sw * static_cast<double>(n) / static_cast<double>(n - 2);
    double sxx_u = sxx / sw * static_cast<double>(n);
    double mean_x2 = 0;
    for (std::size_t i = 0; i < n; ++i) mean_x2 += (w.empty() ? 1.0 : w[i]) * x[i] * x[i];
    mean_x2 /= sw;
    f.slope_se = std::sqrt(s2 / sxx_u);
    f.intercept_se = std::sqrt(s2 * mean_x2 / sxx_u);
  }
  return f;
}

/// Sup-distance between the CDFs of N(mu, sd²) and N(0, 1).
inline double normal_cdf_distance(double mu, double sd_) {
  if (!(sd_ > 0)) {
    // Point mass at mu against N(0,1).
    double c = normal_cdf(mu);
    return std::max(c, 1.0 - c);
  }
  auto diff = [&](double x) { return std::abs(normal_cdf((x - mu) / sd_) - normal_cdf(x)); };
  std::vector<double> candidates;
  // Extremes of the difference sit where the two densities are equal.
  double a = 1.0 / (sd_ * sd_) - 1.0;
  double b = -2.0 * mu / (sd_ * sd_);
  double c = mu * mu / (sd_ * sd_) + 2.0 * std::log(sd_);
  if (std::abs(a) < 1e-12) {
    if (std::abs(b) > 0) candidates.push_back(-c / b);
  } else {
    double disc = b * b - 4 * a * c;
    if (disc >= 0) {
      candidates.push_back((-b + std::sqrt(disc)) / (2 * a));
      candidates.push_back((-b - std::sqrt(disc)) / (2 * a));
    }
  }
  double d = 0.0;
  for (double x : candidates) d = std::max(d, diff(x));
  return d;
}

/// Kolmogorov survival function Q(λ) = 2 Σ (-1)^{k-1} exp(-2 k² λ²).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  if (lambda < 1.18) {
    // Small-λ form converges faster: Q = 1 - sqrt(2π)/λ Σ exp(-(2k-1)²π²/(8λ²)).
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) {
      double t = (2.0 * k - 1.0) * M_PI / lambda;
      s += std::exp(-t * t / 8.0);
    }
    return std::clamp(1.0 - std::sqrt(2.0 * M_PI) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

/// One-sample KS p-value for statistic D at sample size n (Stephens'
/// finite-n correction of the asymptotic distribution).
inline double ks_pvalue(double d, std::size_t n) {
  double sn = std::sqrt(static_cast<double>(n));
  return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

/// Two-sided Welch two-sample t-test p-value.
inline double welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw FitError("t-test needs two observations per group");
  double ma = mean(a), mb = mean(b), va = variance(a), vb = variance(b);
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double se2 = va / na + vb / nb;
  if (!(se2 > 0)) return ma == mb ? 1.0 : 0.0;
  double t = (ma - mb) / std::sqrt(se2);
  double df = se2 * se2 / ((va / na) * (va / na) / (na - 1) + (vb / nb) * (vb / nb) / (nb - 1));
  if (t == 0.0) return 1.0;
  boost::math::students_t_distribution<double> dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

/// Levene test for equal variances of two groups, median-centred.
inline double levene_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw FitError("Levene test needs two observations per group");
  auto deviations = [](std::span<const double> g) {
    double c = median(std::vector<double>(g.begin(), g.end()));
    std::vector<double> z;
    for (double v : g) z.push_back(std::abs(v - c));
    return z;
  };
  auto za = deviations(a), zb = deviations(b);
  double na = static_cast<double>(za.size()), nb = static_cast<double>(zb.size()), N = na + nb;
  double ma = mean(za), mb = mean(zb), m = (ma * na + mb * nb) / N;
  double between = na * (ma - m) * (ma - m) + nb * (mb - m) * (mb - m);
  double within = 0.0;
  for (double z : za) within += (z - ma) * (z - ma);
  for (double z : zb) within += (z - mb) * (z - mb);
  if (between == 0.0) return 1.0;
  if (!(within > 0)) return 0.0;
  double F = (N - 2.0) * between / within;
  boost::math::fisher_f_distribution<double> dist(1.0, N - 2.0);
  return boost::math::cdf(boost::math::complement(dist, F));
}

/// L2-regularized logistic regression fitted by Newton's method. The
/// intercept is not penalized.
struct LogisticModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd a = X * coefficients;
    a.array() += intercept;
    return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }
};

inline LogisticModel fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridge,
                                  int max_iter = 25, double tol = 1e-8) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (y.size() != n) throw FitError("logistic regression: label count mismatch");
  Eigen::MatrixXd A(n, p + 1);
  A.leftCols(p) = X;
  A.col(p).setOnes();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p + 1, ridge);
  penalty[p] = 1e-8;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd eta = A * beta;
    Eigen::VectorXd mu = eta.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    Eigen::VectorXd grad = A.transpose() * (y - mu) - penalty.cwiseProduct(beta);
    Eigen::MatrixXd H = A.transpose() * w.asDiagonal() * A;
    H.diagonal() += penalty;
    Eigen::VectorXd step = H.ldlt().solve(grad);
    beta += step;
    if (step.cwiseAbs().maxCoeff() < tol) break;
  }
  return {beta.head(p), beta[p]};
}

}  // namespace crbm::stats
