#include "behavcal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "behavcal/error.hpp"

namespace behavcal::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InsufficientData("mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw InsufficientData("variance needs at least two values");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

namespace {

struct CentralMoments {
  double m2 = 0, m3 = 0, m4 = 0;
};

CentralMoments central_moments(std::span<const double> xs) {
  const double m = mean(xs);
  CentralMoments c;
  for (double x : xs) {
    const double d = x - m;
    const double d2 = d * d;
    c.m2 += d2;
    c.m3 += d2 * d;
    c.m4 += d2 * d2;
  }
  const auto n = static_cast<double>(xs.size());
  c.m2 /= n;
  c.m3 /= n;
  c.m4 /= n;
  return c;
}

}  // namespace

double skewness(std::span<const double> xs) {
  const auto c = central_moments(xs);
  if (c.m2 <= 0.0) return 0.0;
  return c.m3 / std::pow(c.m2, 1.5);
}

double excess_kurtosis(std::span<const double> xs) {
  const auto c = central_moments(xs);
  if (c.m2 <= 0.0) return 0.0;
  return c.m4 / (c.m2 * c.m2) - 3.0;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("pearson: length mismatch");
  if (xs.size() < 2) throw InsufficientData("pearson needs at least two pairs");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw DegenerateData("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson_pvalue(double r, std::size_t n) {
  if (n < 3) return 1.0;
  const double df = static_cast<double>(n) - 2.0;
  if (std::abs(r) >= 1.0) return 0.0;
  const double t = r * std::sqrt(df / (1.0 - r * r));
  return student_t_two_sided(t, df);
}

double autocorrelation(std::span<const double> xs, std::size_t lag) {
  if (lag >= xs.size()) throw InsufficientData("autocorrelation: lag exceeds series length");
  const double m = mean(xs);
  double den = 0.0;
  for (double x : xs) den += (x - m) * (x - m);
  if (den <= 0.0) throw DegenerateData("autocorrelation: constant series");
  double num = 0.0;
  for (std::size_t t = 0; t + lag < xs.size(); ++t) num += (xs[t] - m) * (xs[t + lag] - m);
  return num / den;
}

double normal_cdf(double z) {
  if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
  return boost::math::cdf(boost::math::normal_distribution<double>{}, z);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>{}, p);
}

double student_t_cdf(double t, double df) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  if (!(df > 0.0)) throw InvalidArgument("student_t_cdf: df must be positive");
  return boost::math::cdf(boost::math::students_t_distribution<double>{df}, t);
}

double student_t_two_sided(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t_distribution<double> dist{df};
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

bool solve_spd(std::vector<double>& a, std::vector<double>& b, std::size_t k) {
  // Cholesky factorisation A = L L^T stored in the lower triangle of a.
  double scale = 0.0;
  for (std::size_t i = 0; i < k; ++i) scale = std::max(scale, std::abs(a[i * k + i]));
  const double tol = std::max(scale, 1.0) * 1e-12;
  for (std::size_t j = 0; j < k; ++j) {
    double d = a[j * k + j];
    for (std::size_t p = 0; p < j; ++p) d -= a[j * k + p] * a[j * k + p];
    if (d <= tol) return false;
    d = std::sqrt(d);
    a[j * k + j] = d;
    for (std::size_t i = j + 1; i < k; ++i) {
      double s = a[i * k + j];
      for (std::size_t p = 0; p < j; ++p) s -= a[i * k + p] * a[j * k + p];
      a[i * k + j] = s / d;
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    double s = b[i];
    for (std::size_t p = 0; p < i; ++p) s -= a[i * k + p] * b[p];
    b[i] = s / a[i * k + i];
  }
  for (std::size_t i = k; i-- > 0;) {
    double s = b[i];
    for (std::size_t p = i + 1; p < k; ++p) s -= a[p * k + i] * b[p];
    b[i] = s / a[i * k + i];
  }
  return true;
}

LinearFit ols(std::span<const std::vector<double>> columns, std::span<const double> y) {
  const std::size_t n = y.size();
  const std::size_t k = columns.size() + 1;
  for (const auto& c : columns) {
    if (c.size() != n) throw InvalidArgument("ols: column length mismatch");
  }
  if (n <= k) throw InsufficientData("ols: need more observations than coefficients");

  // Centre regressors for conditioning; recover the intercept afterwards.
  std::vector<double> means(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) means[j] = mean(columns[j]);
  const double ybar = mean(y);

  const std::size_t p = columns.size();
  std::vector<double> xtx(p * p, 0.0), xty(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < p; ++a) {
      const double xa = columns[a][i] - means[a];
      xty[a] += xa * (y[i] - ybar);
      for (std::size_t b = 0; b <= a; ++b) xtx[a * p + b] += xa * (columns[b][i] - means[b]);
    }
  }
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b) xtx[a * p + b] = xtx[b * p + a];

  auto chol = xtx;
  auto beta = xty;
  if (!solve_spd(chol, beta, p)) throw DegenerateData("ols: singular or collinear design");

  // (X'X)^{-1} column by column.
  std::vector<double> inv(p * p, 0.0);
  for (std::size_t c = 0; c < p; ++c) {
    auto a = xtx;
    std::vector<double> e(p, 0.0);
    e[c] = 1.0;
    solve_spd(a, e, p);
    for (std::size_t r = 0; r < p; ++r) inv[r * p + c] = e[r];
  }

  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fit = ybar;
    for (std::size_t a = 0; a < p; ++a) fit += beta[a] * (columns[a][i] - means[a]);
    rss += (y[i] - fit) * (y[i] - fit);
  }
  const double s2 = rss / static_cast<double>(n - k);

  LinearFit out;
  out.n = n;
  out.sigma = std::sqrt(s2);
  out.coef.assign(k, 0.0);
  double intercept = ybar;
  for (std::size_t a = 0; a < p; ++a) {
    out.coef[a + 1] = beta[a];
    intercept -= beta[a] * means[a];
  }
  out.coef[0] = intercept;

  // Full covariance including the intercept.
  out.cov.assign(k * k, 0.0);
  const double nn = static_cast<double>(n);
  double var0 = s2 / nn;
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) var0 += means[a] * means[b] * s2 * inv[a * p + b];
  out.cov[0] = var0;
  for (std::size_t a = 0; a < p; ++a) {
    double c0 = 0.0;
    for (std::size_t b = 0; b < p; ++b) c0 -= means[b] * s2 * inv[b * p + a];
    out.cov[0 * k + a + 1] = c0;
    out.cov[(a + 1) * k + 0] = c0;
    for (std::size_t b = 0; b < p; ++b) out.cov[(a + 1) * k + b + 1] = s2 * inv[a * p + b];
  }
  out.std_error.resize(k);
  for (std::size_t a = 0; a < k; ++a) out.std_error[a] = std::sqrt(std::max(0.0, out.cov[a * k + a]));
  return out;
}

LinearFit ols(std::span<const double> x, std::span<const double> y) {
  std::vector<std::vector<double>> cols{std::vector<double>(x.begin(), x.end())};
  return ols(std::span<const std::vector<double>>(cols), y);
}

}  // namespace behavcal::stats
