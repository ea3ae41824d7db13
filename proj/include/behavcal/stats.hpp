#pragma once

// Small numerical toolbox shared by the estimators, validator and ABM.
// Distribution functions are thin wrappers over Boost.Math.

#include <cstddef>
#include <span>
#include <vector>

namespace behavcal::stats {

double mean(std::span<const double> xs);
// Unbiased (n-1) sample variance.
double variance(std::span<const double> xs);
double stddev(std::span<const double> xs);
// Moment-based skewness and excess kurtosis (population normalisation).
double skewness(std::span<const double> xs);
double excess_kurtosis(std::span<const double> xs);

// Pearson correlation. Throws DegenerateData on zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);
// Two-sided p-value for H0: corr = 0 using the t transform with n-2 df.
double pearson_pvalue(double r, std::size_t n);

// Sample autocorrelation at `lag` with the full-sample mean and variance
// (the standard biased ACF estimator). Throws DegenerateData on a constant
// series.
double autocorrelation(std::span<const double> xs, std::size_t lag);

double normal_cdf(double z);
double normal_quantile(double p);
double student_t_cdf(double t, double df);
// Two-sided p-value of a t statistic.
double student_t_two_sided(double t, double df);

struct LinearFit {
  std::vector<double> coef;  // intercept first
  std::vector<double> std_error;
  // Coefficient covariance matrix, row-major (k x k).
  std::vector<double> cov;
  double sigma = 0.0;  // residual standard deviation
  std::size_t n = 0;
};

// OLS with intercept for a design given column-wise. Throws DegenerateData
// when the normal equations are singular.
LinearFit ols(std::span<const std::vector<double>> columns, std::span<const double> y);

// Convenience: simple regression y ~ a + b x.
LinearFit ols(std::span<const double> x, std::span<const double> y);

// Solve the symmetric positive-definite system A x = b in place (Cholesky).
// Returns false when A is not numerically positive definite.
bool solve_spd(std::vector<double>& a, std::vector<double>& b, std::size_t k);

}  // namespace behavcal::stats
