#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace adt {

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // sample variance, n-1
double weighted_mean(std::span<const double> x, std::span<const double> w);

/// Quantile with linear interpolation between order statistics (R type 7).
double quantile(std::vector<double> x, double p);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

/// Standard normal CDF.
double normal_cdf(double z);

/// Kolmogorov-Smirnov statistic of a sample against a CDF given as a callable.
double ks_statistic(std::vector<double> sample, double (*cdf)(double));

/// Asymptotic KS p-value for statistic d at sample size n.
double ks_pvalue(double d, std::size_t n);

/// Two-sided p-value of a t statistic with df degrees of freedom.
double student_t_pvalue(double t, double df);

/// Slope, its standard error and two-sided p-value from a simple linear
/// regression of y on x.
struct SlopeTest {
  double slope = 0.0;
  double stderr_ = 0.0;
  double p_value = 1.0;
};
SlopeTest slope_test(std::span<const double> x, std::span<const double> y);

}  // namespace adt
