#include "adtcurve/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adtcurve/common.hpp"

namespace adt {

double mean(std::span<const double> x) {
  if (x.empty()) throw NumericError("mean of empty range");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw NumericError("variance needs at least 2 values");
  double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double weighted_mean(std::span<const double> x, std::span<const double> w) {
  if (x.size() != w.size() || x.empty())
    throw NumericError("weighted_mean: size mismatch or empty");
  double sw = 0.0, sxw = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sxw += w[i] * x[i];
  }
  if (sw <= 0.0) throw NumericError("weighted_mean: nonpositive weight total");
  return sxw / sw;
}

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw NumericError("quantile of empty range");
  std::sort(x.begin(), x.end());
  if (p <= 0.0) return x.front();
  if (p >= 1.0) return x.back();
  double h = p * static_cast<double>(x.size() - 1);
  std::size_t lo = static_cast<std::size_t>(h);
  double frac = h - static_cast<double>(lo);
  if (lo + 1 >= x.size()) return x.back();
  return x[lo] + frac * (x[lo + 1] - x[lo]);
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw NumericError("pearson_correlation: need two equal-length samples");
  double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw NumericError("pearson_correlation: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_statistic(std::vector<double> sample, double (*cdf)(double)) {
  if (sample.empty()) throw NumericError("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  double lambda = (std::sqrt(static_cast<double>(n)) + 0.12 +
                   0.11 / std::sqrt(static_cast<double>(n))) *
                  d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

namespace {

// Regularized incomplete beta via Lentz continued fraction.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double ibeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_pvalue(double t, double df) {
  if (df <= 0.0) throw NumericError("student_t_pvalue: df must be positive");
  double x = df / (df + t * t);
  return ibeta(0.5 * df, 0.5, x);
}

SlopeTest slope_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw NumericError("slope_test: need at least 3 paired values");
  double n = static_cast<double>(x.size());
  double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw NumericError("slope_test: x has zero variance");
  SlopeTest out;
  out.slope = sxy / sxx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double fit = my + out.slope * (x[i] - mx);
    sse += (y[i] - fit) * (y[i] - fit);
  }
  double sigma2 = sse / (n - 2.0);
  out.stderr_ = std::sqrt(sigma2 / sxx);
  out.p_value = out.stderr_ > 0.0
                    ? student_t_pvalue(out.slope / out.stderr_, n - 2.0)
                    : 0.0;
  return out;
}

}  // namespace adt
