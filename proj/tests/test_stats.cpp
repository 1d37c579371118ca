#include <doctest.h>

#include <cmath>
#include <random>

#include "adtcurve/common.hpp"
#include "adtcurve/stats.hpp"

using namespace adt;

TEST_CASE("quantile interpolates like R type 7") {
  std::vector<double> x = {1, 2, 3, 4};
  CHECK(quantile(x, 0.0) == 1.0);
  CHECK(quantile(x, 1.0) == 4.0);
  CHECK(quantile(x, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(x, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("normal cdf endpoints") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-6));
  CHECK(normal_cdf(-8.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ks test accepts its own null") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> sample(2000);
  for (auto& v : sample) v = normal(rng);
  double d = ks_statistic(sample, +[](double z) { return normal_cdf(z); });
  CHECK(ks_pvalue(d, sample.size()) > 0.01);

  // shifted sample should be rejected
  for (auto& v : sample) v += 0.5;
  double d2 = ks_statistic(sample, +[](double z) { return normal_cdf(z); });
  CHECK(ks_pvalue(d2, sample.size()) < 1e-6);
}

TEST_CASE("student t p-values match known quantiles") {
  // t = 2.042 with 30 df is the 97.5% quantile
  CHECK(student_t_pvalue(2.042272456, 30) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(student_t_pvalue(0.0, 10) == doctest::Approx(1.0));
  CHECK(student_t_pvalue(12.0, 200) < 1e-10);
}

TEST_CASE("slope test is calibrated on white noise") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 1.0);
  int rejections = 0;
  const int n_trials = 200;
  for (int trial = 0; trial < n_trials; ++trial) {
    std::vector<double> x(60), y(60);
    for (int i = 0; i < 60; ++i) {
      x[i] = i;
      y[i] = normal(rng);
    }
    if (slope_test(x, y).p_value < 0.05) ++rejections;
  }
  // ~5% nominal rate
  CHECK(rejections < n_trials / 5);

  std::vector<double> x(50), y(50);
  for (int i = 0; i < 50; ++i) {
    x[i] = i;
    y[i] = 0.2 * i + normal(rng);
  }
  CHECK(slope_test(x, y).p_value < 1e-6);
  CHECK(slope_test(x, y).slope == doctest::Approx(0.2).epsilon(0.5));
}
