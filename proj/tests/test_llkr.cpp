#include <doctest.h>

#include <cmath>
#include <random>

#include "adtcurve/common.hpp"
#include "adtcurve/llkr.hpp"

using namespace adt;

namespace {

struct Sample {
  std::vector<double> d, v, w;
  std::vector<int> site;
};

Sample linear_sample(std::size_t n, double a, double b, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Sample s;
  for (std::size_t i = 0; i < n; ++i) {
    double d = unit(rng);
    s.d.push_back(d);
    s.v.push_back(a + b * d);
    s.w.push_back(1.0);
    s.site.push_back(static_cast<int>(i));
  }
  return s;
}

}  // namespace

TEST_CASE("local linear reproduces affine data exactly") {
  Sample s = linear_sample(80, 3.0, 2.0, 1);
  LlkrOptions options;
  options.bandwidth = 0.07;
  LlkrFit fit = llkr_fit(s.d, s.v, s.w, s.site, options);
  for (int g = 0; g <= 50; ++g) {
    double d0 = g / 50.0;
    CHECK(std::abs(fit.predict(d0) - (3.0 + 2.0 * d0)) < 1e-8);
  }
  // training doses are reproduced exactly too
  CHECK(std::abs(fit.predict(s.d[17]) - s.v[17]) < 1e-8);
}

TEST_CASE("constant response gives a constant curve") {
  Sample s = linear_sample(40, 5.5, 0.0, 2);
  LlkrOptions options;
  options.bandwidth = 0.1;
  LlkrFit fit = llkr_fit(s.d, s.v, s.w, s.site, options);
  for (int g = 0; g <= 20; ++g)
    CHECK(fit.predict(g / 20.0) == doctest::Approx(5.5).epsilon(1e-10));
}

TEST_CASE("weights are scale invariant") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.3);
  Sample s = linear_sample(60, 1.0, -2.0, 3);
  for (auto& v : s.v) v += noise(rng);
  std::uniform_real_distribution<double> unit(0.5, 3.0);
  for (auto& w : s.w) w = unit(rng);
  Sample doubled = s;
  for (auto& w : doubled.w) w *= 2.0;

  LlkrOptions options;
  options.bandwidth = 0.15;
  LlkrFit f1 = llkr_fit(s.d, s.v, s.w, s.site, options);
  LlkrFit f2 = llkr_fit(doubled.d, doubled.v, doubled.w, doubled.site, options);
  for (int g = 0; g <= 10; ++g) CHECK(f1.predict(g / 10.0) == f2.predict(g / 10.0));
}

TEST_CASE("huge bandwidth converges to the global weighted least squares line") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.5);
  Sample s = linear_sample(120, 0.7, 1.9, 4);
  std::uniform_real_distribution<double> unit(0.2, 2.0);
  for (std::size_t i = 0; i < s.v.size(); ++i) {
    s.v[i] += noise(rng);
    s.w[i] = unit(rng);
  }

  // closed-form weighted least squares oracle
  double sw = 0, swd = 0, swv = 0, swdd = 0, swdv = 0;
  for (std::size_t i = 0; i < s.d.size(); ++i) {
    sw += s.w[i];
    swd += s.w[i] * s.d[i];
    swv += s.w[i] * s.v[i];
    swdd += s.w[i] * s.d[i] * s.d[i];
    swdv += s.w[i] * s.d[i] * s.v[i];
  }
  double denom = sw * swdd - swd * swd;
  double slope = (sw * swdv - swd * swv) / denom;
  double intercept = (swv - slope * swd) / sw;

  LlkrOptions options;
  options.bandwidth = 1e6;
  LlkrFit fit = llkr_fit(s.d, s.v, s.w, s.site, options);
  for (int g = 0; g <= 10; ++g) {
    double d0 = g / 10.0;
    CHECK(fit.predict(d0) == doctest::Approx(intercept + slope * d0).epsilon(1e-6));
  }
}

TEST_CASE("boundary evaluation stays finite") {
  Sample s = linear_sample(12, 2.0, 1.0, 5);
  LlkrOptions options;
  options.bandwidth = 0.05;
  LlkrFit fit = llkr_fit(s.d, s.v, s.w, s.site, options);
  double at_edge = fit.predict(1.0);
  CHECK(std::isfinite(at_edge));
  CHECK(at_edge == doctest::Approx(3.0).epsilon(0.2));
}

TEST_CASE("singular local design falls back to a local constant") {
  std::vector<double> d = {0.0, 0.0, 0.0, 1.0};
  std::vector<double> v = {1.0, 2.0, 3.0, 10.0};
  std::vector<double> w = {1.0, 1.0, 1.0, 1.0};
  std::vector<int> site = {0, 1, 2, 3};
  LlkrOptions options;
  options.bandwidth = 0.01;
  LlkrFit fit = llkr_fit(d, v, w, site, options);
  CHECK(fit.predict(0.0) == doctest::Approx(2.0));  // mean of the local cluster
}

TEST_CASE("kernel mass underflow widens the bandwidth locally") {
  std::vector<double> d, v, w;
  std::vector<int> site;
  for (int i = 0; i < 10; ++i) {
    d.push_back(0.01 * i);
    v.push_back(1.0);
    d.push_back(0.9 + 0.01 * i);
    v.push_back(2.0);
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    w.push_back(1.0);
    site.push_back(static_cast<int>(i));
  }
  LlkrOptions options;
  options.bandwidth = 0.005;
  LlkrFit fit = llkr_fit(d, v, w, site, options);
  bool widened = false;
  double mid = fit.predict(0.5, &widened);
  CHECK(widened);
  CHECK(std::isfinite(mid));
  CHECK(fit.n_widened() >= 1);
}

TEST_CASE("llkr_fit validates inputs") {
  std::vector<double> d = {0.5, 0.5};
  std::vector<double> v = {1.0, 2.0};
  std::vector<double> w = {1.0, 1.0};
  std::vector<int> site = {0, 1};
  LlkrOptions options;
  options.bandwidth = 0.1;
  CHECK_THROWS_AS(llkr_fit(d, v, w, site, options), DataError);  // no distinct doses
  std::vector<double> one = {0.5};
  CHECK_THROWS_AS(llkr_fit(one, one, one, std::vector<int>{0}, options), DataError);
}

TEST_CASE("leave-one-location-out CV resists repeated observations") {
  // Sites have static doses and site-level noise; rows of a site can predict
  // each other at distance zero, so naive leave-one-out prefers a tiny
  // bandwidth while leave-one-location-out does not.
  int wins = 0;
  const int n_trials = 20;
  for (int trial = 0; trial < n_trials; ++trial) {
    std::mt19937_64 rng(100 + trial);
    std::normal_distribution<double> site_noise(0.0, 1.0);
    std::normal_distribution<double> obs_noise(0.0, 0.1);
    const int n_sites = 30, reps = 8;
    std::vector<double> d, v, w;
    std::vector<int> site;
    for (int s = 0; s < n_sites; ++s) {
      double dose = (s + 1.0) / n_sites;
      double eta = site_noise(rng);
      for (int r = 0; r < reps; ++r) {
        d.push_back(dose);
        v.push_back(std::sin(3.0 * dose) + eta + obs_noise(rng));
        w.push_back(1.0);
        site.push_back(s);
      }
    }
    LlkrOptions lolo;
    lolo.cv = LlkrOptions::Cv::kLeaveOneLocationOut;
    LlkrOptions naive;
    naive.cv = LlkrOptions::Cv::kLeaveOneOut;
    double h_lolo = select_bandwidth(d, v, w, site, lolo);
    double h_naive = select_bandwidth(d, v, w, site, naive);
    if (h_naive < h_lolo) ++wins;
  }
  CHECK(wins >= 18);
}
