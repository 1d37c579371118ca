#include <doctest.h>

#include <cmath>
#include <random>

#include "adtcurve/common.hpp"
#include "adtcurve/kde.hpp"

using namespace adt;

namespace {

// Simpson quadrature of the exact density over its support.
double integrate(const GaussianKde& kde, double lo, double hi, int n = 4001) {
  double h = (hi - lo) / (n - 1);
  double acc = kde.density(lo) + kde.density(hi);
  for (int i = 1; i + 1 < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * kde.density(lo + i * h);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("density integrates to one") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> pts(800);
  for (auto& p : pts) p = normal(rng);
  GaussianKde kde(pts);
  CHECK(std::abs(integrate(kde, -12.0, 12.0) - 1.0) < 1e-6);
}

TEST_CASE("weighted density integrates to one and ignores weight scale") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.1, 3.0);
  std::vector<double> pts(500), w(500), w2(500);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    pts[i] = normal(rng);
    w[i] = unit(rng);
    w2[i] = 2.0 * w[i];
  }
  GaussianKde a(pts, w), b(pts, w2);
  CHECK(std::abs(integrate(a, -12.0, 12.0) - 1.0) < 1e-6);
  CHECK(a.bandwidth() == b.bandwidth());
  CHECK(a.density(0.3) == b.density(0.3));
}

TEST_CASE("tabulated evaluator tracks the exact density") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> pts(600);
  for (auto& p : pts) p = normal(rng);
  GaussianKde kde(pts);
  GaussianKde::Table table = kde.tabulate();
  for (double z = -4.0; z <= 4.0; z += 0.173) {
    CHECK(table.eval(z) == doctest::Approx(kde.density(z)).epsilon(1e-4));
  }
  CHECK(table.eval(1e9) == 0.0);
}

TEST_CASE("degenerate samples are rejected") {
  std::vector<double> same(50, 1.25);
  CHECK_THROWS_AS(GaussianKde{same}, NumericError);
  CHECK_THROWS_AS(GaussianKde{std::vector<double>{}}, NumericError);
}
