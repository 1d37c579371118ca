#include "adtcurve/copula.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <mutex>
#include <numbers>

#include "adtcurve/common.hpp"

namespace adt {

namespace {

struct GaussHermite {
  std::vector<double> nodes;    // abscissas for weight e^{-x^2}
  std::vector<double> weights;  // normalized so sum = 1 (absorbs 1/sqrt(pi))
};

// Golub-Welsch: eigen-decomposition of the Jacobi matrix of the (physicists')
// Hermite recurrence.
GaussHermite gauss_hermite(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    double off = std::sqrt(i / 2.0);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussHermite gh;
  gh.nodes.resize(n);
  gh.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    gh.nodes[i] = solver.eigenvalues()(i);
    double v = solver.eigenvectors()(0, i);
    gh.weights[i] = v * v;  // = w_i / sqrt(pi)
  }
  return gh;
}

// F_Exp^{-1}(Phi(z)) for Exponential(mean 1); stable in both tails.
double exp_from_normal(double z) {
  // 1 - Phi(z) = 0.5 * erfc(z / sqrt(2))
  return -std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
}

const GaussHermite& cached_gh(int nodes) {
  static std::mutex mutex;
  static int cached_n = 0;
  static GaussHermite cached;
  std::lock_guard<std::mutex> lock(mutex);
  if (cached_n != nodes) {
    cached = gauss_hermite(nodes);
    cached_n = nodes;
  }
  return cached;
}

}  // namespace

double ExponentialCopulaMap::output_correlation(double rho_star_in, int nodes) {
  if (nodes < 40) throw ConfigError("equivalent correlation needs >= 40 nodes per axis");
  if (rho_star_in <= 0.0) return 0.0;
  if (rho_star_in >= 1.0) return 1.0;
  const GaussHermite& gh = cached_gh(nodes);
  const double s = std::sqrt(1.0 - rho_star_in * rho_star_in);

  // E[w1 w2] with w = F^{-1}(Phi(z)), z2 = rho* z1 + s z;
  // Exponential(1) has mean 1 and variance 1, so Corr = E[w1 w2] - 1.
  double acc = 0.0;
  for (int i = 0; i < nodes; ++i) {
    double z1 = std::numbers::sqrt2 * gh.nodes[i];
    double g1 = exp_from_normal(z1);
    double inner = 0.0;
    for (int j = 0; j < nodes; ++j) {
      double z2 = rho_star_in * z1 + s * std::numbers::sqrt2 * gh.nodes[j];
      inner += gh.weights[j] * exp_from_normal(z2);
    }
    acc += gh.weights[i] * g1 * inner;
  }
  return acc - 1.0;
}

double ExponentialCopulaMap::solve_rho_star(double target, int nodes) {
  if (target < 0.0 || target >= 1.0)
    throw ConfigError("equivalent correlation target must lie in [0, 1)");
  if (target == 0.0) return 0.0;
  double lo = 0.0, hi = 1.0 - 1e-9;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    double out = output_correlation(mid, nodes);
    if (out < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-9) break;
  }
  return 0.5 * (lo + hi);
}

ExponentialCopulaMap::ExponentialCopulaMap() {
  constexpr int kPoints = 200;
  targets_.resize(kPoints);
  values_.resize(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    double t = 0.9999 * static_cast<double>(i) / (kPoints - 1);
    targets_[i] = t;
    values_[i] = solve_rho_star(t);
  }
}

const ExponentialCopulaMap& ExponentialCopulaMap::instance() {
  static ExponentialCopulaMap map;
  return map;
}

double ExponentialCopulaMap::rho_star(double target) const {
  if (target < 0.0 || target >= 1.0)
    throw ConfigError("equivalent correlation target must lie in [0, 1)");
  if (target >= targets_.back()) return values_.back();
  double pos = target / 0.9999 * static_cast<double>(targets_.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= targets_.size()) return values_.back();
  double frac = pos - static_cast<double>(lo);
  return values_[lo] + frac * (values_[lo + 1] - values_[lo]);
}

}  // namespace adt
