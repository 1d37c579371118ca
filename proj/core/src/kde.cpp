#include "adtcurve/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "adtcurve/common.hpp"

namespace adt {

namespace {
constexpr double kCutoff = 8.5;  // kernel support in bandwidths

double weighted_quantile_sorted(const std::vector<double>& x,
                                const std::vector<double>& w, double p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += w[i];
    if (acc >= p) return x[i];
  }
  return x.back();
}
}  // namespace

GaussianKde::GaussianKde(std::vector<double> points, std::vector<double> weights) {
  const std::size_t n = points.size();
  if (n == 0) throw NumericError("KDE over empty sample");
  if (weights.empty()) weights.assign(n, 1.0);
  if (weights.size() != n) throw NumericError("KDE weight length mismatch");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  pts_.resize(n);
  w_.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pts_[i] = points[order[i]];
    w_[i] = weights[order[i]];
    if (w_[i] < 0.0 || !std::isfinite(w_[i]))
      throw NumericError("KDE weights must be finite and nonnegative");
    total += w_[i];
  }
  if (total <= 0.0) throw NumericError("KDE weights sum to zero");
  for (double& w : w_) w /= total;

  // Silverman's rule with Kish effective sample size for weighted data.
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m += w_[i] * pts_[i];
  double var = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    var += w_[i] * (pts_[i] - m) * (pts_[i] - m);
    sumsq += w_[i] * w_[i];
  }
  double n_eff = 1.0 / sumsq;
  double sd = std::sqrt(var);
  double iqr = weighted_quantile_sorted(pts_, w_, 0.75) -
               weighted_quantile_sorted(pts_, w_, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0)
    throw NumericError("KDE sample is degenerate (zero spread)");
  h_ = 0.9 * spread * std::pow(n_eff, -0.2);
}

double GaussianKde::density(double z) const {
  const double lo = z - kCutoff * h_;
  const double hi = z + kCutoff * h_;
  auto begin = std::lower_bound(pts_.begin(), pts_.end(), lo);
  auto end = std::upper_bound(pts_.begin(), pts_.end(), hi);
  double s = 0.0;
  const double inv_h = 1.0 / h_;
  for (auto it = begin; it != end; ++it) {
    double u = (z - *it) * inv_h;
    s += w_[static_cast<std::size_t>(it - pts_.begin())] * std::exp(-0.5 * u * u);
  }
  return s * inv_h / std::sqrt(2.0 * std::numbers::pi);
}

GaussianKde::Table GaussianKde::tabulate(double step_fraction) const {
  Table table;
  table.step = h_ * step_fraction;
  table.z_lo = pts_.front() - (kCutoff + 0.5) * h_;
  double z_hi = pts_.back() + (kCutoff + 0.5) * h_;
  std::size_t n_knots = static_cast<std::size_t>((z_hi - table.z_lo) / table.step) + 2;
  table.values.resize(n_knots);
  for (std::size_t i = 0; i < n_knots; ++i)
    table.values[i] = density(table.z_lo + static_cast<double>(i) * table.step);
  return table;
}

}  // namespace adt
