#include "adtcurve/variogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adtcurve/common.hpp"

namespace adt {

EmpiricalVariogram robust_variogram(std::span<const double> site_values,
                                    const Eigen::MatrixXd& distances, int n_bins,
                                    std::size_t min_pairs) {
  const std::size_t n = site_values.size();
  if (n < 2) throw DataError("variogram needs at least 2 sites");
  if (distances.rows() != static_cast<Eigen::Index>(n) ||
      distances.cols() != static_cast<Eigen::Index>(n))
    throw DataError("variogram: distance matrix size mismatch");
  if (n_bins < 1) throw ConfigError("variogram: n_bins must be >= 1");

  double max_dist = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      max_dist = std::max(max_dist, distances(i, j));
  const double cutoff = 0.5 * max_dist;

  struct Pair {
    double dist;
    double root_diff;  // |v_i - v_j|^(1/2)
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double m = distances(i, j);
      if (m > cutoff) continue;
      pairs.push_back({m, std::sqrt(std::abs(site_values[i] - site_values[j]))});
    }
  }
  if (pairs.empty()) throw DataError("variogram: no site pairs within the cutoff");
  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& a, const Pair& b) { return a.dist < b.dist; });

  EmpiricalVariogram out;
  out.max_pair_distance = max_dist;
  const std::size_t total = pairs.size();
  const std::size_t bins = static_cast<std::size_t>(n_bins);
  for (std::size_t b = 0; b < bins; ++b) {
    std::size_t lo = total * b / bins;
    std::size_t hi = total * (b + 1) / bins;
    if (hi <= lo) continue;
    std::size_t count = hi - lo;
    if (count < min_pairs) continue;
    double mean_dist = 0.0, mean_root = 0.0;
    for (std::size_t p = lo; p < hi; ++p) {
      mean_dist += pairs[p].dist;
      mean_root += pairs[p].root_diff;
    }
    mean_dist /= static_cast<double>(count);
    mean_root /= static_cast<double>(count);
    // Cressie-Hawkins: 0.5 * mean(|diff|^0.5)^4 / (0.457 + 0.494/N)
    double gamma = 0.5 * std::pow(mean_root, 4.0) /
                   (0.457 + 0.494 / static_cast<double>(count));
    out.bin_mid.push_back(mean_dist);
    out.gamma.push_back(gamma);
    out.counts.push_back(count);
  }
  if (out.bin_mid.empty())
    throw DataError("variogram: every distance bin has fewer than min_pairs pairs");
  return out;
}

std::string family_name(CorrFamily family) {
  switch (family) {
    case CorrFamily::kExponential: return "exponential";
    case CorrFamily::kMatern: return "matern";
    case CorrFamily::kPower: return "power";
    case CorrFamily::kLinear: return "linear";
    case CorrFamily::kSpherical: return "spherical";
  }
  return "?";
}

CorrFamily family_from_name(const std::string& name) {
  if (name == "exponential") return CorrFamily::kExponential;
  if (name == "matern") return CorrFamily::kMatern;
  if (name == "power") return CorrFamily::kPower;
  if (name == "linear") return CorrFamily::kLinear;
  if (name == "spherical") return CorrFamily::kSpherical;
  throw ConfigError("unknown correlation family: " + name);
}

double CorrelationModel::corr(double m) const {
  if (m <= 0.0) return 1.0;
  switch (family) {
    case CorrFamily::kExponential:
      return std::exp(-m / range_km);
    case CorrFamily::kMatern: {
      double x = m / range_km;
      if (x < 1e-10) return 1.0;
      if (x > 600.0) return 0.0;
      double log_pre = (1.0 - smoothness) * std::log(2.0) - std::lgamma(smoothness) +
                       smoothness * std::log(x);
      double k = std::cyl_bessel_k(smoothness, x);
      if (k <= 0.0) return 0.0;
      double value = std::exp(log_pre + std::log(k));
      return std::clamp(value, 0.0, 1.0);
    }
    case CorrFamily::kPower:
      return std::max(0.0, 1.0 - power_z * std::pow(m, power_a));
    case CorrFamily::kLinear:
      return std::max(0.0, 1.0 - m / range_km);
    case CorrFamily::kSpherical: {
      if (m >= range_km) return 0.0;
      double x = m / range_km;
      return 1.0 - 1.5 * x + 0.5 * x * x * x;
    }
  }
  return 0.0;
}

CorrelationModel CorrelationModel::exponential(double range, double sigma2) {
  CorrelationModel m;
  m.family = CorrFamily::kExponential;
  m.range_km = range;
  m.sigma2 = sigma2;
  return m;
}
CorrelationModel CorrelationModel::matern(double range, double nu, double sigma2) {
  CorrelationModel m;
  m.family = CorrFamily::kMatern;
  m.range_km = range;
  m.smoothness = nu;
  m.sigma2 = sigma2;
  return m;
}
CorrelationModel CorrelationModel::power(double a, double z, double sigma2) {
  CorrelationModel m;
  m.family = CorrFamily::kPower;
  m.power_a = a;
  m.power_z = z;
  m.sigma2 = sigma2;
  return m;
}
CorrelationModel CorrelationModel::linear(double range, double sigma2) {
  CorrelationModel m;
  m.family = CorrFamily::kLinear;
  m.range_km = range;
  m.sigma2 = sigma2;
  return m;
}
CorrelationModel CorrelationModel::spherical(double range, double sigma2) {
  CorrelationModel m;
  m.family = CorrFamily::kSpherical;
  m.range_km = range;
  m.sigma2 = sigma2;
  return m;
}

namespace {

// Profile the sill: for fixed shape parameters the optimal sigma^2 of the
// weighted least squares gamma ~ sigma^2 * (1 - Corr(m)) is closed-form.
struct ProfiledFit {
  double sigma2 = 0.0;
  double rmse = std::numeric_limits<double>::infinity();
};

ProfiledFit profile_sigma2(const EmpiricalVariogram& vg, const CorrelationModel& shape) {
  double num = 0.0, den = 0.0, wsum = 0.0;
  for (std::size_t b = 0; b < vg.bin_mid.size(); ++b) {
    double c = 1.0 - shape.corr(vg.bin_mid[b]);
    double w = static_cast<double>(vg.counts[b]);
    num += w * vg.gamma[b] * c;
    den += w * c * c;
    wsum += w;
  }
  ProfiledFit fit;
  if (den <= 0.0) return fit;
  fit.sigma2 = std::max(0.0, num / den);
  double sse = 0.0;
  for (std::size_t b = 0; b < vg.bin_mid.size(); ++b) {
    double model = fit.sigma2 * (1.0 - shape.corr(vg.bin_mid[b]));
    double w = static_cast<double>(vg.counts[b]);
    sse += w * (vg.gamma[b] - model) * (vg.gamma[b] - model);
  }
  fit.rmse = std::sqrt(sse / wsum);
  return fit;
}

// Golden-section refinement of a 1-d shape parameter around a coarse grid
// minimum. objective(log_param) returns the profiled RMSE.
template <typename F>
double golden_refine(F objective, double log_lo, double log_hi) {
  constexpr double kPhi = 0.6180339887498949;
  double a = log_lo, b = log_hi;
  double x1 = b - kPhi * (b - a), x2 = a + kPhi * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kPhi * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kPhi * (b - a);
      f2 = objective(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

CorrelationModel fit_range_family(const EmpiricalVariogram& vg, CorrFamily family) {
  double m_min = vg.bin_mid.front(), m_max = vg.bin_mid.back();
  double log_lo = std::log(std::max(1e-6, m_min / 20.0));
  double log_hi = std::log(m_max * 20.0);

  auto make = [&](double range) {
    CorrelationModel shape;
    shape.family = family;
    shape.range_km = range;
    return shape;
  };
  auto objective = [&](double log_range) {
    return profile_sigma2(vg, make(std::exp(log_range))).rmse;
  };

  // coarse grid, then golden-section around the best cell
  const int kGrid = 96;
  double best_log = log_lo;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    double lg = log_lo + (log_hi - log_lo) * i / (kGrid - 1);
    double val = objective(lg);
    if (val < best_val) {
      best_val = val;
      best_log = lg;
    }
  }
  double step = (log_hi - log_lo) / (kGrid - 1);
  double refined = golden_refine(objective, best_log - step, best_log + step);

  CorrelationModel model = make(std::exp(refined));
  ProfiledFit fit = profile_sigma2(vg, model);
  model.sigma2 = fit.sigma2;
  model.fit_rmse = fit.rmse;
  model.converged = std::isfinite(fit.rmse) && fit.sigma2 > 0.0;
  return model;
}

CorrelationModel fit_matern(const EmpiricalVariogram& vg) {
  double m_min = vg.bin_mid.front(), m_max = vg.bin_mid.back();
  double log_l_lo = std::log(std::max(1e-6, m_min / 20.0));
  double log_l_hi = std::log(m_max * 20.0);
  double log_nu_lo = std::log(0.1), log_nu_hi = std::log(15.0);

  auto objective = [&](double log_l, double log_nu) {
    CorrelationModel shape = CorrelationModel::matern(std::exp(log_l), std::exp(log_nu));
    return profile_sigma2(vg, shape).rmse;
  };

  double best_l = log_l_lo, best_nu = log_nu_lo;
  double best_val = std::numeric_limits<double>::infinity();
  const int kGridL = 48, kGridNu = 25;
  for (int i = 0; i < kGridL; ++i) {
    double ll = log_l_lo + (log_l_hi - log_l_lo) * i / (kGridL - 1);
    for (int j = 0; j < kGridNu; ++j) {
      double ln = log_nu_lo + (log_nu_hi - log_nu_lo) * j / (kGridNu - 1);
      double val = objective(ll, ln);
      if (val < best_val) {
        best_val = val;
        best_l = ll;
        best_nu = ln;
      }
    }
  }
  // alternate golden-section refinements in each coordinate
  double step_l = (log_l_hi - log_l_lo) / (kGridL - 1);
  double step_nu = (log_nu_hi - log_nu_lo) / (kGridNu - 1);
  for (int round = 0; round < 3; ++round) {
    double nu_fixed = best_nu;
    best_l = golden_refine([&](double lg) { return objective(lg, nu_fixed); },
                           best_l - step_l, best_l + step_l);
    double l_fixed = best_l;
    best_nu = golden_refine([&](double lg) { return objective(l_fixed, lg); },
                            best_nu - step_nu, best_nu + step_nu);
  }

  CorrelationModel model = CorrelationModel::matern(std::exp(best_l), std::exp(best_nu));
  ProfiledFit fit = profile_sigma2(vg, model);
  model.sigma2 = fit.sigma2;
  model.fit_rmse = fit.rmse;
  model.converged = std::isfinite(fit.rmse) && fit.sigma2 > 0.0;
  return model;
}

// The power semivariance sigma^2 * z * m^a identifies only the product
// sigma^2 * z, fit by weighted log-log least squares. The sill is anchored at
// the largest binned distance so Corr stays in [0, 1] over the observed range.
CorrelationModel fit_power(const EmpiricalVariogram& vg) {
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t b = 0; b < vg.bin_mid.size(); ++b) {
    if (vg.gamma[b] <= 0.0 || vg.bin_mid[b] <= 0.0) continue;
    double w = static_cast<double>(vg.counts[b]);
    double x = std::log(vg.bin_mid[b]);
    double y = std::log(vg.gamma[b]);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  CorrelationModel model;
  model.family = CorrFamily::kPower;
  double det = sw * sxx - sx * sx;
  if (sw <= 0.0 || std::abs(det) < 1e-12) {
    model.converged = false;
    model.fit_rmse = std::numeric_limits<double>::infinity();
    return model;
  }
  double a = (sw * sxy - sx * sy) / det;
  double log_k = (sy - a * sx) / sw;
  a = std::clamp(a, 1e-3, 2.0);
  double k = std::exp(log_k);  // sigma^2 * z

  double m_anchor = vg.bin_mid.back();
  model.power_a = a;
  model.sigma2 = k * std::pow(m_anchor, a);
  model.power_z = model.sigma2 > 0.0 ? k / model.sigma2 : 0.0;

  double sse = 0.0, wsum = 0.0;
  for (std::size_t b = 0; b < vg.bin_mid.size(); ++b) {
    double fitted = model.sigma2 * (1.0 - model.corr(vg.bin_mid[b]));
    double w = static_cast<double>(vg.counts[b]);
    sse += w * (vg.gamma[b] - fitted) * (vg.gamma[b] - fitted);
    wsum += w;
  }
  model.fit_rmse = std::sqrt(sse / wsum);
  model.converged = std::isfinite(model.fit_rmse) && model.sigma2 > 0.0;
  return model;
}

}  // namespace

CorrelationModel fit_correlation(const EmpiricalVariogram& variogram,
                                 std::span<const CorrFamily> families,
                                 std::vector<CorrelationModel>* all_fits,
                                 std::vector<std::string>* warnings) {
  if (variogram.bin_mid.size() < 3)
    throw DataError("correlation fit needs at least 3 variogram bins");
  if (families.empty()) throw ConfigError("no correlation families requested");

  CorrelationModel best;
  best.converged = false;
  best.fit_rmse = std::numeric_limits<double>::infinity();
  for (CorrFamily family : families) {
    CorrelationModel fit;
    switch (family) {
      case CorrFamily::kMatern:
        fit = fit_matern(variogram);
        break;
      case CorrFamily::kPower:
        fit = fit_power(variogram);
        break;
      default:
        fit = fit_range_family(variogram, family);
        break;
    }
    if (all_fits) all_fits->push_back(fit);
    if (!fit.converged) {
      if (warnings)
        warnings->push_back("correlation family " + family_name(family) +
                            " failed to fit; skipped");
      continue;
    }
    if (fit.fit_rmse < best.fit_rmse) best = fit;
  }
  if (!best.converged)
    throw NumericError("no correlation family produced a usable fit");
  return best;
}

}  // namespace adt
