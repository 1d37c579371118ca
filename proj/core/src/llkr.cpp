#include "adtcurve/llkr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adtcurve/common.hpp"

namespace adt {

namespace {

constexpr double kCutoff = 8.5;     // Gaussian kernel support in bandwidths
constexpr double kMassFloor = 1e-8;

struct LocalSums {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
  void add(double u, double k, double w, double v) {
    double kw = k * w;
    s0 += kw;
    s1 += kw * u;
    s2 += kw * u * u;
    t0 += kw * v;
    t1 += kw * u * v;
  }
  void remove(double u, double k, double w, double v) { add(u, -k, w, v); }
  // intercept of the local weighted least squares line; local constant when
  // the design is singular
  double intercept() const {
    double denom = s0 * s2 - s1 * s1;
    if (s2 <= 0.0 || denom <= 1e-12 * s0 * s2) return t0 / s0;
    return (s2 * t0 - s1 * t1) / denom;
  }
};

// Accumulate kernel sums over the window around d0, skipping rows of one site
// (skip_site = -1 keeps everything).
LocalSums window_sums(std::span<const double> d, std::span<const double> v,
                      std::span<const double> w, std::span<const int> site, double d0,
                      double h, int skip_site) {
  LocalSums sums;
  auto lo = std::lower_bound(d.begin(), d.end(), d0 - kCutoff * h);
  auto hi = std::upper_bound(d.begin(), d.end(), d0 + kCutoff * h);
  for (auto it = lo; it != hi; ++it) {
    std::size_t i = static_cast<std::size_t>(it - d.begin());
    if (skip_site >= 0 && site[i] == skip_site) continue;
    double u = (d[i] - d0) / h;
    sums.add(u, std::exp(-0.5 * u * u), w[i], v[i]);
  }
  return sums;
}

double solve_with_widening(std::span<const double> d, std::span<const double> v,
                           std::span<const double> w, std::span<const int> site,
                           double d0, double h, int skip_site, bool* widened) {
  if (widened) *widened = false;
  for (int attempt = 0; attempt < 64; ++attempt) {
    LocalSums sums = window_sums(d, v, w, site, d0, h, skip_site);
    if (sums.s0 >= kMassFloor) {
      return sums.intercept();
    }
    h *= 2.0;
    if (widened) *widened = true;
  }
  throw NumericError("LLKR: kernel mass underflow persists after widening");
}

}  // namespace

LlkrFit::LlkrFit(std::vector<double> d, std::vector<double> v, std::vector<double> w,
                 std::vector<int> site, double bandwidth) {
  const std::size_t n = d.size();
  if (n < 2 || v.size() != n || w.size() != n || site.size() != n)
    throw DataError("LLKR fit: inputs must be equal-length with n >= 2");
  if (!(bandwidth > 0.0)) throw ConfigError("LLKR bandwidth must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  d_.resize(n);
  v_.resize(n);
  w_.resize(n);
  site_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d_[i] = d[order[i]];
    v_[i] = v[order[i]];
    w_[i] = w[order[i]];
    site_[i] = site[order[i]];
  }
  if (d_.front() == d_.back())
    throw DataError("LLKR fit: need at least 2 distinct dose values");
  h_ = bandwidth;
}

double LlkrFit::predict(double d0, bool* widened) const {
  bool local_widened = false;
  double out = solve_with_widening(d_, v_, w_, site_, d0, h_, -1, &local_widened);
  if (local_widened) ++n_widened_;
  if (widened) *widened = local_widened;
  return out;
}

std::vector<double> LlkrFit::predict_many(std::span<const double> d0) const {
  std::vector<double> out(d0.size());
  for (std::size_t i = 0; i < d0.size(); ++i) out[i] = predict(d0[i]);
  return out;
}

std::vector<double> bandwidth_ladder(std::span<const double> d, int size) {
  std::vector<double> uniq(d.begin(), d.end());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < 2) throw DataError("bandwidth ladder: need 2 distinct doses");
  std::vector<double> gaps;
  for (std::size_t i = 1; i < uniq.size(); ++i) gaps.push_back(uniq[i] - uniq[i - 1]);
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  double median_gap = gaps[gaps.size() / 2];
  double lo = std::max(1e-9, 0.5 * median_gap);
  double hi = uniq.back() - uniq.front();
  if (hi <= lo) hi = lo * 10.0;

  std::vector<double> ladder(static_cast<std::size_t>(size));
  double log_lo = std::log(lo), log_hi = std::log(hi);
  for (int i = 0; i < size; ++i) {
    double frac = size > 1 ? static_cast<double>(i) / (size - 1) : 0.0;
    ladder[static_cast<std::size_t>(i)] = std::exp(log_lo + frac * (log_hi - log_lo));
  }
  return ladder;
}

double llkr_cv_score(std::span<const double> d, std::span<const double> v,
                     std::span<const double> w, std::span<const int> site, double h,
                     LlkrOptions::Cv cv) {
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  std::vector<double> ds(n), vs(n), ws(n);
  std::vector<int> ss(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds[i] = d[order[i]];
    vs[i] = v[order[i]];
    ws[i] = w[order[i]];
    ss[i] = site[order[i]];
  }

  double score = 0.0;
  if (cv == LlkrOptions::Cv::kLeaveOneLocationOut) {
    // Group rows by site; each site is predicted with all of its rows removed.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return ss[a] < ss[b]; });
    std::size_t g = 0;
    while (g < n) {
      std::size_t g_end = g;
      while (g_end < n && ss[idx[g_end]] == ss[idx[g]]) ++g_end;
      int s = ss[idx[g]];
      // one local solve per distinct dose within the site
      double last_d = std::numeric_limits<double>::quiet_NaN();
      double last_fit = 0.0;
      for (std::size_t k = g; k < g_end; ++k) {
        std::size_t i = idx[k];
        if (ds[i] != last_d) {
          last_d = ds[i];
          last_fit = solve_with_widening(ds, vs, ws, ss, ds[i], h, s, nullptr);
        }
        double err = vs[i] - last_fit;
        score += ws[i] * err * err;
      }
      g = g_end;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      double fit = 0.0;
      double hh = h;
      for (int attempt = 0;; ++attempt) {
        LocalSums sums = window_sums(ds, vs, ws, ss, ds[i], hh, -1);
        sums.remove(0.0, 1.0, ws[i], vs[i]);  // drop own row (u = 0, kernel 1)
        if (sums.s0 >= kMassFloor) {
          fit = sums.intercept();
          break;
        }
        if (attempt >= 64)
          throw NumericError("LLKR CV: kernel mass underflow persists after widening");
        hh *= 2.0;
      }
      double err = vs[i] - fit;
      score += ws[i] * err * err;
    }
  }
  return score;
}

double select_bandwidth(std::span<const double> d, std::span<const double> v,
                        std::span<const double> w, std::span<const int> site,
                        const LlkrOptions& options) {
  std::vector<double> ladder = bandwidth_ladder(d, options.ladder_size);
  double best_h = ladder.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double h : ladder) {
    double score = llkr_cv_score(d, v, w, site, h, options.cv);
    if (score < best_score) {
      best_score = score;
      best_h = h;
    }
  }
  return best_h;
}

LlkrFit llkr_fit(std::span<const double> d, std::span<const double> v,
                 std::span<const double> w, std::span<const int> site,
                 const LlkrOptions& options) {
  double h = options.bandwidth;
  if (h <= 0.0) h = select_bandwidth(d, v, w, site, options);
  return LlkrFit(std::vector<double>(d.begin(), d.end()),
                 std::vector<double>(v.begin(), v.end()),
                 std::vector<double>(w.begin(), w.end()),
                 std::vector<int>(site.begin(), site.end()), h);
}

}  // namespace adt
