#pragma once

#include <span>
#include <string>
#include <vector>

namespace adt {

/// Local linear kernel regression with a Gaussian kernel and observation
/// weights. Bandwidth is either fixed or selected by cross-validation over a
/// log-spaced ladder; the default CV leaves out one *location* at a time so
/// repeated observations of a site cannot vouch for each other.
struct LlkrOptions {
  double bandwidth = 0.0;  // 0 = select by CV
  int ladder_size = 40;
  enum class Cv { kLeaveOneLocationOut, kLeaveOneOut };
  Cv cv = Cv::kLeaveOneLocationOut;
};

class LlkrFit {
 public:
  LlkrFit() = default;
  LlkrFit(std::vector<double> d, std::vector<double> v, std::vector<double> w,
          std::vector<int> site, double bandwidth);

  double bandwidth() const { return h_; }
  /// Direct local solve at d0 (no grid interpolation). Falls back to a local
  /// constant fit when the local design is singular; widens the bandwidth
  /// locally when the kernel mass underflows (sets *widened if provided).
  double predict(double d0, bool* widened = nullptr) const;
  std::vector<double> predict_many(std::span<const double> d0) const;
  std::size_t n_widened() const { return n_widened_; }

 private:
  std::vector<double> d_, v_, w_;  // sorted by dose
  std::vector<int> site_;
  double h_ = 0.0;
  mutable std::size_t n_widened_ = 0;
};

std::vector<double> bandwidth_ladder(std::span<const double> d, int size);

/// CV score (weighted squared error) for one bandwidth; exposed so tests can
/// sweep the ladder with an independent oracle.
double llkr_cv_score(std::span<const double> d, std::span<const double> v,
                     std::span<const double> w, std::span<const int> site, double h,
                     LlkrOptions::Cv cv);

double select_bandwidth(std::span<const double> d, std::span<const double> v,
                        std::span<const double> w, std::span<const int> site,
                        const LlkrOptions& options);

LlkrFit llkr_fit(std::span<const double> d, std::span<const double> v,
                 std::span<const double> w, std::span<const int> site,
                 const LlkrOptions& options);

}  // namespace adt
