#pragma once

#include <span>
#include <vector>

namespace adt {

/// Weighted one-dimensional Gaussian kernel density with Silverman bandwidth.
class GaussianKde {
 public:
  GaussianKde(std::vector<double> points, std::vector<double> weights = {});

  double bandwidth() const { return h_; }
  std::size_t size() const { return pts_.size(); }

  /// Exact density; kernel contributions beyond 8.5 bandwidths are dropped
  /// (below 2e-16 relative, so the quadrature normalization check still holds).
  double density(double z) const;

  /// Dense tabulation for hot loops; linear interpolation between knots.
  struct Table {
    double z_lo = 0.0, step = 1.0;
    std::vector<double> values;
    double eval(double z) const {
      double pos = (z - z_lo) / step;
      if (pos <= 0.0 || pos >= static_cast<double>(values.size() - 1)) return 0.0;
      std::size_t i = static_cast<std::size_t>(pos);
      double frac = pos - static_cast<double>(i);
      return values[i] + frac * (values[i + 1] - values[i]);
    }
  };
  Table tabulate(double step_fraction = 1.0 / 16.0) const;

 private:
  std::vector<double> pts_;  // sorted
  std::vector<double> w_;    // aligned with pts_, summing to 1
  double h_ = 0.0;
};

}  // namespace adt
