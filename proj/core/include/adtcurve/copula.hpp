#pragma once

#include <vector>

namespace adt {

/// Gaussian-copula correlation calibration for Exponential(1) marginals.
/// Sampling w = F_Exp^{-1}(Phi(z)) from correlated normals attenuates the
/// correlation; rho_star(t) returns the normal-scale correlation that yields
/// output correlation t after the transform.
class ExponentialCopulaMap {
 public:
  /// Output (weight-scale) correlation produced by normal-scale correlation
  /// rho_star_in; 2-D Gauss-Hermite product-moment quadrature.
  static double output_correlation(double rho_star_in, int nodes = 48);

  /// Invert the monotone map by bisection. target must lie in [0, 1).
  static double solve_rho_star(double target, int nodes = 48);

  /// Shared 200-point cache over targets [0, 0.9999], built lazily.
  static const ExponentialCopulaMap& instance();
  double rho_star(double target) const;

  const std::vector<double>& targets() const { return targets_; }
  const std::vector<double>& values() const { return values_; }

 private:
  ExponentialCopulaMap();
  std::vector<double> targets_;
  std::vector<double> values_;
};

}  // namespace adt
