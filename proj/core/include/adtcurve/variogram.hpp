#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

namespace adt {

struct EmpiricalVariogram {
  std::vector<double> bin_mid;  // mean pair distance per retained bin (km)
  std::vector<double> gamma;    // robust semivariance
  std::vector<std::size_t> counts;
  double max_pair_distance = 0.0;
};

/// Cressie-Hawkins robust variogram of per-site values over equal-count
/// distance bins up to half the maximum pairwise distance. Bins with fewer
/// than min_pairs pairs are dropped.
EmpiricalVariogram robust_variogram(std::span<const double> site_values,
                                    const Eigen::MatrixXd& distances, int n_bins = 15,
                                    std::size_t min_pairs = 30);

enum class CorrFamily { kExponential, kMatern, kPower, kLinear, kSpherical };

std::string family_name(CorrFamily family);
CorrFamily family_from_name(const std::string& name);

struct CorrelationModel {
  CorrFamily family = CorrFamily::kExponential;
  double range_km = 0.0;    // L (exponential, matern, linear, spherical)
  double smoothness = 0.0;  // Matern nu
  double power_a = 0.0;     // power family exponent
  double power_z = 0.0;     // power family scale
  double sigma2 = 1.0;      // sill
  double fit_rmse = 0.0;
  bool converged = true;

  /// Correlation at distance m km; Corr(0) = 1.
  double corr(double m) const;

  static CorrelationModel exponential(double range, double sigma2 = 1.0);
  static CorrelationModel matern(double range, double nu, double sigma2 = 1.0);
  static CorrelationModel power(double a, double z, double sigma2 = 1.0);
  static CorrelationModel linear(double range, double sigma2 = 1.0);
  static CorrelationModel spherical(double range, double sigma2 = 1.0);
};

/// Weighted (by pair count) least-squares fit of sigma^2 * (1 - Corr(m)) to
/// the empirical variogram for each family; returns the lowest-RMSE fit.
/// Families that fail to fit are skipped with a warning.
CorrelationModel fit_correlation(const EmpiricalVariogram& variogram,
                                 std::span<const CorrFamily> families,
                                 std::vector<CorrelationModel>* all_fits = nullptr,
                                 std::vector<std::string>* warnings = nullptr);

}  // namespace adt
