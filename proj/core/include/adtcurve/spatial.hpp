#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "adtcurve/estimator.hpp"
#include "adtcurve/panel.hpp"
#include "adtcurve/variogram.hpp"

namespace adt {

/// Per-site residual summaries for the variogram stage: the time-mean of
/// xi - Psi_D(D) over the treated period.
struct ResidualSummary {
  std::vector<double> residuals;      // per post row, aligned with post_rows()
  std::vector<double> site_mean;      // per site
  std::vector<std::size_t> site_obs;  // post rows per site
};
ResidualSummary compute_residuals(const PanelDataset& panel, const PseudoOutcomes& pseudo,
                                  const LlkrFit& xi_fit);

/// Equivalent Gaussian correlation matrix and sampler for spatially correlated
/// Exponential(1) bootstrap weights.
struct SpatialWeightModel {
  Eigen::MatrixXd sigma_target;  // desired weight correlation (clamped to [0, 0.9999])
  Eigen::MatrixXd sigma_star;    // normal-scale equivalent, PD-repaired, unit diagonal
  Eigen::MatrixXd chol_lower;
  bool identity = false;

  static SpatialWeightModel from_correlation(const CorrelationModel& model,
                                             const Eigen::MatrixXd& distances);
  static SpatialWeightModel iid(std::size_t n_sites);

  /// One Exponential(1) weight per site; the draw stream depends only on
  /// (master_seed, replicate).
  std::vector<double> sample_site_weights(std::uint64_t master_seed,
                                          std::uint64_t replicate) const;
};

}  // namespace adt
