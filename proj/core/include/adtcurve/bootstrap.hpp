#pragma once

#include <cstdint>

#include "adtcurve/estimator.hpp"
#include "adtcurve/spatial.hpp"

namespace adt {

struct BootstrapOptions {
  int n_boot = 100;
  std::uint64_t seed = 1;
  int threads = 0;
  double min_success_fraction = 0.8;
};

/// Weighted-bootstrap confidence intervals around a completed point estimate.
/// Each replicate draws one weight per site from the weight model, expands and
/// rescales them per period, refits the nuisance functions and the dose
/// regression with the point estimate's frozen hyperparameters and bandwidth,
/// and records the curve. A failed replicate is retried once on a fresh
/// substream, then recorded as missing.
ADTCurve bootstrap_adt(const PanelDataset& panel, const NuisanceConfig& config,
                       CurveMethod method, const PointEstimate& point,
                       const SpatialWeightModel& weight_model,
                       const BootstrapOptions& options);

}  // namespace adt
