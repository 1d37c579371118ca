#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adtcurve/llkr.hpp"
#include "adtcurve/nuisance.hpp"
#include "adtcurve/panel.hpp"

namespace adt {

/// Influence-function pseudo-outcomes. xi is defined on post rows (its B
/// multiplier zeroes it elsewhere; pre slots hold NaN); tau on every row.
struct PseudoOutcomes {
  std::vector<double> xi;
  std::vector<double> tau;
  std::vector<double> stabilized_ratio;  // f/pi_d after truncation; post rows
};

PseudoOutcomes compute_pseudo_outcomes(const PanelDataset& panel,
                                       const NuisanceBundle& bundle,
                                       const NuisanceConfig& config);

struct ADTCurve {
  std::vector<double> grid;
  std::vector<double> psi_d;
  double psi0 = 0.0;
  std::vector<double> psi;  // psi_d - psi0, pointwise
  std::vector<double> ci_lo, ci_hi;
  std::vector<std::vector<double>> draws;  // successful bootstrap curves
  int n_boot_requested = 0;
  int n_boot_success = 0;
  double bandwidth = 0.0;
};

enum class CurveMethod { kMultiplyRobust, kOutcomeOnly, kNaive };

/// The regression inputs for step 3: response values over B=1 rows, the
/// constant counterfactual term psi0, and the per-row weights.
struct CurveInputs {
  std::vector<double> d, v, w;
  std::vector<int> site;
  double psi0 = 0.0;
};
CurveInputs curve_inputs(const PanelDataset& panel, CurveMethod method,
                         const NuisanceBundle* bundle, const PseudoOutcomes* pseudo,
                         std::span<const double> row_weights);

/// Smooth the response on dose via LLKR and assemble the curve.
ADTCurve evaluate_curve(const CurveInputs& inputs, std::span<const double> grid,
                        const LlkrOptions& llkr, LlkrFit* out_fit = nullptr);

struct EstimateOptions {
  NuisanceConfig nuisance;
  LlkrOptions llkr;
  std::uint64_t seed = 1;
  int threads = 0;
};

/// Point estimate with everything a bootstrap replicate reuses.
struct PointEstimate {
  ADTCurve curve;
  NuisanceBundle bundle;
  PseudoOutcomes pseudo;
  LlkrFit xi_fit;
  FrozenHypers frozen;
};

PointEstimate estimate_adt(const PanelDataset& panel, const EstimateOptions& options);

/// Same nuisances, but the pseudo-outcome is replaced by the cross-fit
/// mu1(D, X) and psi0 by the B=1 average of mu0(X).
ADTCurve estimate_outcome_regression_only(const PanelDataset& panel,
                                          const NuisanceBundle& bundle,
                                          const LlkrOptions& llkr);

/// Confounder-naive comparison: LLKR of raw Y on D minus the pre-period mean.
ADTCurve estimate_naive(const PanelDataset& panel, const LlkrOptions& llkr,
                        std::span<const double> site_weights = {});

/// Re-run the estimator with a pseudo-treatment window inside the pre-period.
PointEstimate pretrends_mode(const PanelDataset& panel, int pseudo_t0, int pseudo_t1,
                             const EstimateOptions& options);

struct CurveSummary {
  double average_effect = 0.0;
  std::optional<double> average_effect_significant_only;
  std::size_t n_significant_sites = 0;
  double pre_period_mean = 0.0;
  double percent_change = 0.0;
};
CurveSummary summarize_curve(const ADTCurve& curve, const PanelDataset& panel);

void write_curve_csv(const std::string& path, const ADTCurve& curve);
void write_draws_csv(const std::string& path, const ADTCurve& curve);

}  // namespace adt
