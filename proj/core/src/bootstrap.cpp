#include "adtcurve/bootstrap.hpp"

#include <cmath>

#include "adtcurve/common.hpp"
#include "adtcurve/parallel.hpp"
#include "adtcurve/rng.hpp"
#include "adtcurve/stats.hpp"

namespace adt {

namespace {

std::vector<double> replicate_curve(const PanelDataset& panel, const NuisanceConfig& config,
                                    CurveMethod method, const PointEstimate& point,
                                    std::span<const double> site_weights,
                                    std::uint64_t fit_seed) {
  LlkrOptions llkr;
  llkr.bandwidth = point.curve.bandwidth;  // frozen from the point estimate

  if (method == CurveMethod::kNaive) {
    std::vector<double> row_w = expand_and_scale_weights(panel, site_weights);
    CurveInputs inputs = curve_inputs(panel, method, nullptr, nullptr, row_w);
    ADTCurve curve = evaluate_curve(inputs, point.curve.grid, llkr);
    return curve.psi;
  }

  NuisanceBundle bundle =
      fit_nuisance_bundle(panel, config, site_weights, fit_seed, 1, &point.frozen);
  std::vector<double> row_w = expand_and_scale_weights(panel, site_weights);
  if (method == CurveMethod::kMultiplyRobust) {
    PseudoOutcomes pseudo = compute_pseudo_outcomes(panel, bundle, config);
    CurveInputs inputs = curve_inputs(panel, method, &bundle, &pseudo, row_w);
    ADTCurve curve = evaluate_curve(inputs, point.curve.grid, llkr);
    return curve.psi;
  }
  CurveInputs inputs = curve_inputs(panel, method, &bundle, nullptr, row_w);
  ADTCurve curve = evaluate_curve(inputs, point.curve.grid, llkr);
  return curve.psi;
}

}  // namespace

ADTCurve bootstrap_adt(const PanelDataset& panel, const NuisanceConfig& config,
                       CurveMethod method, const PointEstimate& point,
                       const SpatialWeightModel& weight_model,
                       const BootstrapOptions& options) {
  if (options.n_boot < 1) throw ConfigError("n_boot must be >= 1");
  NuisanceConfig cfg = config;
  cfg.apply_default_roles(panel);

  const std::size_t n_boot = static_cast<std::size_t>(options.n_boot);
  std::vector<std::vector<double>> slots(n_boot);
  std::vector<char> ok(n_boot, 0);

  parallel_for(
      n_boot,
      [&](std::size_t r) {
        try {
          std::vector<double> w = weight_model.sample_site_weights(options.seed, r);
          slots[r] = replicate_curve(panel, cfg, method, point, w,
                                     substream_seed(options.seed, salt::kBootFit, r));
          ok[r] = 1;
        } catch (const std::exception&) {
          try {
            // one retry on a fresh substream
            std::vector<double> w =
                weight_model.sample_site_weights(options.seed, r + (1ULL << 32));
            slots[r] = replicate_curve(panel, cfg, method, point, w,
                                       substream_seed(options.seed, salt::kBootRetry, r));
            ok[r] = 1;
          } catch (const std::exception&) {
            ok[r] = 0;
          }
        }
      },
      options.threads);

  ADTCurve curve = point.curve;
  curve.n_boot_requested = options.n_boot;
  curve.draws.clear();
  for (std::size_t r = 0; r < n_boot; ++r)
    if (ok[r]) curve.draws.push_back(std::move(slots[r]));
  curve.n_boot_success = static_cast<int>(curve.draws.size());
  if (curve.n_boot_success <
      static_cast<int>(std::ceil(options.min_success_fraction * options.n_boot)))
    throw NumericError("bootstrap: only " + std::to_string(curve.n_boot_success) + " of " +
                       std::to_string(options.n_boot) + " replicates succeeded");

  const std::size_t n_grid = curve.grid.size();
  curve.ci_lo.resize(n_grid);
  curve.ci_hi.resize(n_grid);
  std::vector<double> column(curve.draws.size());
  for (std::size_t g = 0; g < n_grid; ++g) {
    for (std::size_t b = 0; b < curve.draws.size(); ++b) column[b] = curve.draws[b][g];
    curve.ci_lo[g] = quantile(column, 0.025);
    curve.ci_hi[g] = quantile(column, 0.975);
  }
  return curve;
}

}  // namespace adt
