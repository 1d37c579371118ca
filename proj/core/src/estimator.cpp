#include "adtcurve/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adtcurve/common.hpp"
#include "adtcurve/csv.hpp"
#include "adtcurve/stats.hpp"

namespace adt {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

PseudoOutcomes compute_pseudo_outcomes(const PanelDataset& panel,
                                       const NuisanceBundle& bundle,
                                       const NuisanceConfig& config) {
  const std::size_t n = panel.n_obs();
  PseudoOutcomes out;
  out.xi.assign(n, kNaN);
  out.tau.assign(n, 0.0);
  out.stabilized_ratio.assign(n, kNaN);

  // Stabilized ratio f(D)/pi_D(D|X), truncated at its upper quantile.
  std::vector<double> ratios;
  for (std::size_t r = 0; r < n; ++r) {
    if (!panel.is_post(r)) continue;
    double ratio = bundle.f_at_obs[r] / bundle.pi_d_hat[r];
    out.stabilized_ratio[r] = ratio;
    ratios.push_back(ratio);
  }
  if (config.truncate_ratio && !ratios.empty()) {
    double cap = quantile(ratios, config.ratio_truncation_quantile);
    for (std::size_t r = 0; r < n; ++r)
      if (panel.is_post(r) && out.stabilized_ratio[r] > cap)
        out.stabilized_ratio[r] = cap;
  }

  const double p_post = bundle.p_post;
  for (std::size_t r = 0; r < n; ++r) {
    if (panel.is_post(r)) {
      double xi = out.stabilized_ratio[r] * (panel.y[r] - bundle.mu1_hat[r]) +
                  bundle.m_at_obs[r];
      double tau = bundle.mu0_hat[r] / p_post;
      if (!std::isfinite(xi) || !std::isfinite(tau))
        throw NumericError("non-finite pseudo-outcome at row " + std::to_string(r) +
                           " (site " + panel.site_ids[panel.obs_site[r]] + ", t=" +
                           std::to_string(panel.obs_t[r]) + ")");
      out.xi[r] = xi;
      out.tau[r] = tau;
    } else {
      double pb = bundle.pi_b_hat[r];
      double tau = (pb / (1.0 - pb)) * (panel.y[r] - bundle.mu0_hat[r]) / p_post;
      if (!std::isfinite(tau))
        throw NumericError("non-finite pseudo-outcome at row " + std::to_string(r));
      out.tau[r] = tau;
    }
  }
  return out;
}

CurveInputs curve_inputs(const PanelDataset& panel, CurveMethod method,
                         const NuisanceBundle* bundle, const PseudoOutcomes* pseudo,
                         std::span<const double> row_weights) {
  CurveInputs inputs;
  auto weight_of = [&](std::size_t r) {
    return row_weights.empty() ? 1.0 : row_weights[r];
  };

  for (std::size_t r = 0; r < panel.n_obs(); ++r) {
    if (!panel.is_post(r)) continue;
    inputs.d.push_back(panel.dose[panel.obs_site[r]]);
    inputs.w.push_back(weight_of(r));
    inputs.site.push_back(panel.obs_site[r]);
    switch (method) {
      case CurveMethod::kMultiplyRobust:
        inputs.v.push_back(pseudo->xi[r]);
        break;
      case CurveMethod::kOutcomeOnly:
        inputs.v.push_back(bundle->mu1_hat[r]);
        break;
      case CurveMethod::kNaive:
        inputs.v.push_back(panel.y[r]);
        break;
    }
  }

  double acc = 0.0, wsum = 0.0;
  switch (method) {
    case CurveMethod::kMultiplyRobust:
      for (std::size_t r = 0; r < panel.n_obs(); ++r) {
        acc += weight_of(r) * pseudo->tau[r];
        wsum += weight_of(r);
      }
      break;
    case CurveMethod::kOutcomeOnly:
      for (std::size_t r = 0; r < panel.n_obs(); ++r) {
        if (!panel.is_post(r)) continue;
        acc += weight_of(r) * bundle->mu0_hat[r];
        wsum += weight_of(r);
      }
      break;
    case CurveMethod::kNaive:
      for (std::size_t r = 0; r < panel.n_obs(); ++r) {
        if (panel.is_post(r)) continue;
        acc += weight_of(r) * panel.y[r];
        wsum += weight_of(r);
      }
      break;
  }
  inputs.psi0 = acc / wsum;
  return inputs;
}

ADTCurve evaluate_curve(const CurveInputs& inputs, std::span<const double> grid,
                        const LlkrOptions& llkr, LlkrFit* out_fit) {
  LlkrFit fit = llkr_fit(inputs.d, inputs.v, inputs.w, inputs.site, llkr);
  ADTCurve curve;
  curve.grid.assign(grid.begin(), grid.end());
  curve.bandwidth = fit.bandwidth();
  curve.psi_d = fit.predict_many(grid);
  curve.psi0 = inputs.psi0;
  curve.psi.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) curve.psi[g] = curve.psi_d[g] - curve.psi0;
  if (out_fit) *out_fit = std::move(fit);
  return curve;
}

PointEstimate estimate_adt(const PanelDataset& panel, const EstimateOptions& options) {
  PointEstimate point;
  NuisanceConfig cfg = options.nuisance;
  cfg.apply_default_roles(panel);
  point.bundle = fit_nuisance_bundle(panel, cfg, {}, options.seed, options.threads);
  point.pseudo = compute_pseudo_outcomes(panel, point.bundle, cfg);
  CurveInputs inputs =
      curve_inputs(panel, CurveMethod::kMultiplyRobust, &point.bundle, &point.pseudo, {});
  point.curve = evaluate_curve(inputs, point.bundle.dose_grid, options.llkr, &point.xi_fit);
  point.frozen = point.bundle.hypers;
  return point;
}

ADTCurve estimate_outcome_regression_only(const PanelDataset& panel,
                                          const NuisanceBundle& bundle,
                                          const LlkrOptions& llkr) {
  CurveInputs inputs = curve_inputs(panel, CurveMethod::kOutcomeOnly, &bundle, nullptr, {});
  return evaluate_curve(inputs, bundle.dose_grid, llkr, nullptr);
}

ADTCurve estimate_naive(const PanelDataset& panel, const LlkrOptions& llkr,
                        std::span<const double> site_weights) {
  std::vector<double> row_w = expand_and_scale_weights(panel, site_weights);
  CurveInputs inputs = curve_inputs(panel, CurveMethod::kNaive, nullptr, nullptr, row_w);
  std::vector<double> grid = make_dose_grid(101);
  return evaluate_curve(inputs, grid, llkr, nullptr);
}

PointEstimate pretrends_mode(const PanelDataset& panel, int pseudo_t0, int pseudo_t1,
                             const EstimateOptions& options) {
  PanelDataset sub = pretrends_subset(panel, pseudo_t0, pseudo_t1);
  return estimate_adt(sub, options);
}

CurveSummary summarize_curve(const ADTCurve& curve, const PanelDataset& panel) {
  CurveSummary summary;
  double acc = 0.0;
  double acc_sig = 0.0;
  for (std::size_t i = 0; i < panel.n_sites(); ++i) {
    double d = panel.dose[i];
    double psi = interp_on_grid(curve.grid, curve.psi, d);
    acc += psi;
    if (!curve.ci_lo.empty()) {
      double lo = interp_on_grid(curve.grid, curve.ci_lo, d);
      double hi = interp_on_grid(curve.grid, curve.ci_hi, d);
      if (lo > 0.0 || hi < 0.0) {
        acc_sig += psi;
        ++summary.n_significant_sites;
      }
    }
  }
  summary.average_effect = acc / static_cast<double>(panel.n_sites());
  if (summary.n_significant_sites > 0)
    summary.average_effect_significant_only =
        acc_sig / static_cast<double>(summary.n_significant_sites);

  double pre_acc = 0.0;
  std::size_t pre_n = 0;
  for (std::size_t r = 0; r < panel.n_obs(); ++r) {
    if (panel.is_post(r)) continue;
    pre_acc += panel.y[r];
    ++pre_n;
  }
  summary.pre_period_mean = pre_acc / static_cast<double>(pre_n);
  summary.percent_change = 100.0 * summary.average_effect / summary.pre_period_mean;
  return summary;
}

void write_curve_csv(const std::string& path, const ADTCurve& curve) {
  CsvTable table;
  table.header = {"delta", "psi", "psi_d", "psi_0", "ci_lo", "ci_hi"};
  for (std::size_t g = 0; g < curve.grid.size(); ++g) {
    std::string lo = curve.ci_lo.empty() ? "" : format_double(curve.ci_lo[g]);
    std::string hi = curve.ci_hi.empty() ? "" : format_double(curve.ci_hi[g]);
    table.rows.push_back({format_double(curve.grid[g]), format_double(curve.psi[g]),
                          format_double(curve.psi_d[g]), format_double(curve.psi0), lo,
                          hi});
  }
  write_csv(path, table);
}

void write_draws_csv(const std::string& path, const ADTCurve& curve) {
  CsvTable table;
  table.header = {"replicate"};
  for (double g : curve.grid) table.header.push_back("d" + format_double(g));
  for (std::size_t b = 0; b < curve.draws.size(); ++b) {
    std::vector<std::string> row = {std::to_string(b)};
    for (double v : curve.draws[b]) row.push_back(format_double(v));
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

}  // namespace adt
