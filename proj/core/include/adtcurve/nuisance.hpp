#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adtcurve/kde.hpp"
#include "adtcurve/learner.hpp"
#include "adtcurve/panel.hpp"

namespace adt {

struct NuisanceConfig {
  LearnerConfig outcome_learner;     // mu0 and mu1
  LearnerConfig propensity_learner;  // pi_b and the dose/scale models
  // For a linear outcome learner, mu1 additionally needs dose terms.
  std::vector<std::vector<std::string>> mu1_extra_terms;

  int k_folds = 10;
  int dose_grid_size = 101;
  double pi_b_clip_lo = 0.001;
  double pi_b_clip_hi = 0.99;
  double gps_floor = 1e-4;    // floor for pi_d and f
  double scale_floor = 0.01;  // floor for the dose residual scale
  bool truncate_ratio = true;
  double ratio_truncation_quantile = 0.995;

  // Covariate roles; empty lists are filled by apply_default_roles.
  std::vector<std::string> mu_features;    // full set incl. t, site, province
  std::vector<std::string> pi_b_features;  // no time index
  std::vector<std::string> pi_d_features;  // no time index, no site id

  void apply_default_roles(const PanelDataset& panel);
};

/// Hyperparameters frozen at the point estimate and reused verbatim by every
/// bootstrap replicate.
struct FrozenHypers {
  int mu0_mtry = 0;
  int mu1_mtry = 0;
  int pi_b_mtry = 0;
  int dose_mtry = 0;
  std::vector<int> fold_of_site;
};

/// Plain-data result of nuisance fitting: per-row scores aligned with panel
/// rows (pre-period slots of post-only quantities hold NaN), the marginalized
/// curves on the dose grid, and bookkeeping for reuse and diagnostics.
struct NuisanceBundle {
  std::vector<double> dose_grid;
  std::vector<double> mu0_hat;   // all rows
  std::vector<double> pi_b_hat;  // all rows, clipped
  std::vector<double> mu1_hat;   // post rows
  std::vector<double> pi_d_hat;  // post rows, floored
  std::vector<double> m_curve;
  std::vector<double> f_curve;  // floored
  std::vector<double> m_at_obs;
  std::vector<double> f_at_obs;
  std::vector<int> fold_of_site;
  double p_post = 0.0;

  std::vector<std::string> mu0_features, mu1_features, pi_b_features, pi_d_features;
  FrozenHypers hypers;
  std::vector<std::string> warnings;

  void save(const std::string& dir) const;
  static NuisanceBundle load(const std::string& dir);
};

// ---- individual fitting operations ----------------------------------------

struct Mu0Fit {
  std::unique_ptr<FittedModel> model;
  int mtry = 0;
  std::vector<std::string> features;
  std::vector<double> predictions;  // all rows
  std::vector<std::string> warnings;
};
Mu0Fit fit_mu0(const PanelDataset& panel, const NuisanceConfig& config,
               std::span<const double> row_weights, std::uint64_t seed, int threads,
               std::optional<int> frozen_mtry = std::nullopt);

struct PiBFit {
  std::unique_ptr<FittedModel> model;
  int mtry = 0;
  std::vector<std::string> features;
  std::vector<double> predictions;  // all rows, clipped
  std::vector<std::string> warnings;
};
PiBFit fit_pi_b(const PanelDataset& panel, const NuisanceConfig& config,
                std::span<const double> row_weights, std::uint64_t seed, int threads,
                std::optional<int> frozen_mtry = std::nullopt);

struct CrossFitMu1 {
  std::vector<std::unique_ptr<FittedModel>> models;  // per fold
  std::vector<int> fold_of_site;
  std::vector<std::string> features;  // includes "dose"
  int dose_column = -1;
  int mtry = 0;
  std::vector<double> predictions;  // at observed dose, post rows
  std::vector<std::string> warnings;
};
CrossFitMu1 fit_mu1_crossfit(const PanelDataset& panel, const NuisanceConfig& config,
                             std::span<const double> row_weights,
                             std::span<const int> fold_of_site, std::uint64_t seed,
                             int threads, std::optional<int> frozen_mtry = std::nullopt);

struct GpsFold {
  std::unique_ptr<FittedModel> dose_model;
  std::unique_ptr<FittedModel> scale_model;
  std::optional<GaussianKde> kde;
  GaussianKde::Table kde_table;
};
struct CrossFitGps {
  std::vector<GpsFold> folds;
  std::vector<int> fold_of_site;
  std::vector<std::string> features;
  int mtry = 0;
  std::vector<double> dhat_at_obs;   // post rows
  std::vector<double> scale_at_obs;  // post rows, floored
  std::vector<double> pi_d_at_obs;   // post rows, floored
  double floor = 1e-4;
  std::vector<std::string> warnings;

  /// Conditional dose density at (delta | row's covariates), floored.
  double density(std::size_t panel_row, const PanelDataset& panel, double delta) const;
};
CrossFitGps fit_gps_crossfit(const PanelDataset& panel, const NuisanceConfig& config,
                             std::span<const double> row_weights,
                             std::span<const int> fold_of_site, std::uint64_t seed,
                             int threads, std::optional<int> frozen_mtry = std::nullopt);

/// Marginalized outcome regression m(delta) = weighted average over B=1 rows
/// of the cross-fit mu1(delta, X), per grid point.
std::vector<double> marginalize_m(const CrossFitMu1& mu1, const PanelDataset& panel,
                                  std::span<const double> dose_grid,
                                  std::span<const double> row_weights, int threads);

/// Marginalized GPS f(delta), floored.
std::vector<double> marginalize_f(const CrossFitGps& gps, const PanelDataset& panel,
                                  std::span<const double> dose_grid,
                                  std::span<const double> row_weights, double floor,
                                  int threads);

/// Fit everything and assemble the bundle. site_weights (one per site, empty
/// for the unweighted fit) are expanded to rows and rescaled per period.
NuisanceBundle fit_nuisance_bundle(const PanelDataset& panel, const NuisanceConfig& config,
                                   std::span<const double> site_weights,
                                   std::uint64_t seed, int threads,
                                   const FrozenHypers* frozen = nullptr);

// ---- helpers ---------------------------------------------------------------

std::vector<double> make_dose_grid(int size);

/// Piecewise-linear interpolation on an increasing grid; clamps out-of-range
/// queries (sets *clamped when provided).
double interp_on_grid(std::span<const double> grid, std::span<const double> values,
                      double x, bool* clamped = nullptr);

/// Expand per-site weights to rows and rescale so that the expanded weights
/// sum to the row count within each period separately.
std::vector<double> expand_and_scale_weights(const PanelDataset& panel,
                                             std::span<const double> site_weights);

}  // namespace adt
