#include "adtcurve/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numeric>

#include "adtcurve/common.hpp"
#include "adtcurve/csv.hpp"
#include "adtcurve/parallel.hpp"
#include "adtcurve/rng.hpp"
#include "adtcurve/stats.hpp"

namespace adt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> subset_values(std::span<const double> values,
                                  const std::vector<std::size_t>& rows) {
  if (values.empty()) return {};
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = values[rows[i]];
  return out;
}

std::vector<int> site_of_rows(const PanelDataset& panel,
                              const std::vector<std::size_t>& rows) {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = panel.obs_site[rows[i]];
  return out;
}

std::vector<int> t_of_rows(const PanelDataset& panel,
                           const std::vector<std::size_t>& rows) {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = panel.obs_t[rows[i]];
  return out;
}

}  // namespace

void NuisanceConfig::apply_default_roles(const PanelDataset& panel) {
  if (mu_features.empty()) {
    mu_features = panel.time_cov_names;
    for (const auto& s : panel.static_cov_names) mu_features.push_back(s);
    mu_features.push_back("t");
    mu_features.push_back("site");
    mu_features.push_back("province");
  }
  if (pi_b_features.empty()) {
    for (const auto& f : mu_features)
      if (f != "t") pi_b_features.push_back(f);
  }
  if (pi_d_features.empty()) {
    for (const auto& f : mu_features)
      if (f != "t" && f != "site") pi_d_features.push_back(f);
  }
}

std::vector<double> make_dose_grid(int size) {
  if (size < 2) throw ConfigError("dose grid needs at least 2 points");
  std::vector<double> grid(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i)
    grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / (size - 1);
  return grid;
}

double interp_on_grid(std::span<const double> grid, std::span<const double> values,
                      double x, bool* clamped) {
  if (clamped) *clamped = false;
  if (grid.size() != values.size() || grid.size() < 2)
    throw NumericError("interp_on_grid: bad grid");
  if (x <= grid.front()) {
    if (clamped && x < grid.front()) *clamped = true;
    return values.front();
  }
  if (x >= grid.back()) {
    if (clamped && x > grid.back()) *clamped = true;
    return values.back();
  }
  auto it = std::upper_bound(grid.begin(), grid.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - grid.begin());
  std::size_t lo = hi - 1;
  double frac = (x - grid[lo]) / (grid[hi] - grid[lo]);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> expand_and_scale_weights(const PanelDataset& panel,
                                             std::span<const double> site_weights) {
  if (site_weights.empty()) return {};
  if (site_weights.size() != panel.n_sites())
    throw DataError("site weight length != number of sites");
  const std::size_t n = panel.n_obs();
  std::vector<double> w(n);
  double sum_pre = 0.0, sum_post = 0.0;
  std::size_t n_pre = 0, n_post = 0;
  for (std::size_t r = 0; r < n; ++r) {
    w[r] = site_weights[panel.obs_site[r]];
    if (panel.is_post(r)) {
      sum_post += w[r];
      ++n_post;
    } else {
      sum_pre += w[r];
      ++n_pre;
    }
  }
  if (sum_pre <= 0.0 || sum_post <= 0.0)
    throw NumericError("weight mass vanished in one period");
  double scale_pre = static_cast<double>(n_pre) / sum_pre;
  double scale_post = static_cast<double>(n_post) / sum_post;
  for (std::size_t r = 0; r < n; ++r) w[r] *= panel.is_post(r) ? scale_post : scale_pre;
  return w;
}

Mu0Fit fit_mu0(const PanelDataset& panel, const NuisanceConfig& config,
               std::span<const double> row_weights, std::uint64_t seed, int threads,
               std::optional<int> frozen_mtry) {
  std::vector<std::size_t> rows = panel.pre_rows();
  if (rows.empty()) throw DataError("mu0: pre-period is empty");
  FeatureTable x = build_features(panel, config.mu_features, rows);
  std::vector<double> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) y[i] = panel.y[rows[i]];
  std::vector<double> w = subset_values(row_weights, rows);
  std::vector<int> t_idx = t_of_rows(panel, rows);

  Mu0Fit fit;
  LearnerConfig learner = config.outcome_learner;
  if (learner.type == "forest" && learner.mtry <= 0 && !frozen_mtry.has_value()) {
    // The temporal tuning split needs at least two distinct pre-period months.
    std::vector<int> distinct = t_idx;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2)
      throw NumericError("mu0: cannot form temporal folds (single pre-period month)");
  }
  FitRequest request;
  request.task = TreeTask::kRegression;
  request.policy = TuningPolicy::kTemporalBias;
  request.t_of_row = t_idx;
  request.seed = substream_seed(seed, salt::kNuisance, 0);
  request.threads = threads;
  request.mtry_override = frozen_mtry;
  FitResult result = fit_model(learner, x, y, w, request);
  fit.mtry = result.mtry_used;
  fit.warnings = result.warnings;
  fit.features = config.mu_features;

  std::vector<std::size_t> all_rows(panel.n_obs());
  std::iota(all_rows.begin(), all_rows.end(), 0);
  FeatureTable x_all = build_features(panel, config.mu_features, all_rows);
  fit.predictions = result.model->predict(x_all, threads);
  fit.model = std::move(result.model);
  return fit;
}

PiBFit fit_pi_b(const PanelDataset& panel, const NuisanceConfig& config,
                std::span<const double> row_weights, std::uint64_t seed, int threads,
                std::optional<int> frozen_mtry) {
  std::vector<std::size_t> rows(panel.n_obs());
  std::iota(rows.begin(), rows.end(), 0);
  FeatureTable x = build_features(panel, config.pi_b_features, rows);
  std::vector<double> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) y[i] = panel.is_post(rows[i]) ? 1.0 : 0.0;
  std::vector<double> w = subset_values(row_weights, rows);

  FitRequest request;
  request.task = TreeTask::kClassification;
  request.policy = TuningPolicy::kProbBounded;
  request.seed = substream_seed(seed, salt::kNuisance, 1);
  request.threads = threads;
  request.mtry_override = frozen_mtry;
  FitResult result = fit_model(config.propensity_learner, x, y, w, request);

  PiBFit fit;
  fit.mtry = result.mtry_used;
  fit.warnings = result.warnings;
  fit.features = config.pi_b_features;
  fit.predictions = result.model->predict(x, threads);
  for (double& p : fit.predictions)
    p = std::clamp(p, config.pi_b_clip_lo, config.pi_b_clip_hi);
  fit.model = std::move(result.model);
  return fit;
}

CrossFitMu1 fit_mu1_crossfit(const PanelDataset& panel, const NuisanceConfig& config,
                             std::span<const double> row_weights,
                             std::span<const int> fold_of_site, std::uint64_t seed,
                             int threads, std::optional<int> frozen_mtry) {
  std::vector<std::size_t> post = panel.post_rows();
  if (post.empty()) throw DataError("mu1: post-period is empty");
  if (fold_of_site.size() != panel.n_sites())
    throw DataError("mu1: fold map length != number of sites");

  CrossFitMu1 fit;
  fit.fold_of_site.assign(fold_of_site.begin(), fold_of_site.end());
  fit.features = config.mu_features;
  fit.features.push_back("dose");

  FeatureTable x_post = build_features(panel, fit.features, post);
  fit.dose_column = x_post.column_index("dose");
  std::vector<double> y_post(post.size());
  for (std::size_t i = 0; i < post.size(); ++i) y_post[i] = panel.y[post[i]];
  std::vector<double> w_post = subset_values(row_weights, post);

  LearnerConfig learner = config.outcome_learner;
  if (learner.type == "linear")
    for (const auto& term : config.mu1_extra_terms) learner.terms.push_back(term);

  int mtry = learner.mtry;
  if (frozen_mtry.has_value()) mtry = *frozen_mtry;
  if (learner.type == "forest" && mtry <= 0) {
    LearnerSpec tune_spec;
    tune_spec.task = TreeTask::kRegression;
    tune_spec.num_trees = learner.tuning_trees > 0 ? learner.tuning_trees : learner.num_trees;
    tune_spec.min_node_size = learner.min_node_size;
    tune_spec.histogram_bins = learner.histogram_bins;
    tune_spec.max_onehot_levels = learner.max_onehot_levels;
    TuningReport report =
        tune_mtry(tune_spec, x_post, y_post, w_post, TuningPolicy::kPlateau, {}, {},
                  substream_seed(seed, salt::kNuisance, 2), threads);
    mtry = report.selected;
    fit.warnings = report.warnings;
  }
  fit.mtry = mtry;

  int k = 0;
  for (int f : fold_of_site) k = std::max(k, f + 1);
  fit.models.resize(static_cast<std::size_t>(k));
  fit.predictions.assign(post.size(), 0.0);

  std::vector<std::vector<std::size_t>> held_of_fold(k), train_of_fold(k);
  for (std::size_t i = 0; i < post.size(); ++i) {
    int f = fold_of_site[panel.obs_site[post[i]]];
    for (int g = 0; g < k; ++g)
      (g == f ? held_of_fold[g] : train_of_fold[g]).push_back(i);
  }

  parallel_for(
      static_cast<std::size_t>(k),
      [&](std::size_t f) {
        if (held_of_fold[f].empty()) return;
        if (train_of_fold[f].empty())
          throw DataError("mu1 cross-fit: fold with empty training set");
        FeatureTable x_train = subset_rows(x_post, train_of_fold[f]);
        std::vector<double> y_train(train_of_fold[f].size());
        for (std::size_t i = 0; i < y_train.size(); ++i)
          y_train[i] = y_post[train_of_fold[f][i]];
        std::vector<double> w_train;
        if (!w_post.empty()) {
          w_train.resize(train_of_fold[f].size());
          for (std::size_t i = 0; i < w_train.size(); ++i)
            w_train[i] = w_post[train_of_fold[f][i]];
        }
        LearnerConfig fold_learner = learner;
        FitRequest request;
        request.task = TreeTask::kRegression;
        request.seed = substream_seed(seed, salt::kNuisance, 100 + f);
        request.threads = 1;
        request.mtry_override = fit.mtry > 0 ? std::optional<int>(fit.mtry) : std::nullopt;
        FitResult result = fit_model(fold_learner, x_train, y_train, w_train, request);
        FeatureTable x_held = subset_rows(x_post, held_of_fold[f]);
        std::vector<double> pred = result.model->predict(x_held, 1);
        for (std::size_t i = 0; i < held_of_fold[f].size(); ++i)
          fit.predictions[held_of_fold[f][i]] = pred[i];
        fit.models[f] = std::move(result.model);
      },
      threads);
  return fit;
}

double CrossFitGps::density(std::size_t panel_row, const PanelDataset& panel,
                            double delta) const {
  // panel_row must be a post row scored during fitting.
  (void)panel;
  double dhat = dhat_at_obs[panel_row];
  double scale = scale_at_obs[panel_row];
  int f = fold_of_site[panel.obs_site[panel_row]];
  double z = (delta - dhat) / scale;
  double dens = folds[f].kde->density(z) / scale;
  return std::max(dens, floor);
}

CrossFitGps fit_gps_crossfit(const PanelDataset& panel, const NuisanceConfig& config,
                             std::span<const double> row_weights,
                             std::span<const int> fold_of_site, std::uint64_t seed,
                             int threads, std::optional<int> frozen_mtry) {
  std::vector<std::size_t> post = panel.post_rows();
  if (post.empty()) throw DataError("gps: post-period is empty");

  CrossFitGps fit;
  fit.fold_of_site.assign(fold_of_site.begin(), fold_of_site.end());
  fit.features = config.pi_d_features;
  fit.floor = config.gps_floor;

  FeatureTable x_post = build_features(panel, fit.features, post);
  std::vector<double> d_post(post.size());
  for (std::size_t i = 0; i < post.size(); ++i)
    d_post[i] = panel.dose[panel.obs_site[post[i]]];
  std::vector<double> w_post = subset_values(row_weights, post);

  LearnerConfig learner = config.propensity_learner;
  int mtry = learner.mtry;
  if (frozen_mtry.has_value()) mtry = *frozen_mtry;
  if (learner.type == "forest" && mtry <= 0) {
    LearnerSpec tune_spec;
    tune_spec.task = TreeTask::kRegression;
    tune_spec.num_trees = learner.tuning_trees > 0 ? learner.tuning_trees : learner.num_trees;
    tune_spec.min_node_size = learner.min_node_size;
    tune_spec.histogram_bins = learner.histogram_bins;
    tune_spec.max_onehot_levels = learner.max_onehot_levels;
    std::vector<int> sites = site_of_rows(panel, post);
    TuningReport report =
        tune_mtry(tune_spec, x_post, d_post, w_post, TuningPolicy::kSiteFold, sites, {},
                  substream_seed(seed, salt::kNuisance, 3), threads);
    mtry = report.selected;
    fit.warnings = report.warnings;
  }
  fit.mtry = mtry;

  int k = 0;
  for (int f : fold_of_site) k = std::max(k, f + 1);
  fit.folds.resize(static_cast<std::size_t>(k));
  fit.dhat_at_obs.assign(panel.n_obs(), kNaN);
  fit.scale_at_obs.assign(panel.n_obs(), kNaN);
  fit.pi_d_at_obs.assign(panel.n_obs(), kNaN);

  std::vector<std::vector<std::size_t>> held_of_fold(k), train_of_fold(k);
  for (std::size_t i = 0; i < post.size(); ++i) {
    int f = fold_of_site[panel.obs_site[post[i]]];
    for (int g = 0; g < k; ++g)
      (g == f ? held_of_fold[g] : train_of_fold[g]).push_back(i);
  }

  parallel_for(
      static_cast<std::size_t>(k),
      [&](std::size_t f) {
        if (held_of_fold[f].empty()) return;
        if (train_of_fold[f].empty())
          throw DataError("gps cross-fit: fold with empty training set");
        const auto& train = train_of_fold[f];
        FeatureTable x_train = subset_rows(x_post, train);
        std::vector<double> d_train(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) d_train[i] = d_post[train[i]];
        std::vector<double> w_train;
        if (!w_post.empty()) {
          w_train.resize(train.size());
          for (std::size_t i = 0; i < train.size(); ++i) w_train[i] = w_post[train[i]];
        }

        FitRequest request;
        request.task = TreeTask::kRegression;
        request.seed = substream_seed(seed, salt::kNuisance, 200 + f);
        request.threads = 1;
        request.mtry_override = fit.mtry > 0 ? std::optional<int>(fit.mtry) : std::nullopt;
        FitResult dose_fit = fit_model(learner, x_train, d_train, w_train, request);

        std::vector<double> dhat_train = dose_fit.model->predict(x_train, 1);
        std::vector<double> resid(train.size()), abs_resid(train.size());
        double mean_r = 0.0, wsum = 0.0;
        for (std::size_t i = 0; i < train.size(); ++i) {
          resid[i] = d_train[i] - dhat_train[i];
          abs_resid[i] = std::abs(resid[i]);
          double w = w_train.empty() ? 1.0 : w_train[i];
          mean_r += w * resid[i];
          wsum += w;
        }
        mean_r /= wsum;
        double var_r = 0.0;
        for (std::size_t i = 0; i < train.size(); ++i) {
          double w = w_train.empty() ? 1.0 : w_train[i];
          var_r += w * (resid[i] - mean_r) * (resid[i] - mean_r);
        }
        var_r /= wsum;
        if (var_r < 1e-12)
          throw NumericError(
              "gps: zero-variance dose residuals; the dose appears deterministic in the "
              "covariates");

        // Scale model on absolute residuals, same hyperparameters.
        FitRequest scale_request = request;
        scale_request.seed = substream_seed(seed, salt::kNuisance, 300 + f);
        FitResult scale_fit = fit_model(learner, x_train, abs_resid, w_train, scale_request);

        std::vector<double> scale_train = scale_fit.model->predict(x_train, 1);
        std::vector<double> z_train(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
          double s = std::max(scale_train[i], config.scale_floor);
          z_train[i] = resid[i] / s;
        }
        GpsFold& fold = fit.folds[f];
        fold.kde.emplace(z_train, w_train);
        fold.kde_table = fold.kde->tabulate();
        fold.dose_model = std::move(dose_fit.model);
        fold.scale_model = std::move(scale_fit.model);

        // Score held rows with this fold's models.
        FeatureTable x_held = subset_rows(x_post, held_of_fold[f]);
        std::vector<double> dhat = fold.dose_model->predict(x_held, 1);
        std::vector<double> scale = fold.scale_model->predict(x_held, 1);
        for (std::size_t i = 0; i < held_of_fold[f].size(); ++i) {
          std::size_t row = post[held_of_fold[f][i]];
          double s = std::max(scale[i], config.scale_floor);
          fit.dhat_at_obs[row] = dhat[i];
          fit.scale_at_obs[row] = s;
          double z = (d_post[held_of_fold[f][i]] - dhat[i]) / s;
          fit.pi_d_at_obs[row] = std::max(fold.kde->density(z) / s, config.gps_floor);
        }
      },
      threads);
  return fit;
}

std::vector<double> marginalize_m(const CrossFitMu1& mu1, const PanelDataset& panel,
                                  std::span<const double> dose_grid,
                                  std::span<const double> row_weights, int threads) {
  std::vector<std::size_t> post = panel.post_rows();
  const int k = static_cast<int>(mu1.models.size());
  std::vector<std::vector<std::size_t>> held_of_fold(k);
  for (std::size_t i = 0; i < post.size(); ++i)
    held_of_fold[mu1.fold_of_site[panel.obs_site[post[i]]]].push_back(i);

  FeatureTable x_post = build_features(panel, mu1.features, post);
  std::vector<FeatureTable> x_fold(k);
  std::vector<std::vector<double>> w_fold(k);
  double total_w = 0.0;
  for (int f = 0; f < k; ++f) {
    x_fold[f] = subset_rows(x_post, held_of_fold[f]);
    w_fold[f].resize(held_of_fold[f].size());
    for (std::size_t i = 0; i < held_of_fold[f].size(); ++i) {
      double w = row_weights.empty() ? 1.0 : row_weights[post[held_of_fold[f][i]]];
      w_fold[f][i] = w;
      total_w += w;
    }
  }

  std::vector<double> curve(dose_grid.size(), 0.0);
  parallel_for(
      dose_grid.size(),
      [&](std::size_t g) {
        double acc = 0.0;
        for (int f = 0; f < k; ++f) {
          if (held_of_fold[f].empty() || !mu1.models[f]) continue;
          std::vector<double> pred =
              mu1.models[f]->predict_override(x_fold[f], mu1.dose_column, dose_grid[g], 1);
          for (std::size_t i = 0; i < pred.size(); ++i) acc += w_fold[f][i] * pred[i];
        }
        curve[g] = acc / total_w;
      },
      threads);
  return curve;
}

std::vector<double> marginalize_f(const CrossFitGps& gps, const PanelDataset& panel,
                                  std::span<const double> dose_grid,
                                  std::span<const double> row_weights, double floor,
                                  int threads) {
  std::vector<std::size_t> post = panel.post_rows();
  double total_w = 0.0;
  std::vector<double> w_post(post.size());
  for (std::size_t i = 0; i < post.size(); ++i) {
    w_post[i] = row_weights.empty() ? 1.0 : row_weights[post[i]];
    total_w += w_post[i];
  }

  std::vector<double> curve(dose_grid.size(), 0.0);
  parallel_for(
      dose_grid.size(),
      [&](std::size_t g) {
        double delta = dose_grid[g];
        double acc = 0.0;
        for (std::size_t i = 0; i < post.size(); ++i) {
          std::size_t row = post[i];
          int f = gps.fold_of_site[panel.obs_site[row]];
          double s = gps.scale_at_obs[row];
          double z = (delta - gps.dhat_at_obs[row]) / s;
          acc += w_post[i] * gps.folds[f].kde_table.eval(z) / s;
        }
        curve[g] = std::max(acc / total_w, floor);
      },
      threads);
  return curve;
}

NuisanceBundle fit_nuisance_bundle(const PanelDataset& panel, const NuisanceConfig& config,
                                   std::span<const double> site_weights,
                                   std::uint64_t seed, int threads,
                                   const FrozenHypers* frozen) {
  NuisanceConfig cfg = config;
  cfg.apply_default_roles(panel);
  if (panel.n_sites() < static_cast<std::size_t>(cfg.k_folds))
    throw DataError("fewer sites than cross-fitting folds");

  std::vector<double> row_w = expand_and_scale_weights(panel, site_weights);

  NuisanceBundle bundle;
  bundle.dose_grid = make_dose_grid(cfg.dose_grid_size);
  bundle.p_post = panel.post_fraction();
  if (frozen && !frozen->fold_of_site.empty()) {
    bundle.fold_of_site = frozen->fold_of_site;
  } else {
    std::vector<int> site_index(panel.n_sites());
    std::iota(site_index.begin(), site_index.end(), 0);
    bundle.fold_of_site = grouped_kfold_assignments(
        site_index, cfg.k_folds, substream_seed(seed, salt::kFolds, 7));
  }

  auto frozen_or = [&](int value) -> std::optional<int> {
    return (frozen && value > 0) ? std::optional<int>(value) : std::nullopt;
  };

  Mu0Fit mu0 = fit_mu0(panel, cfg, row_w, seed, threads,
                       frozen ? frozen_or(frozen->mu0_mtry) : std::nullopt);
  PiBFit pi_b = fit_pi_b(panel, cfg, row_w, seed, threads,
                         frozen ? frozen_or(frozen->pi_b_mtry) : std::nullopt);
  CrossFitMu1 mu1 = fit_mu1_crossfit(panel, cfg, row_w, bundle.fold_of_site, seed, threads,
                                     frozen ? frozen_or(frozen->mu1_mtry) : std::nullopt);
  CrossFitGps gps = fit_gps_crossfit(panel, cfg, row_w, bundle.fold_of_site, seed, threads,
                                     frozen ? frozen_or(frozen->dose_mtry) : std::nullopt);

  bundle.mu0_hat = std::move(mu0.predictions);
  bundle.pi_b_hat = std::move(pi_b.predictions);
  bundle.mu0_features = mu0.features;
  bundle.pi_b_features = pi_b.features;
  bundle.mu1_features = mu1.features;
  bundle.pi_d_features = gps.features;
  bundle.hypers.mu0_mtry = mu0.mtry;
  bundle.hypers.pi_b_mtry = pi_b.mtry;
  bundle.hypers.mu1_mtry = mu1.mtry;
  bundle.hypers.dose_mtry = gps.mtry;
  bundle.hypers.fold_of_site = bundle.fold_of_site;
  for (const auto& w : mu0.warnings) bundle.warnings.push_back("mu0: " + w);
  for (const auto& w : pi_b.warnings) bundle.warnings.push_back("pi_b: " + w);
  for (const auto& w : mu1.warnings) bundle.warnings.push_back("mu1: " + w);
  for (const auto& w : gps.warnings) bundle.warnings.push_back("pi_d: " + w);

  std::vector<std::size_t> post = panel.post_rows();
  bundle.mu1_hat.assign(panel.n_obs(), kNaN);
  for (std::size_t i = 0; i < post.size(); ++i) bundle.mu1_hat[post[i]] = mu1.predictions[i];
  bundle.pi_d_hat = gps.pi_d_at_obs;

  bundle.m_curve = marginalize_m(mu1, panel, bundle.dose_grid, row_w, threads);
  bundle.f_curve =
      marginalize_f(gps, panel, bundle.dose_grid, row_w, cfg.gps_floor, threads);

  bundle.m_at_obs.assign(panel.n_obs(), kNaN);
  bundle.f_at_obs.assign(panel.n_obs(), kNaN);
  bool clamped_any = false;
  for (std::size_t row : post) {
    double d = panel.dose[panel.obs_site[row]];
    bool clamped = false;
    bundle.m_at_obs[row] = interp_on_grid(bundle.dose_grid, bundle.m_curve, d, &clamped);
    clamped_any = clamped_any || clamped;
    bundle.f_at_obs[row] = interp_on_grid(bundle.dose_grid, bundle.f_curve, d, &clamped);
    clamped_any = clamped_any || clamped;
  }
  if (clamped_any)
    bundle.warnings.push_back("observed doses outside the grid range were clamped");

  // Positivity and clipping contracts, asserted exactly.
  for (std::size_t row : post) {
    if (!(bundle.pi_d_hat[row] >= cfg.gps_floor) || !(bundle.f_at_obs[row] >= cfg.gps_floor))
      throw NumericError("gps positivity floor violated");
    if (!std::isfinite(bundle.mu1_hat[row]) || !std::isfinite(bundle.m_at_obs[row]))
      throw NumericError("non-finite mu1/m score");
  }
  for (std::size_t r = 0; r < panel.n_obs(); ++r) {
    if (!(bundle.pi_b_hat[r] >= cfg.pi_b_clip_lo && bundle.pi_b_hat[r] <= cfg.pi_b_clip_hi))
      throw NumericError("pi_b clipping violated");
    if (!std::isfinite(bundle.mu0_hat[r])) throw NumericError("non-finite mu0 score");
  }
  return bundle;
}

void NuisanceBundle::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  CsvTable scores;
  scores.header = {"row", "mu0", "pi_b", "mu1", "pi_d", "m_at_obs", "f_at_obs"};
  for (std::size_t r = 0; r < mu0_hat.size(); ++r) {
    scores.rows.push_back({std::to_string(r), format_double(mu0_hat[r]),
                           format_double(pi_b_hat[r]), format_double(mu1_hat[r]),
                           format_double(pi_d_hat[r]), format_double(m_at_obs[r]),
                           format_double(f_at_obs[r])});
  }
  write_csv(dir + "/nuisance_scores.csv", scores);

  CsvTable curves;
  curves.header = {"delta", "m", "f"};
  for (std::size_t g = 0; g < dose_grid.size(); ++g)
    curves.rows.push_back({format_double(dose_grid[g]), format_double(m_curve[g]),
                           format_double(f_curve[g])});
  write_csv(dir + "/nuisance_curves.csv", curves);

  nlohmann::json meta;
  meta["fold_of_site"] = fold_of_site;
  meta["p_post"] = p_post;
  meta["mu0_features"] = mu0_features;
  meta["mu1_features"] = mu1_features;
  meta["pi_b_features"] = pi_b_features;
  meta["pi_d_features"] = pi_d_features;
  meta["mtry"] = {{"mu0", hypers.mu0_mtry},
                  {"mu1", hypers.mu1_mtry},
                  {"pi_b", hypers.pi_b_mtry},
                  {"dose", hypers.dose_mtry}};
  meta["warnings"] = warnings;
  std::ofstream out(dir + "/nuisance_meta.json");
  out << meta.dump(2) << "\n";
}

NuisanceBundle NuisanceBundle::load(const std::string& dir) {
  NuisanceBundle bundle;
  CsvTable scores = read_csv(dir + "/nuisance_scores.csv");
  std::size_t n = scores.rows.size();
  bundle.mu0_hat.resize(n);
  bundle.pi_b_hat.resize(n);
  bundle.mu1_hat.resize(n);
  bundle.pi_d_hat.resize(n);
  bundle.m_at_obs.resize(n);
  bundle.f_at_obs.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto num = [&](std::size_t c) {
      const std::string& cell = scores.cell(r, c);
      if (cell == "nan" || cell == "-nan") return kNaN;
      return parse_cell(cell, "nuisance_scores", nullptr);
    };
    bundle.mu0_hat[r] = num(1);
    bundle.pi_b_hat[r] = num(2);
    bundle.mu1_hat[r] = num(3);
    bundle.pi_d_hat[r] = num(4);
    bundle.m_at_obs[r] = num(5);
    bundle.f_at_obs[r] = num(6);
  }
  CsvTable curves = read_csv(dir + "/nuisance_curves.csv");
  for (std::size_t g = 0; g < curves.rows.size(); ++g) {
    bundle.dose_grid.push_back(parse_cell(curves.cell(g, 0), "curves", nullptr));
    bundle.m_curve.push_back(parse_cell(curves.cell(g, 1), "curves", nullptr));
    bundle.f_curve.push_back(parse_cell(curves.cell(g, 2), "curves", nullptr));
  }
  std::ifstream in(dir + "/nuisance_meta.json");
  if (!in) throw ConfigError("missing nuisance_meta.json in " + dir);
  nlohmann::json meta = nlohmann::json::parse(in);
  bundle.fold_of_site = meta["fold_of_site"].get<std::vector<int>>();
  bundle.p_post = meta["p_post"].get<double>();
  bundle.mu0_features = meta["mu0_features"].get<std::vector<std::string>>();
  bundle.mu1_features = meta["mu1_features"].get<std::vector<std::string>>();
  bundle.pi_b_features = meta["pi_b_features"].get<std::vector<std::string>>();
  bundle.pi_d_features = meta["pi_d_features"].get<std::vector<std::string>>();
  bundle.hypers.mu0_mtry = meta["mtry"]["mu0"].get<int>();
  bundle.hypers.mu1_mtry = meta["mtry"]["mu1"].get<int>();
  bundle.hypers.pi_b_mtry = meta["mtry"]["pi_b"].get<int>();
  bundle.hypers.dose_mtry = meta["mtry"]["dose"].get<int>();
  bundle.hypers.fold_of_site = bundle.fold_of_site;
  bundle.warnings = meta["warnings"].get<std::vector<std::string>>();
  return bundle;
}

}  // namespace adt
