#include "adtcurve/runconfig.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "adtcurve/common.hpp"
#include "adtcurve/csv.hpp"
#include "adtcurve/spatial.hpp"
#include "adtcurve/svg.hpp"

namespace adt {

namespace {

using nlohmann::json;

LearnerConfig learner_from_json(const json& j) {
  LearnerConfig c;
  c.type = j.value("type", std::string("forest"));
  c.num_trees = j.value("num_trees", 500);
  c.tuning_trees = j.value("tuning_trees", 0);
  c.min_node_size = j.value("min_node_size", 0);
  c.mtry = j.value("mtry", 0);
  c.histogram_bins = j.value("histogram_bins", 64);
  c.max_onehot_levels = j.value("max_onehot_levels", 32);
  if (j.contains("terms"))
    c.terms = j["terms"].get<std::vector<std::vector<std::string>>>();
  return c;
}

json learner_to_json(const LearnerConfig& c) {
  json j;
  j["type"] = c.type;
  j["num_trees"] = c.num_trees;
  j["tuning_trees"] = c.tuning_trees;
  j["min_node_size"] = c.min_node_size;
  j["mtry"] = c.mtry;
  j["histogram_bins"] = c.histogram_bins;
  j["max_onehot_levels"] = c.max_onehot_levels;
  j["terms"] = c.terms;
  return j;
}

}  // namespace

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }

  RunConfig c;
  if (!j.contains("data")) throw ConfigError("config is missing the 'data' section");
  const json& data = j["data"];
  c.panel_path = data.value("panel", std::string());
  c.sites_path = data.value("sites", std::string());
  if (c.panel_path.empty() || c.sites_path.empty())
    throw ConfigError("config must name both 'data.panel' and 'data.sites' files");
  c.t0 = data.value("t0", 0);
  if (c.t0 <= 1) throw ConfigError("config requires data.t0 > 1");

  if (data.contains("columns")) {
    const json& cols = data["columns"];
    c.schema.site_id = cols.value("site_id", c.schema.site_id);
    c.schema.time = cols.value("time", c.schema.time);
    c.schema.outcome = cols.value("outcome", c.schema.outcome);
    c.schema.lon = cols.value("lon", c.schema.lon);
    c.schema.lat = cols.value("lat", c.schema.lat);
    c.schema.province = cols.value("province", c.schema.province);
    c.schema.raw_dose = cols.value("raw_dose", c.schema.raw_dose);
    if (cols.contains("time_covariates"))
      c.schema.time_covariates = cols["time_covariates"].get<std::vector<std::string>>();
    if (cols.contains("static_covariates"))
      c.schema.static_covariates =
          cols["static_covariates"].get<std::vector<std::string>>();
  }

  if (j.contains("estimator")) {
    const json& est = j["estimator"];
    NuisanceConfig& nc = c.estimate.nuisance;
    nc.dose_grid_size = est.value("dose_grid", 101);
    nc.k_folds = est.value("k_folds", 10);
    nc.truncate_ratio = est.value("truncate_ratio", true);
    nc.ratio_truncation_quantile = est.value("ratio_truncation_quantile", 0.995);
    if (est.contains("outcome_learner"))
      nc.outcome_learner = learner_from_json(est["outcome_learner"]);
    if (est.contains("propensity_learner"))
      nc.propensity_learner = learner_from_json(est["propensity_learner"]);
    if (est.contains("mu1_extra_terms"))
      nc.mu1_extra_terms =
          est["mu1_extra_terms"].get<std::vector<std::vector<std::string>>>();
    if (est.contains("roles")) {
      const json& roles = est["roles"];
      if (roles.contains("mu")) nc.mu_features = roles["mu"].get<std::vector<std::string>>();
      if (roles.contains("pi_b"))
        nc.pi_b_features = roles["pi_b"].get<std::vector<std::string>>();
      if (roles.contains("pi_d"))
        nc.pi_d_features = roles["pi_d"].get<std::vector<std::string>>();
    }
    if (est.contains("llkr")) {
      c.estimate.llkr.bandwidth = est["llkr"].value("bandwidth", 0.0);
      c.estimate.llkr.ladder_size = est["llkr"].value("ladder_size", 40);
    }
    c.method = est.value("method", std::string("mr"));
    if (c.method != "mr" && c.method != "or" && c.method != "naive")
      throw ConfigError("estimator.method must be one of mr, or, naive");
  }

  if (j.contains("bootstrap")) {
    const json& boot = j["bootstrap"];
    c.n_boot = boot.value("n_boot", 100);
    c.spatial = boot.value("spatial", true);
    c.variogram_bins = boot.value("variogram_bins", 15);
    c.min_pairs = boot.value("min_pairs", static_cast<std::size_t>(30));
    if (boot.contains("families")) {
      c.families.clear();
      for (const auto& name : boot["families"])
        c.families.push_back(family_from_name(name.get<std::string>()));
    }
    if (boot.contains("fixed_correlation")) {
      const json& fixed = boot["fixed_correlation"];
      CorrelationModel m;
      m.family = family_from_name(fixed.value("family", std::string("matern")));
      m.range_km = fixed.value("range_km", 0.0);
      m.smoothness = fixed.value("smoothness", 0.0);
      m.power_a = fixed.value("power_a", 0.0);
      m.power_z = fixed.value("power_z", 0.0);
      m.sigma2 = fixed.value("sigma2", 1.0);
      c.fixed_correlation = m;
    }
  }

  c.estimate.seed = j.value("seed", static_cast<std::uint64_t>(1));
  c.estimate.threads = j.value("threads", 0);
  c.output_dir = j.value("output", std::string("out"));
  return c;
}

std::string RunConfig::to_json_string() const {
  json j;
  j["data"]["panel"] = panel_path;
  j["data"]["sites"] = sites_path;
  j["data"]["t0"] = t0;
  j["data"]["columns"]["site_id"] = schema.site_id;
  j["data"]["columns"]["time"] = schema.time;
  j["data"]["columns"]["outcome"] = schema.outcome;
  j["data"]["columns"]["lon"] = schema.lon;
  j["data"]["columns"]["lat"] = schema.lat;
  j["data"]["columns"]["province"] = schema.province;
  j["data"]["columns"]["raw_dose"] = schema.raw_dose;
  j["data"]["columns"]["time_covariates"] = schema.time_covariates;
  j["data"]["columns"]["static_covariates"] = schema.static_covariates;

  const NuisanceConfig& nc = estimate.nuisance;
  j["estimator"]["method"] = method;
  j["estimator"]["dose_grid"] = nc.dose_grid_size;
  j["estimator"]["k_folds"] = nc.k_folds;
  j["estimator"]["truncate_ratio"] = nc.truncate_ratio;
  j["estimator"]["ratio_truncation_quantile"] = nc.ratio_truncation_quantile;
  j["estimator"]["outcome_learner"] = learner_to_json(nc.outcome_learner);
  j["estimator"]["propensity_learner"] = learner_to_json(nc.propensity_learner);
  j["estimator"]["mu1_extra_terms"] = nc.mu1_extra_terms;
  j["estimator"]["roles"]["mu"] = nc.mu_features;
  j["estimator"]["roles"]["pi_b"] = nc.pi_b_features;
  j["estimator"]["roles"]["pi_d"] = nc.pi_d_features;
  j["estimator"]["llkr"]["bandwidth"] = estimate.llkr.bandwidth;
  j["estimator"]["llkr"]["ladder_size"] = estimate.llkr.ladder_size;

  j["bootstrap"]["n_boot"] = n_boot;
  j["bootstrap"]["spatial"] = spatial;
  j["bootstrap"]["variogram_bins"] = variogram_bins;
  j["bootstrap"]["min_pairs"] = min_pairs;
  json fams = json::array();
  for (CorrFamily f : families) fams.push_back(family_name(f));
  j["bootstrap"]["families"] = fams;
  if (fixed_correlation) {
    j["bootstrap"]["fixed_correlation"]["family"] = family_name(fixed_correlation->family);
    j["bootstrap"]["fixed_correlation"]["range_km"] = fixed_correlation->range_km;
    j["bootstrap"]["fixed_correlation"]["smoothness"] = fixed_correlation->smoothness;
    j["bootstrap"]["fixed_correlation"]["power_a"] = fixed_correlation->power_a;
    j["bootstrap"]["fixed_correlation"]["power_z"] = fixed_correlation->power_z;
    j["bootstrap"]["fixed_correlation"]["sigma2"] = fixed_correlation->sigma2;
  }

  j["seed"] = estimate.seed;
  j["threads"] = estimate.threads;
  j["output"] = output_dir;
  return j.dump(2);
}

namespace {

void write_variogram_outputs(const std::string& dir, const RunArtifacts& artifacts,
                             std::vector<std::string>& files) {
  CsvTable table;
  table.header = {"bin_km", "gamma", "pairs"};
  for (std::size_t b = 0; b < artifacts.variogram.bin_mid.size(); ++b)
    table.rows.push_back({format_double(artifacts.variogram.bin_mid[b]),
                          format_double(artifacts.variogram.gamma[b]),
                          std::to_string(artifacts.variogram.counts[b])});
  std::string path = dir + "/variogram.csv";
  write_csv(path, table);
  files.push_back(path);

  CsvTable fits;
  fits.header = {"family", "range_km", "smoothness", "power_a",
                 "power_z", "sigma2",  "rmse",       "converged"};
  for (const auto& fit : artifacts.family_fits)
    fits.rows.push_back({family_name(fit.family), format_double(fit.range_km),
                         format_double(fit.smoothness), format_double(fit.power_a),
                         format_double(fit.power_z), format_double(fit.sigma2),
                         format_double(fit.fit_rmse), fit.converged ? "1" : "0"});
  path = dir + "/correlation_fits.csv";
  write_csv(path, fits);
  files.push_back(path);

  path = dir + "/variogram.svg";
  write_variogram_svg(path, artifacts.variogram, artifacts.family_fits,
                      artifacts.correlation);
  files.push_back(path);
}

RunArtifacts run_pipeline(const RunConfig& config,
                          std::optional<std::pair<int, int>> pretrends_window,
                          bool with_bootstrap) {
  namespace fs = std::filesystem;
  PanelDataset panel =
      load_panel(config.panel_path, config.sites_path, config.schema, config.t0);
  if (pretrends_window)
    panel = pretrends_subset(panel, pretrends_window->first, pretrends_window->second);

  RunArtifacts artifacts;
  EstimateOptions est = config.estimate;
  PointEstimate point = estimate_adt(panel, est);

  Eigen::MatrixXd dist = great_circle_distances(panel);
  ResidualSummary resid = compute_residuals(panel, point.pseudo, point.xi_fit);
  artifacts.variogram = robust_variogram(resid.site_mean, dist, config.variogram_bins,
                                         config.min_pairs);
  if (config.fixed_correlation) {
    artifacts.correlation = *config.fixed_correlation;
    artifacts.family_fits.push_back(artifacts.correlation);
  } else {
    artifacts.correlation = fit_correlation(artifacts.variogram, config.families,
                                            &artifacts.family_fits, nullptr);
  }

  ADTCurve curve = point.curve;
  if (with_bootstrap) {
    SpatialWeightModel weights =
        config.spatial ? SpatialWeightModel::from_correlation(artifacts.correlation, dist)
                       : SpatialWeightModel::iid(panel.n_sites());
    BootstrapOptions boot;
    boot.n_boot = config.n_boot;
    boot.seed = config.estimate.seed;
    boot.threads = config.estimate.threads;
    CurveMethod method = CurveMethod::kMultiplyRobust;
    if (config.method == "or") method = CurveMethod::kOutcomeOnly;
    if (config.method == "naive") method = CurveMethod::kNaive;
    if (method != CurveMethod::kMultiplyRobust) {
      // comparison estimators share the nuisances but smooth a different response
      CurveInputs inputs =
          curve_inputs(panel, method, &point.bundle, &point.pseudo, {});
      LlkrOptions llkr = config.estimate.llkr;
      PointEstimate alt = point;
      alt.curve = evaluate_curve(inputs, point.bundle.dose_grid, llkr, &alt.xi_fit);
      curve = bootstrap_adt(panel, config.estimate.nuisance, method, alt, weights, boot);
    } else {
      curve = bootstrap_adt(panel, config.estimate.nuisance, method, point, weights, boot);
    }
  }
  artifacts.curve = curve;
  artifacts.summary = summarize_curve(curve, panel);

  fs::create_directories(config.output_dir);
  const std::string dir = config.output_dir;
  std::string path = dir + "/adt_curve.csv";
  write_curve_csv(path, curve);
  artifacts.output_files.push_back(path);
  if (!curve.draws.empty()) {
    path = dir + "/adt_draws.csv";
    write_draws_csv(path, curve);
    artifacts.output_files.push_back(path);
  }
  write_variogram_outputs(dir, artifacts, artifacts.output_files);

  path = dir + "/adt_curve.svg";
  write_curve_svg(path, curve, "Average dose effect on the treated");
  artifacts.output_files.push_back(path);

  {
    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["config"] = nlohmann::json::parse(config.to_json_string());
    if (pretrends_window)
      manifest["pretrends_window"] = {pretrends_window->first, pretrends_window->second};
    manifest["resolved"]["bandwidth"] = curve.bandwidth;
    manifest["resolved"]["mtry"] = {{"mu0", point.frozen.mu0_mtry},
                                    {"mu1", point.frozen.mu1_mtry},
                                    {"pi_b", point.frozen.pi_b_mtry},
                                    {"dose", point.frozen.dose_mtry}};
    manifest["resolved"]["correlation_family"] = family_name(artifacts.correlation.family);
    manifest["resolved"]["correlation_range_km"] = artifacts.correlation.range_km;
    manifest["resolved"]["n_boot_success"] = curve.n_boot_success;
    manifest["resolved"]["n_sites"] = panel.n_sites();
    manifest["resolved"]["n_obs"] = panel.n_obs();
    manifest["summary"]["average_effect"] = artifacts.summary.average_effect;
    manifest["summary"]["percent_change"] = artifacts.summary.percent_change;
    manifest["summary"]["pre_period_mean"] = artifacts.summary.pre_period_mean;
    if (artifacts.summary.average_effect_significant_only)
      manifest["summary"]["average_effect_significant_only"] =
          *artifacts.summary.average_effect_significant_only;
    manifest["summary"]["n_significant_sites"] = artifacts.summary.n_significant_sites;
    manifest["warnings"] = point.bundle.warnings;
    path = dir + "/manifest.json";
    std::ofstream out(path);
    out << manifest.dump(2) << "\n";
    artifacts.output_files.push_back(path);
  }
  point.bundle.save(dir + "/nuisance");
  return artifacts;
}

}  // namespace

RunArtifacts run_estimate(const RunConfig& config,
                          std::optional<std::pair<int, int>> pretrends_window) {
  return run_pipeline(config, pretrends_window, true);
}

RunArtifacts run_variogram(const RunConfig& config) {
  return run_pipeline(config, std::nullopt, false);
}

}  // namespace adt
