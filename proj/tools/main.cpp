// adtcurve: estimate causal exposure-response curves from spatiotemporal
// panels with a spatially correlated weighted bootstrap, and run the
// accompanying simulation study.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "adtcurve/bootstrap.hpp"
#include "adtcurve/common.hpp"
#include "adtcurve/estimator.hpp"
#include "adtcurve/panel.hpp"
#include "adtcurve/runconfig.hpp"
#include "adtcurve/sim.hpp"
#include "adtcurve/svg.hpp"

namespace {

std::optional<std::pair<int, int>> parse_window(const std::string& spec) {
  if (spec.empty()) return std::nullopt;
  auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw adt::ConfigError("pre-trends window must look like START:END, got " + spec);
  int a = std::atoi(spec.substr(0, colon).c_str());
  int b = std::atoi(spec.substr(colon + 1).c_str());
  if (a <= 0 || b <= 0)
    throw adt::ConfigError("pre-trends window months must be positive integers");
  return std::make_pair(a, b);
}

int run_estimate_command(const std::string& config_path, const std::string& window_spec,
                         int threads, const std::string& output_override,
                         const std::string& method_override, std::uint64_t seed_override,
                         bool have_seed) {
  adt::RunConfig config = adt::RunConfig::from_json_file(config_path);
  if (threads > 0) config.estimate.threads = threads;
  if (!output_override.empty()) config.output_dir = output_override;
  if (!method_override.empty()) {
    if (method_override != "mr" && method_override != "or" && method_override != "naive")
      throw adt::ConfigError("--method must be one of mr, or, naive");
    config.method = method_override;
  }
  if (have_seed) config.estimate.seed = seed_override;

  adt::RunArtifacts artifacts = adt::run_estimate(config, parse_window(window_spec));
  std::printf("wrote %zu files to %s\n", artifacts.output_files.size(),
              config.output_dir.c_str());
  std::printf("average effect %.4f (%.2f%% of the pre-period mean %.4f)\n",
              artifacts.summary.average_effect, artifacts.summary.percent_change,
              artifacts.summary.pre_period_mean);
  if (artifacts.summary.average_effect_significant_only) {
    std::printf("average over %zu sites whose CI excludes zero: %.4f\n",
                artifacts.summary.n_significant_sites,
                *artifacts.summary.average_effect_significant_only);
  } else {
    std::printf("no site has a CI excluding zero\n");
  }
  return 0;
}

int run_variogram_command(const std::string& config_path, int threads,
                          const std::string& output_override) {
  adt::RunConfig config = adt::RunConfig::from_json_file(config_path);
  if (threads > 0) config.estimate.threads = threads;
  if (!output_override.empty()) config.output_dir = output_override;
  adt::RunArtifacts artifacts = adt::run_variogram(config);
  std::printf("variogram with %zu bins; selected family %s (rmse %.6g)\n",
              artifacts.variogram.bin_mid.size(),
              adt::family_name(artifacts.correlation.family).c_str(),
              artifacts.correlation.fit_rmse);
  for (const auto& fit : artifacts.family_fits)
    std::printf("  %-12s rmse %.6g%s\n", adt::family_name(fit.family).c_str(),
                fit.fit_rmse, fit.converged ? "" : "  (failed)");
  return 0;
}

int run_simulate_command(const std::string& scenario_name, bool full, int replicates,
                         int boots, int sites, int months, int trees,
                         std::uint64_t seed, int threads, const std::string& output) {
  adt::RunScenarioOptions options;
  options.scenario = adt::SimScenario::preset(scenario_name);
  options.scale = full ? adt::SimScale::full() : adt::SimScale::desk();
  if (replicates > 0) options.scale.n_replicates = replicates;
  if (boots > 0) options.scale.n_boot = boots;
  if (sites > 0) options.scale.n_sites = sites;
  if (months > 0) {
    options.scale.n_months = months;
    options.scale.t0 = months * 3 / 4 + 1;
  }
  if (trees > 0) options.num_trees = trees;
  options.seed = seed;
  options.threads = threads;
  options.progress = [](int done, int total) {
    std::fprintf(stderr, "\rreplicate %d/%d", done, total);
    if (done == total) std::fprintf(stderr, "\n");
  };

  adt::ScenarioMetrics metrics = adt::run_scenario(options);
  namespace fs = std::filesystem;
  fs::create_directories(output);
  std::string table_path = output + "/metrics_" + scenario_name + ".csv";
  adt::write_metrics_csv(table_path, metrics);
  adt::write_lines_svg(output + "/coverage_" + scenario_name + ".svg",
                       "CI coverage, scenario " + scenario_name, "dose", "coverage",
                       metrics.grid,
                       {{"spatial", metrics.coverage_sp},
                        {"nonspatial", metrics.coverage_ns}});
  adt::write_lines_svg(output + "/width_" + scenario_name + ".svg",
                       "CI width, scenario " + scenario_name, "dose", "width",
                       metrics.grid,
                       {{"spatial", metrics.width_sp}, {"nonspatial", metrics.width_ns}});

  std::printf("scenario %s: %d replicates done, %d failed\n", scenario_name.c_str(),
              metrics.n_replicates_done, metrics.n_replicates_failed);
  std::printf("mean coverage  spatial %.3f  nonspatial %.3f\n",
              metrics.mean_coverage_sp(), metrics.mean_coverage_ns());
  std::printf("mean width     spatial %.4f  nonspatial %.4f\n", metrics.mean_width_sp(),
              metrics.mean_width_ns());
  std::printf("wrote %s\n", table_path.c_str());
  return 0;
}

int run_gen_demo_command(const std::string& output, int sites, int months,
                         std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(output);
  int t0 = months * 3 / 4 + 1;
  adt::PanelDataset panel = adt::generate_covariates(sites, months, t0, seed);
  Eigen::MatrixXd dist = adt::great_circle_distances(panel);
  Eigen::MatrixXd noise = adt::spatial_noise_sqrt(dist, 100.0);
  adt::simulate_outcome(panel, adt::SimScenario::preset("s1"), noise, seed);

  adt::PanelSchema schema;
  schema.time_covariates = panel.time_cov_names;
  schema.static_covariates = panel.static_cov_names;
  adt::save_panel(panel, output + "/panel.csv", output + "/sites.csv", schema);

  adt::RunConfig config;
  config.panel_path = output + "/panel.csv";
  config.sites_path = output + "/sites.csv";
  config.schema = schema;
  config.t0 = t0;
  config.estimate.nuisance = adt::sim_nuisance_config(60, 30);
  config.n_boot = 40;
  config.estimate.seed = seed;
  config.output_dir = output + "/run";
  std::ofstream out(output + "/config.json");
  out << config.to_json_string() << "\n";

  std::printf("demo data in %s (panel.csv, sites.csv, config.json; %d sites x %d months, "
              "t0=%d)\n",
              output.c_str(), sites, months, t0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causal exposure-response curves with a spatial weighted bootstrap"};
  app.require_subcommand(1);

  std::string config_path, window_spec, output_override, method_override;
  int threads = 0;
  std::uint64_t seed = 1;

  auto* estimate = app.add_subcommand("estimate", "fit the dose-response curve and CIs");
  estimate->add_option("--config", config_path, "run configuration (JSON)")->required();
  estimate->add_option("--pretrends", window_spec,
                       "pseudo-treatment window START:END inside the pre-period");
  estimate->add_option("--threads", threads, "worker cap (default: all cores)");
  estimate->add_option("--output", output_override, "output directory override");
  estimate->add_option("--method", method_override, "mr | or | naive");
  auto* est_seed = estimate->add_option("--seed", seed, "seed override");

  auto* pretrends = app.add_subcommand("pretrends", "estimate with a pseudo-treatment window");
  pretrends->add_option("--config", config_path, "run configuration (JSON)")->required();
  pretrends->add_option("--window", window_spec, "pseudo window START:END")->required();
  pretrends->add_option("--threads", threads, "worker cap");
  pretrends->add_option("--output", output_override, "output directory override");

  auto* variogram = app.add_subcommand("variogram", "residual variogram diagnostics");
  variogram->add_option("--config", config_path, "run configuration (JSON)")->required();
  variogram->add_option("--threads", threads, "worker cap");
  variogram->add_option("--output", output_override, "output directory override");

  std::string scenario_name = "s1", sim_output = "sim_out";
  bool full_scale = false;
  int replicates = 0, boots = 0, sites = 0, months = 0, trees = 0;
  auto* simulate = app.add_subcommand("simulate", "run a simulation scenario (s1..s4)");
  simulate->add_option("scenario", scenario_name, "s1 | s2 | s3 | s4")->required();
  simulate->add_flag("--full", full_scale, "full scale (356 sites, 96 months)");
  simulate->add_option("--replicates", replicates, "override replicate count");
  simulate->add_option("--boots", boots, "override bootstrap draws");
  simulate->add_option("--sites", sites, "override site count");
  simulate->add_option("--months", months, "override month count");
  simulate->add_option("--trees", trees, "override forest size");
  simulate->add_option("--seed", seed, "master seed");
  simulate->add_option("--threads", threads, "worker cap");
  simulate->add_option("--output", sim_output, "output directory");

  std::string demo_output = "demo";
  int demo_sites = 60, demo_months = 36;
  auto* demo = app.add_subcommand("gen-demo", "generate a synthetic demo dataset + config");
  demo->add_option("--output", demo_output, "output directory");
  demo->add_option("--sites", demo_sites, "site count");
  demo->add_option("--months", demo_months, "month count");
  demo->add_option("--seed", seed, "seed");

  try {
    app.parse(argc, argv);
    if (*estimate)
      return run_estimate_command(config_path, window_spec, threads, output_override,
                                  method_override, seed, !est_seed->empty());
    if (*pretrends)
      return run_estimate_command(config_path, window_spec, threads, output_override, "",
                                  seed, false);
    if (*variogram) return run_variogram_command(config_path, threads, output_override);
    if (*simulate)
      return run_simulate_command(scenario_name, full_scale, replicates, boots, sites,
                                  months, trees, seed, threads, sim_output);
    if (*demo) return run_gen_demo_command(demo_output, demo_sites, demo_months, seed);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits 0; bad usage exits 2
  } catch (const adt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const adt::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
