#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adtcurve/nuisance.hpp"
#include "adtcurve/panel.hpp"

namespace adt {

/// Outcome mean-function coefficients for the synthetic data-generating
/// process. The dose enters only the post-period branch, through
/// 2*D*(-3*D + 0.4*Pop + 0.2*Time).
struct DgpCoefficients {
  // pre-period branch
  double l0_intercept = -9.5;
  double l0_temp = 0.075;
  double l0_pop = 0.075;
  double l0_temp_pop = 0.0001;
  double l0_time = 0.15;
  double l0_time_pop = 0.001;
  double l0_fires = 1.0;
  double l0_precip = -18.0;
  // post-period branch
  double l1_intercept = -12.5;
  double l1_temp = 0.075;
  double l1_pop = 0.075;
  double l1_temp_pop = 0.0007;
  double l1_time = 0.15;
  double l1_time_pop = 0.001;
  double l1_fires = 1.5;
  double l1_precip = -20.0;
  double dose_outer = 2.0;
  double dose_dose = -3.0;
  double dose_pop = 0.4;
  double dose_time = 0.2;

  double l0(double temp, double pop, double time5, double fires4, double precip) const {
    return l0_intercept + l0_temp * temp + l0_pop * pop + l0_temp_pop * temp * pop +
           l0_time * time5 + l0_time_pop * time5 * pop + l0_fires * fires4 +
           l0_precip * precip;
  }
  double l1(double temp, double pop, double time5, double fires4, double precip,
            double dose) const {
    return l1_intercept + l1_temp * temp + l1_pop * pop + l1_temp_pop * temp * pop +
           l1_time * time5 + l1_time_pop * time5 * pop + l1_fires * fires4 +
           l1_precip * precip +
           dose_outer * dose * (dose_dose * dose + dose_pop * pop + dose_time * time5);
  }
};

struct SimScenario {
  std::string name = "s1";
  double range_km = 100.0;  // spatial range L of the outcome noise
  double sigma_sp = 2.0;
  double sigma_ind = 0.5;
  static SimScenario preset(const std::string& name);  // s1..s4
};

struct SimScale {
  int n_sites = 100;
  int n_months = 48;
  int t0 = 37;
  int n_replicates = 50;
  int n_boot = 60;
  static SimScale desk();
  static SimScale full();  // 356 sites, 96 months, t0=73, 100 replicates, 100 draws
};

/// Synthetic covariate skeleton (outcome left at zero): clustered site
/// coordinates over a ~2000x1000 km box, seasonal meteorology, static
/// population, province-level fire counts (stored as their fourth root), the
/// fifth-root-of-days time variable, and a port-proximity dose passed through
/// the quantile transform.
PanelDataset generate_covariates(int n_sites, int n_months, int t0, std::uint64_t seed);

/// Symmetric square root of the exponential-correlation matrix used for the
/// spatially structured noise; coincident sites receive identical draws.
Eigen::MatrixXd spatial_noise_sqrt(const Eigen::MatrixXd& distances, double range_km);

struct SimulatedOutcome {
  double truncated_fraction = 0.0;  // share of negative mean values set to 0
};
SimulatedOutcome simulate_outcome(PanelDataset& panel, const SimScenario& scenario,
                                  const Eigen::MatrixXd& noise_sqrt, std::uint64_t seed,
                                  const DgpCoefficients& coef = {});

/// Closed-form oracle: Psi(delta) = mean over all rows of L1(X, delta) - L0(X).
std::vector<double> true_adt(const PanelDataset& skeleton,
                             std::span<const double> dose_grid,
                             const DgpCoefficients& coef = {});

/// Estimator configuration used in the simulation study: outcome models are
/// linear in the data-generating terms, propensity models use the forest.
NuisanceConfig sim_nuisance_config(int num_trees = 100, int tuning_trees = 40);

struct ScenarioMetrics {
  std::string scenario;
  std::vector<double> grid;
  std::vector<double> truth;
  std::vector<double> bias, mae;
  std::vector<double> coverage_sp, coverage_ns;
  std::vector<double> width_sp, width_ns;
  std::vector<double> debiased_coverage_sp, debiased_coverage_ns;
  int n_replicates_done = 0;
  int n_replicates_failed = 0;

  double mean(std::span<const double> v) const;
  double mean_coverage_sp() const { return mean(coverage_sp); }
  double mean_coverage_ns() const { return mean(coverage_ns); }
  double mean_width_sp() const { return mean(width_sp); }
  double mean_width_ns() const { return mean(width_ns); }

  double at(std::span<const double> values, double delta) const;
};

struct RunScenarioOptions {
  SimScenario scenario;
  SimScale scale;
  int num_trees = 100;
  int tuning_trees = 40;
  std::uint64_t seed = 1;
  int threads = 0;
  std::function<void(int, int)> progress;  // (replicates done, total)
};

ScenarioMetrics run_scenario(const RunScenarioOptions& options);

void write_metrics_csv(const std::string& path, const ScenarioMetrics& metrics);

}  // namespace adt
