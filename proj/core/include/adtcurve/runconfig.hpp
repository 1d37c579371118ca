#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adtcurve/bootstrap.hpp"
#include "adtcurve/estimator.hpp"
#include "adtcurve/panel.hpp"
#include "adtcurve/variogram.hpp"

namespace adt {

/// Fully resolved run configuration; validated before any computation and
/// serialized verbatim into the run manifest.
struct RunConfig {
  std::string panel_path;
  std::string sites_path;
  PanelSchema schema;
  int t0 = 0;

  EstimateOptions estimate;
  std::string method = "mr";  // mr | or | naive

  int n_boot = 100;
  bool spatial = true;
  std::vector<CorrFamily> families = {CorrFamily::kExponential, CorrFamily::kMatern,
                                      CorrFamily::kPower, CorrFamily::kLinear,
                                      CorrFamily::kSpherical};
  std::optional<CorrelationModel> fixed_correlation;
  int variogram_bins = 15;
  std::size_t min_pairs = 30;

  std::string output_dir = "out";

  static RunConfig from_json_file(const std::string& path);
  std::string to_json_string() const;
};

struct RunArtifacts {
  ADTCurve curve;
  EmpiricalVariogram variogram;
  std::vector<CorrelationModel> family_fits;
  CorrelationModel correlation;
  CurveSummary summary;
  std::vector<std::string> output_files;
};

/// Execute an estimation run end to end and write all output files (curve
/// table, draws, variogram, correlation fits, manifest, SVG plots) into the
/// configured output directory.
RunArtifacts run_estimate(const RunConfig& config,
                          std::optional<std::pair<int, int>> pretrends_window = {});

/// Variogram diagnostics only: point estimate residuals, empirical variogram,
/// and the per-family fits.
RunArtifacts run_variogram(const RunConfig& config);

}  // namespace adt
