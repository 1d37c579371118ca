#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace adt {

/// Column-name mapping for the two input files.
struct PanelSchema {
  // observations file
  std::string site_id = "site_id";
  std::string time = "t";
  std::string outcome = "y";
  std::vector<std::string> time_covariates;
  // sites file
  std::string lon = "lon";
  std::string lat = "lat";
  std::string province = "province";
  std::string raw_dose = "raw_dose";
  std::vector<std::string> static_covariates;
};

/// Row-level views used for IO and tests; the dataset itself stores columns.
struct SiteRecord {
  std::string id;
  double lon = 0.0;
  double lat = 0.0;
  std::string province;
  double raw_dose = 0.0;
  std::map<std::string, double> static_covariates;
};

struct Observation {
  std::string site_id;
  int t = 0;
  double y = 0.0;
  std::map<std::string, double> time_covariates;
};

struct LoadReport {
  std::size_t rejected_rows = 0;
  std::map<std::string, std::size_t> missing_by_column;
};

/// Long-format spatiotemporal panel: sites x months. Observations are stored
/// sorted by (site, t). The intervention indicator is B = 1{t >= t0}; the
/// quantile dose is defined per site and is meaningful only on B=1 rows.
struct PanelDataset {
  // sites
  std::vector<std::string> site_ids;
  std::vector<double> lon;
  std::vector<double> lat;
  std::vector<int> province;  // codes into province_levels
  std::vector<std::string> province_levels;
  std::vector<std::string> static_cov_names;
  std::vector<std::vector<double>> static_covs;  // [cov][site]
  std::vector<double> raw_dose;                  // per site
  std::vector<double> dose;                      // per site, quantile scale (0,1]

  // observations, sorted by (site, t)
  std::vector<int> obs_site;
  std::vector<int> obs_t;  // 1..t_total
  std::vector<double> y;
  std::vector<std::string> time_cov_names;
  std::vector<std::vector<double>> time_covs;  // [cov][row]

  int t0 = 0;
  int t_total = 0;

  std::size_t n_sites() const { return site_ids.size(); }
  std::size_t n_obs() const { return y.size(); }
  bool is_post(std::size_t row) const { return obs_t[row] >= t0; }
  double post_fraction() const {
    return static_cast<double>(t_total - t0 + 1) / static_cast<double>(t_total);
  }
  std::vector<std::size_t> post_rows() const;
  std::vector<std::size_t> pre_rows() const;

  SiteRecord site_record(std::size_t i) const;
  Observation observation(std::size_t row) const;

  /// Re-derives the quantile dose from raw_dose and validates all invariants.
  /// Called by the loaders; exposed for panels constructed in memory.
  void finalize();
};

/// Load and validate the panel from an observations file and a sites file.
/// Rows with missing (empty) required fields are rejected and counted in the
/// report; structural problems (duplicates, unknown sites, bad t0) throw.
PanelDataset load_panel(const std::string& panel_path, const std::string& sites_path,
                        const PanelSchema& schema, int t0,
                        LoadReport* report = nullptr);

/// Write the two files back out; load_panel(save_panel(p)) reproduces p exactly.
void save_panel(const PanelDataset& panel, const std::string& panel_path,
                const std::string& sites_path, const PanelSchema& schema);

/// Ranks divided by N, with average ranks for ties. Output lies in (0, 1].
std::vector<double> quantile_transform(std::span<const double> raw);

/// Haversine great-circle distance in km (R = 6371 km).
double great_circle_km(double lon1, double lat1, double lon2, double lat2);

/// Symmetric N x N matrix of pairwise site distances in km.
Eigen::MatrixXd great_circle_distances(const PanelDataset& panel);

/// Pre-trends subset: keeps rows with t <= pseudo_t1, drops the true post
/// period entirely, and relabels [pseudo_t0, pseudo_t1] as the post period.
PanelDataset pretrends_subset(const PanelDataset& panel, int pseudo_t0, int pseudo_t1);

}  // namespace adt
