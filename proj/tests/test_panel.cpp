#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "adtcurve/common.hpp"
#include "adtcurve/panel.hpp"
#include "adtcurve/sim.hpp"
#include "adtcurve/stats.hpp"
#include "support.hpp"

using namespace adt;
namespace fs = std::filesystem;

namespace {

std::string temp_dir() {
  static int counter = 0;
  std::string dir = (fs::temp_directory_path() / ("adt_panel_" + std::to_string(counter++)))
                        .string();
  fs::create_directories(dir);
  return dir;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("quantile transform follows the rank definition") {
  auto q = quantile_transform(std::vector<double>{10, 20, 30});
  CHECK(q[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(q[2] == doctest::Approx(1.0).epsilon(1e-12));

  auto tied = quantile_transform(std::vector<double>{5, 5, 9});
  CHECK(tied[0] == doctest::Approx(0.5));
  CHECK(tied[1] == doctest::Approx(0.5));
  CHECK(tied[2] == doctest::Approx(1.0));

  CHECK_THROWS_AS(quantile_transform(std::vector<double>{1.0}), DataError);
}

TEST_CASE("quantile transform of a skewed index is uniform") {
  // oracle: direct CDF comparison against U(0,1]
  std::vector<double> raw(356);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : raw) v = std::exp(3.0 * normal(rng));  // strongly right-skewed
  auto q = quantile_transform(raw);
  double d = ks_statistic(q, +[](double x) { return std::clamp(x, 0.0, 1.0); });
  CHECK(d < 0.01);
}

TEST_CASE("quantile transform is invariant to monotone transforms") {
  std::vector<double> raw(101);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-4.0, 4.0);
  for (auto& v : raw) v = unit(rng);
  std::vector<double> cubed(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) cubed[i] = raw[i] * raw[i] * raw[i];
  CHECK(quantile_transform(raw) == quantile_transform(cubed));
}

TEST_CASE("haversine distances") {
  CHECK(great_circle_km(12.5, -7.25, 12.5, -7.25) == 0.0);
  CHECK(great_circle_km(0.0, 0.0, 1.0, 0.0) == doctest::Approx(111.19).epsilon(0.001));

  auto panel = test_support::make_panel({});
  Eigen::MatrixXd d = great_circle_distances(panel);
  CHECK(d.isApprox(d.transpose()));
  CHECK(d.diagonal().isZero());
}

TEST_CASE("paper-scale panel round-trips through files") {
  PanelDataset panel = generate_covariates(356, 96, 73, 42);
  SimScenario s1 = SimScenario::preset("s1");
  Eigen::MatrixXd dist = great_circle_distances(panel);
  simulate_outcome(panel, s1, spatial_noise_sqrt(dist, s1.range_km), 42);
  CHECK(panel.n_obs() == 34176);  // 356 sites x 96 months

  PanelSchema schema;
  schema.time_covariates = panel.time_cov_names;
  schema.static_covariates = panel.static_cov_names;
  std::string dir = temp_dir();
  save_panel(panel, dir + "/panel.csv", dir + "/sites.csv", schema);
  PanelDataset loaded = load_panel(dir + "/panel.csv", dir + "/sites.csv", schema, 73);

  CHECK(loaded.site_ids == panel.site_ids);
  CHECK(loaded.lon == panel.lon);
  CHECK(loaded.lat == panel.lat);
  CHECK(loaded.raw_dose == panel.raw_dose);
  CHECK(loaded.dose == panel.dose);
  CHECK(loaded.y == panel.y);
  CHECK(loaded.obs_site == panel.obs_site);
  CHECK(loaded.obs_t == panel.obs_t);
  CHECK(loaded.time_covs == panel.time_covs);
  CHECK(loaded.static_covs == panel.static_covs);

  // structural invariants: T rows per site, t0-1 of them pre-period
  std::map<int, int> rows, pre;
  for (std::size_t r = 0; r < loaded.n_obs(); ++r) {
    rows[loaded.obs_site[r]]++;
    if (!loaded.is_post(r)) pre[loaded.obs_site[r]]++;
  }
  for (auto& [site, count] : rows) CHECK(count == 96);
  for (auto& [site, count] : pre) CHECK(count == 72);
}

TEST_CASE("minimal single-site panel loads") {
  std::string dir = temp_dir();
  write_file(dir + "/sites.csv", "site_id,lon,lat,province,raw_dose\na,10,1,p,3.5\n");
  write_file(dir + "/panel.csv", "site_id,t,y\na,1,4.0\na,2,5.0\n");
  PanelDataset panel = load_panel(dir + "/panel.csv", dir + "/sites.csv", PanelSchema{}, 2);
  CHECK(panel.n_sites() == 1);
  CHECK(panel.n_obs() == 2);
  CHECK(panel.dose[0] == 1.0);
  CHECK(panel.post_fraction() == doctest::Approx(0.5));
}

TEST_CASE("loader rejects structural problems") {
  std::string dir = temp_dir();
  write_file(dir + "/sites.csv",
             "site_id,lon,lat,province,raw_dose\ns7,10,1,p,3.5\ns8,11,1,p,4.5\n");

  SUBCASE("duplicate (site,t)") {
    write_file(dir + "/panel.csv", "site_id,t,y\ns7,3,1\ns7,3,2\ns8,1,0\ns8,9,0\n");
    CHECK_THROWS_AS(load_panel(dir + "/panel.csv", dir + "/sites.csv", PanelSchema{}, 3),
                    DataError);
  }
  SUBCASE("unknown site") {
    write_file(dir + "/panel.csv", "site_id,t,y\ns7,1,1\nmystery,2,2\n");
    CHECK_THROWS_AS(load_panel(dir + "/panel.csv", dir + "/sites.csv", PanelSchema{}, 2),
                    DataError);
  }
  SUBCASE("non-finite outcome") {
    write_file(dir + "/panel.csv", "site_id,t,y\ns7,1,1\ns7,2,nan\ns8,1,1\ns8,2,1\n");
    CHECK_THROWS_AS(load_panel(dir + "/panel.csv", dir + "/sites.csv", PanelSchema{}, 2),
                    DataError);
  }
  SUBCASE("t0 out of range") {
    write_file(dir + "/panel.csv", "site_id,t,y\ns7,1,1\ns7,2,1\ns8,1,1\ns8,2,1\n");
    CHECK_THROWS_AS(load_panel(dir + "/panel.csv", dir + "/sites.csv", PanelSchema{}, 1),
                    DataError);
    CHECK_THROWS_AS(load_panel(dir + "/panel.csv", dir + "/sites.csv", PanelSchema{}, 5),
                    DataError);
  }
  SUBCASE("missing column") {
    write_file(dir + "/panel.csv", "site_id,t\ns7,1\n");
    CHECK_THROWS_AS(load_panel(dir + "/panel.csv", dir + "/sites.csv", PanelSchema{}, 2),
                    ConfigError);
  }
}

TEST_CASE("rows with missing fields are rejected and counted") {
  std::string dir = temp_dir();
  write_file(dir + "/sites.csv",
             "site_id,lon,lat,province,raw_dose\na,10,1,p,3.5\nb,11,1,p,4.5\n");
  write_file(dir + "/panel.csv",
             "site_id,t,y\na,1,1\na,2,\nb,1,2\nb,2,3\n");
  LoadReport report;
  PanelDataset panel =
      load_panel(dir + "/panel.csv", dir + "/sites.csv", PanelSchema{}, 2, &report);
  CHECK(report.rejected_rows == 1);
  CHECK(report.missing_by_column.at("y") == 1);
  CHECK(panel.n_obs() == 3);
}

TEST_CASE("pre-trends subset relabels the window") {
  auto panel = test_support::make_panel({20, 24, 13, 5});
  PanelDataset sub = pretrends_subset(panel, 7, 12);
  CHECK(sub.t0 == 7);
  CHECK(sub.t_total == 12);
  for (std::size_t r = 0; r < sub.n_obs(); ++r) CHECK(sub.obs_t[r] <= 12);
  CHECK(sub.post_rows().size() == 20 * 6);

  CHECK_THROWS_AS(pretrends_subset(panel, 7, 13), ConfigError);   // overlaps post
  CHECK_THROWS_AS(pretrends_subset(panel, 1, 12), ConfigError);   // empty pre
  CHECK_THROWS_AS(pretrends_subset(panel, 10, 9), ConfigError);   // inverted

  // full pre-period minus the first year still works
  PanelDataset wide = pretrends_subset(panel, 2, 12);
  CHECK(wide.t0 == 2);
  CHECK(wide.pre_rows().size() == 20);
}
