#include "adtcurve/panel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "adtcurve/common.hpp"
#include "adtcurve/csv.hpp"

namespace adt {

std::vector<std::size_t> PanelDataset::post_rows() const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < n_obs(); ++r)
    if (is_post(r)) out.push_back(r);
  return out;
}

std::vector<std::size_t> PanelDataset::pre_rows() const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < n_obs(); ++r)
    if (!is_post(r)) out.push_back(r);
  return out;
}

SiteRecord PanelDataset::site_record(std::size_t i) const {
  SiteRecord rec;
  rec.id = site_ids.at(i);
  rec.lon = lon[i];
  rec.lat = lat[i];
  rec.province = province_levels[province[i]];
  rec.raw_dose = raw_dose[i];
  for (std::size_t c = 0; c < static_cov_names.size(); ++c)
    rec.static_covariates[static_cov_names[c]] = static_covs[c][i];
  return rec;
}

Observation PanelDataset::observation(std::size_t row) const {
  Observation obs;
  obs.site_id = site_ids[obs_site.at(row)];
  obs.t = obs_t[row];
  obs.y = y[row];
  for (std::size_t c = 0; c < time_cov_names.size(); ++c)
    obs.time_covariates[time_cov_names[c]] = time_covs[c][row];
  return obs;
}

void PanelDataset::finalize() {
  const std::size_t n = n_sites();
  if (n == 0) throw DataError("panel has no sites");
  if (n_obs() == 0) throw DataError("panel has no observations");

  std::set<std::string> unique_ids(site_ids.begin(), site_ids.end());
  if (unique_ids.size() != n) throw DataError("duplicate site_id in sites table");
  for (std::size_t i = 0; i < n; ++i) {
    if (lat[i] < -90.0 || lat[i] > 90.0)
      throw DataError("site " + site_ids[i] + ": latitude out of [-90, 90]");
    if (lon[i] < -180.0 || lon[i] > 180.0)
      throw DataError("site " + site_ids[i] + ": longitude out of [-180, 180]");
  }

  t_total = 0;
  for (int t : obs_t) t_total = std::max(t_total, t);
  if (t0 <= 1 || t0 > t_total)
    throw DataError("t0 = " + std::to_string(t0) + " outside (1, T] with T = " +
                    std::to_string(t_total));

  std::set<std::pair<int, int>> seen;
  bool any_pre = false, any_post = false;
  for (std::size_t r = 0; r < n_obs(); ++r) {
    if (obs_site[r] < 0 || obs_site[r] >= static_cast<int>(n))
      throw DataError("observation row references unknown site");
    if (obs_t[r] < 1) throw DataError("month index must be >= 1");
    if (!std::isfinite(y[r])) throw DataError("non-finite outcome value");
    if (!seen.insert({obs_site[r], obs_t[r]}).second)
      throw DataError("duplicate (site, t) = (" + site_ids[obs_site[r]] + ", " +
                      std::to_string(obs_t[r]) + ")");
    (obs_t[r] >= t0 ? any_post : any_pre) = true;
  }
  for (const auto& col : time_covs)
    for (double v : col)
      if (!std::isfinite(v)) throw DataError("non-finite time covariate value");
  for (const auto& col : static_covs)
    for (double v : col)
      if (!std::isfinite(v)) throw DataError("non-finite static covariate value");
  if (!any_pre || !any_post) throw DataError("both periods must be non-empty");

  for (double d : raw_dose)
    if (!std::isfinite(d)) throw DataError("non-finite raw dose");
  dose = quantile_transform(raw_dose);

  // Canonical (site, t) ordering for deterministic downstream computation.
  std::vector<std::size_t> order(n_obs());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (obs_site[a] != obs_site[b]) return obs_site[a] < obs_site[b];
    return obs_t[a] < obs_t[b];
  });
  auto apply_i = [&](std::vector<int>& v) {
    std::vector<int> out(v.size());
    for (std::size_t k = 0; k < order.size(); ++k) out[k] = v[order[k]];
    v = std::move(out);
  };
  auto apply_d = [&](std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < order.size(); ++k) out[k] = v[order[k]];
    v = std::move(out);
  };
  apply_i(obs_site);
  apply_i(obs_t);
  apply_d(y);
  for (auto& col : time_covs) apply_d(col);
}

PanelDataset load_panel(const std::string& panel_path, const std::string& sites_path,
                        const PanelSchema& schema, int t0, LoadReport* report) {
  PanelDataset panel;
  panel.t0 = t0;
  LoadReport local_report;

  {
    CsvTable sites = read_csv(sites_path);
    std::size_t c_id = sites.column(schema.site_id);
    std::size_t c_lon = sites.column(schema.lon);
    std::size_t c_lat = sites.column(schema.lat);
    std::size_t c_prov = sites.column(schema.province);
    std::size_t c_dose = sites.column(schema.raw_dose);
    std::vector<std::size_t> c_static;
    for (const auto& name : schema.static_covariates)
      c_static.push_back(sites.column(name));

    panel.static_cov_names = schema.static_covariates;
    panel.static_covs.resize(c_static.size());
    std::map<std::string, int> province_code;
    for (std::size_t r = 0; r < sites.rows.size(); ++r) {
      std::string ctx = sites_path + " row " + std::to_string(r + 2);
      panel.site_ids.push_back(sites.cell(r, c_id));
      panel.lon.push_back(parse_cell(sites.cell(r, c_lon), ctx, nullptr));
      panel.lat.push_back(parse_cell(sites.cell(r, c_lat), ctx, nullptr));
      panel.raw_dose.push_back(parse_cell(sites.cell(r, c_dose), ctx, nullptr));
      const std::string& prov = sites.cell(r, c_prov);
      auto it = province_code.find(prov);
      if (it == province_code.end()) {
        it = province_code.emplace(prov, static_cast<int>(panel.province_levels.size()))
                 .first;
        panel.province_levels.push_back(prov);
      }
      panel.province.push_back(it->second);
      for (std::size_t c = 0; c < c_static.size(); ++c)
        panel.static_covs[c].push_back(parse_cell(sites.cell(r, c_static[c]), ctx, nullptr));
    }
  }

  std::unordered_map<std::string, int> site_index;
  for (std::size_t i = 0; i < panel.site_ids.size(); ++i)
    site_index[panel.site_ids[i]] = static_cast<int>(i);

  {
    CsvTable obs = read_csv(panel_path);
    std::size_t c_id = obs.column(schema.site_id);
    std::size_t c_t = obs.column(schema.time);
    std::size_t c_y = obs.column(schema.outcome);
    std::vector<std::size_t> c_time;
    for (const auto& name : schema.time_covariates) c_time.push_back(obs.column(name));

    panel.time_cov_names = schema.time_covariates;
    panel.time_covs.resize(c_time.size());
    for (std::size_t r = 0; r < obs.rows.size(); ++r) {
      std::string ctx = panel_path + " row " + std::to_string(r + 2);
      // Missing-field scan first: such rows are rejected, not fatal.
      bool any_missing = obs.cell(r, c_id).empty() || obs.cell(r, c_t).empty() ||
                         obs.cell(r, c_y).empty();
      if (obs.cell(r, c_y).empty()) ++local_report.missing_by_column[schema.outcome];
      for (std::size_t c = 0; c < c_time.size(); ++c) {
        if (obs.cell(r, c_time[c]).empty()) {
          any_missing = true;
          ++local_report.missing_by_column[schema.time_covariates[c]];
        }
      }
      if (any_missing) {
        ++local_report.rejected_rows;
        continue;
      }

      auto it = site_index.find(obs.cell(r, c_id));
      if (it == site_index.end())
        throw DataError(ctx + ": unknown site '" + obs.cell(r, c_id) + "'");
      panel.obs_site.push_back(it->second);
      double t_val = parse_cell(obs.cell(r, c_t), ctx, nullptr);
      if (t_val != std::floor(t_val) || t_val < 1)
        throw DataError(ctx + ": month index must be a positive integer");
      panel.obs_t.push_back(static_cast<int>(t_val));
      panel.y.push_back(parse_cell(obs.cell(r, c_y), ctx, nullptr));
      for (std::size_t c = 0; c < c_time.size(); ++c)
        panel.time_covs[c].push_back(parse_cell(obs.cell(r, c_time[c]), ctx, nullptr));
    }
  }

  panel.finalize();
  if (report) *report = local_report;
  return panel;
}

void save_panel(const PanelDataset& panel, const std::string& panel_path,
                const std::string& sites_path, const PanelSchema& schema) {
  {
    CsvTable sites;
    sites.header = {schema.site_id, schema.lon, schema.lat, schema.province,
                    schema.raw_dose};
    for (const auto& name : schema.static_covariates) sites.header.push_back(name);
    for (std::size_t i = 0; i < panel.n_sites(); ++i) {
      std::vector<std::string> row = {
          panel.site_ids[i], format_double(panel.lon[i]), format_double(panel.lat[i]),
          panel.province_levels[panel.province[i]], format_double(panel.raw_dose[i])};
      for (std::size_t c = 0; c < panel.static_covs.size(); ++c)
        row.push_back(format_double(panel.static_covs[c][i]));
      sites.rows.push_back(std::move(row));
    }
    write_csv(sites_path, sites);
  }
  {
    CsvTable obs;
    obs.header = {schema.site_id, schema.time, schema.outcome};
    for (const auto& name : schema.time_covariates) obs.header.push_back(name);
    for (std::size_t r = 0; r < panel.n_obs(); ++r) {
      std::vector<std::string> row = {panel.site_ids[panel.obs_site[r]],
                                      std::to_string(panel.obs_t[r]),
                                      format_double(panel.y[r])};
      for (std::size_t c = 0; c < panel.time_covs.size(); ++c)
        row.push_back(format_double(panel.time_covs[c][r]));
      obs.rows.push_back(std::move(row));
    }
    write_csv(panel_path, obs);
  }
}

std::vector<double> quantile_transform(std::span<const double> raw) {
  const std::size_t n = raw.size();
  if (n < 2) throw DataError("quantile_transform needs at least 2 values");
  for (double v : raw)
    if (!std::isfinite(v)) throw DataError("quantile_transform: non-finite input");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });

  std::vector<double> out(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && raw[order[j + 1]] == raw[order[i]]) ++j;
    // average of 1-based ranks i+1 .. j+1
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k)
      out[order[k]] = avg_rank / static_cast<double>(n);
    i = j + 1;
  }
  return out;
}

double great_circle_km(double lon1, double lat1, double lon2, double lat2) {
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double kDeg = M_PI / 180.0;
  double phi1 = lat1 * kDeg, phi2 = lat2 * kDeg;
  double dphi = (lat2 - lat1) * kDeg;
  double dlam = (lon2 - lon1) * kDeg;
  double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
             std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) * std::sin(dlam / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

Eigen::MatrixXd great_circle_distances(const PanelDataset& panel) {
  const std::size_t n = panel.n_sites();
  Eigen::MatrixXd d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double km = great_circle_km(panel.lon[i], panel.lat[i], panel.lon[j], panel.lat[j]);
      d(i, j) = km;
      d(j, i) = km;
    }
  }
  return d;
}

PanelDataset pretrends_subset(const PanelDataset& panel, int pseudo_t0, int pseudo_t1) {
  if (pseudo_t1 >= panel.t0)
    throw ConfigError("pre-trends window overlaps the true post period");
  if (pseudo_t0 < 2 || pseudo_t0 > pseudo_t1)
    throw ConfigError("pre-trends window must satisfy 2 <= start <= end < t0");

  PanelDataset out;
  out.site_ids = panel.site_ids;
  out.lon = panel.lon;
  out.lat = panel.lat;
  out.province = panel.province;
  out.province_levels = panel.province_levels;
  out.static_cov_names = panel.static_cov_names;
  out.static_covs = panel.static_covs;
  out.raw_dose = panel.raw_dose;
  out.time_cov_names = panel.time_cov_names;
  out.time_covs.resize(panel.time_covs.size());
  out.t0 = pseudo_t0;

  for (std::size_t r = 0; r < panel.n_obs(); ++r) {
    if (panel.obs_t[r] > pseudo_t1) continue;
    out.obs_site.push_back(panel.obs_site[r]);
    out.obs_t.push_back(panel.obs_t[r]);
    out.y.push_back(panel.y[r]);
    for (std::size_t c = 0; c < panel.time_covs.size(); ++c)
      out.time_covs[c].push_back(panel.time_covs[c][r]);
  }
  if (out.n_obs() == 0) throw ConfigError("pre-trends window selects no rows");
  out.finalize();
  return out;
}

}  // namespace adt
