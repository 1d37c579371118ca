#include "adtcurve/features.hpp"

#include <numeric>

#include "adtcurve/common.hpp"

namespace adt {

void FeatureTable::add_numeric(std::string name, std::vector<double> values) {
  if (!names.empty() && values.size() != rows())
    throw DataError("feature column length mismatch: " + name);
  if (names.empty() && row_ids.empty()) {
    row_ids.resize(values.size());
    std::iota(row_ids.begin(), row_ids.end(), 0);
  }
  names.push_back(std::move(name));
  cols.push_back(std::move(values));
  n_levels.push_back(0);
}

void FeatureTable::add_categorical(std::string name, std::vector<double> codes,
                                   int levels) {
  if (!names.empty() && codes.size() != rows())
    throw DataError("feature column length mismatch: " + name);
  if (names.empty() && row_ids.empty()) {
    row_ids.resize(codes.size());
    std::iota(row_ids.begin(), row_ids.end(), 0);
  }
  for (double c : codes)
    if (c < 0 || c >= levels || c != static_cast<int>(c))
      throw DataError("invalid level code in categorical feature " + name);
  names.push_back(std::move(name));
  cols.push_back(std::move(codes));
  n_levels.push_back(levels);
}

int FeatureTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

FeatureTable subset_rows(const FeatureTable& table, const std::vector<std::size_t>& rows) {
  FeatureTable out;
  out.names = table.names;
  out.n_levels = table.n_levels;
  out.cols.resize(table.cols.size());
  for (std::size_t c = 0; c < table.cols.size(); ++c) {
    out.cols[c].resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out.cols[c][i] = table.cols[c][rows[i]];
  }
  out.row_ids.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row_ids[i] = table.row_ids[rows[i]];
  return out;
}

FeatureTable build_features(const PanelDataset& panel,
                            const std::vector<std::string>& feature_names,
                            const std::vector<std::size_t>& rows) {
  FeatureTable table;
  table.row_ids.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    table.row_ids[i] = static_cast<std::int64_t>(rows[i]);

  for (const auto& name : feature_names) {
    std::vector<double> col(rows.size());
    if (name == "t") {
      for (std::size_t i = 0; i < rows.size(); ++i)
        col[i] = static_cast<double>(panel.obs_t[rows[i]]);
      table.names.push_back(name);
      table.cols.push_back(std::move(col));
      table.n_levels.push_back(0);
    } else if (name == "site") {
      for (std::size_t i = 0; i < rows.size(); ++i)
        col[i] = static_cast<double>(panel.obs_site[rows[i]]);
      table.names.push_back(name);
      table.cols.push_back(std::move(col));
      table.n_levels.push_back(static_cast<int>(panel.n_sites()));
    } else if (name == "province") {
      for (std::size_t i = 0; i < rows.size(); ++i)
        col[i] = static_cast<double>(panel.province[panel.obs_site[rows[i]]]);
      table.names.push_back(name);
      table.cols.push_back(std::move(col));
      table.n_levels.push_back(static_cast<int>(panel.province_levels.size()));
    } else if (name == "dose") {
      for (std::size_t i = 0; i < rows.size(); ++i)
        col[i] = panel.dose[panel.obs_site[rows[i]]];
      table.names.push_back(name);
      table.cols.push_back(std::move(col));
      table.n_levels.push_back(0);
    } else {
      bool found = false;
      for (std::size_t c = 0; c < panel.time_cov_names.size(); ++c) {
        if (panel.time_cov_names[c] == name) {
          for (std::size_t i = 0; i < rows.size(); ++i)
            col[i] = panel.time_covs[c][rows[i]];
          found = true;
          break;
        }
      }
      if (!found) {
        for (std::size_t c = 0; c < panel.static_cov_names.size(); ++c) {
          if (panel.static_cov_names[c] == name) {
            for (std::size_t i = 0; i < rows.size(); ++i)
              col[i] = panel.static_covs[c][panel.obs_site[rows[i]]];
            found = true;
            break;
          }
        }
      }
      if (!found) throw ConfigError("unknown feature name: " + name);
      table.names.push_back(name);
      table.cols.push_back(std::move(col));
      table.n_levels.push_back(0);
    }
  }
  return table;
}

}  // namespace adt
