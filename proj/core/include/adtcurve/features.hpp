#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adtcurve/panel.hpp"

namespace adt {

/// Column-major feature table. Categorical columns hold level codes (stored as
/// doubles); n_levels distinguishes them from numeric columns. row_ids give
/// each row a stable identity so fits are invariant to row order.
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;
  std::vector<int> n_levels;  // 0 = numeric
  std::vector<std::int64_t> row_ids;

  std::size_t rows() const { return row_ids.empty() ? 0 : row_ids.size(); }
  std::size_t n_features() const { return names.size(); }

  void add_numeric(std::string name, std::vector<double> values);
  void add_categorical(std::string name, std::vector<double> codes, int levels);
  int column_index(const std::string& name) const;  // -1 if absent
};

FeatureTable subset_rows(const FeatureTable& table, const std::vector<std::size_t>& rows);

/// Reserved feature names understood by build_features: "t" (month index),
/// "site" and "province" (fixed-effect categoricals), "dose" (per-site dose).
/// All other names refer to time-varying or static covariate columns.
FeatureTable build_features(const PanelDataset& panel,
                            const std::vector<std::string>& feature_names,
                            const std::vector<std::size_t>& rows);

}  // namespace adt
