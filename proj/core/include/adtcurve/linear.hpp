#pragma once

#include <span>
#include <string>
#include <vector>

#include "adtcurve/features.hpp"

namespace adt {

/// Weighted least squares on products of named numeric columns, e.g.
/// {{"temp"},{"pop"},{"temp","pop"},{"dose","dose"}}. An intercept is always
/// included.
struct LinearModelSpec {
  std::vector<std::vector<std::string>> terms;
};

class LinearModel {
 public:
  void fit(const LinearModelSpec& spec, const FeatureTable& x, std::span<const double> y,
           std::span<const double> weights);
  std::vector<double> predict(const FeatureTable& x) const;
  std::vector<double> predict_override(const FeatureTable& x, int column,
                                       double value) const;
  bool fitted() const { return !coef_.empty(); }
  const std::vector<double>& coefficients() const { return coef_; }

 private:
  LinearModelSpec spec_;
  std::vector<std::vector<int>> term_cols_;  // resolved column indices
  std::vector<double> coef_;                 // [intercept, terms...]
};

}  // namespace adt
