#include "adtcurve/linear.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "adtcurve/common.hpp"

namespace adt {

void LinearModel::fit(const LinearModelSpec& spec, const FeatureTable& x,
                      std::span<const double> y, std::span<const double> weights) {
  const std::size_t n = x.rows();
  if (n == 0) throw DataError("linear fit: empty data");
  if (y.size() != n) throw DataError("linear fit: |y| != rows");
  spec_ = spec;
  term_cols_.clear();
  for (const auto& term : spec.terms) {
    std::vector<int> cols;
    for (const auto& name : term) {
      int c = x.column_index(name);
      if (c < 0) throw ConfigError("linear term references unknown feature: " + name);
      if (x.n_levels[c] != 0)
        throw ConfigError("linear terms must be numeric: " + name);
      cols.push_back(c);
    }
    if (cols.empty()) throw ConfigError("empty linear term");
    term_cols_.push_back(std::move(cols));
  }

  const std::size_t k = term_cols_.size() + 1;
  Eigen::MatrixXd a(n, k);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sw = weights.empty() ? 1.0 : std::sqrt(weights[i]);
    a(i, 0) = sw;
    for (std::size_t t = 0; t < term_cols_.size(); ++t) {
      double v = 1.0;
      for (int c : term_cols_[t]) v *= x.cols[c][i];
      a(i, t + 1) = sw * v;
    }
    b(i) = sw * y[i];
  }
  Eigen::VectorXd beta = a.colPivHouseholderQr().solve(b);
  coef_.assign(beta.data(), beta.data() + k);
}

std::vector<double> LinearModel::predict(const FeatureTable& x) const {
  return predict_override(x, -1, 0.0);
}

std::vector<double> LinearModel::predict_override(const FeatureTable& x, int column,
                                                  double value) const {
  if (!fitted()) throw NumericError("linear predict before fit");
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = coef_[0];
    for (std::size_t t = 0; t < term_cols_.size(); ++t) {
      double v = 1.0;
      for (int c : term_cols_[t])
        v *= (c == column ? value : x.cols[c][i]);
      s += coef_[t + 1] * v;
    }
    out[i] = s;
  }
  return out;
}

}  // namespace adt
