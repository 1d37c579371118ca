#pragma once

#include <string>
#include <vector>

#include "adtcurve/estimator.hpp"
#include "adtcurve/variogram.hpp"

namespace adt {

/// Standalone SVG line plot of a dose-response curve with its confidence band
/// and a zero reference line.
void write_curve_svg(const std::string& path, const ADTCurve& curve,
                     const std::string& title);

/// Empirical variogram points with the fitted semivariance curves overlaid.
void write_variogram_svg(const std::string& path, const EmpiricalVariogram& variogram,
                         const std::vector<CorrelationModel>& fits,
                         const CorrelationModel& selected);

/// Generic multi-series line plot (used for simulation metric plots).
struct SvgSeries {
  std::string label;
  std::vector<double> y;
};
void write_lines_svg(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<double>& x, const std::vector<SvgSeries>& series);

}  // namespace adt
