#include "adtcurve/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adtcurve/common.hpp"

namespace adt {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 52;

struct Axis {
  double lo = 0.0, hi = 1.0;
  double scale(double v, double px_lo, double px_hi) const {
    if (hi <= lo) return px_lo;
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

void open_svg(std::ofstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
}

void draw_axes(std::ofstream& out, const Axis& x, const Axis& y,
               const std::string& x_label, const std::string& y_label) {
  const double px_lo = kMarginLeft, px_hi = kWidth - kMarginRight;
  const double py_lo = kHeight - kMarginBottom, py_hi = kMarginTop;
  out << "<line x1=\"" << px_lo << "\" y1=\"" << py_lo << "\" x2=\"" << px_hi << "\" y2=\""
      << py_lo << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << px_lo << "\" y1=\"" << py_lo << "\" x2=\"" << px_lo << "\" y2=\""
      << py_hi << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double fx = x.lo + (x.hi - x.lo) * i / 5.0;
    double px = x.scale(fx, px_lo, px_hi);
    out << "<line x1=\"" << px << "\" y1=\"" << py_lo << "\" x2=\"" << px << "\" y2=\""
        << py_lo + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px << "\" y=\"" << py_lo + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(fx) << "</text>\n";
    double fy = y.lo + (y.hi - y.lo) * i / 5.0;
    double py = y.scale(fy, py_lo, py_hi);
    out << "<line x1=\"" << px_lo - 5 << "\" y1=\"" << py << "\" x2=\"" << px_lo
        << "\" y2=\"" << py << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px_lo - 8 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fy)
        << "</text>\n";
  }
  out << "<text x=\"" << (px_lo + px_hi) / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << (py_lo + py_hi) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 16 " << (py_lo + py_hi) / 2 << ")\">" << y_label
      << "</text>\n";
}

std::string polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                     const Axis& x, const Axis& y) {
  const double px_lo = kMarginLeft, px_hi = kWidth - kMarginRight;
  const double py_lo = kHeight - kMarginBottom, py_hi = kMarginTop;
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) os << ' ';
    os << x.scale(xs[i], px_lo, px_hi) << ',' << y.scale(ys[i], py_lo, py_hi);
  }
  return os.str();
}

}  // namespace

void write_curve_svg(const std::string& path, const ADTCurve& curve,
                     const std::string& title) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write SVG: " + path);

  Axis x{curve.grid.front(), curve.grid.back()};
  double lo = 0.0, hi = 0.0;
  for (double v : curve.psi) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : curve.ci_lo) lo = std::min(lo, v);
  for (double v : curve.ci_hi) hi = std::max(hi, v);
  double pad = 0.08 * std::max(1e-12, hi - lo);
  Axis y{lo - pad, hi + pad};

  open_svg(out, title);
  draw_axes(out, x, y, "dose (quantile of port proximity)", "effect on outcome");

  const double px_lo = kMarginLeft, px_hi = kWidth - kMarginRight;
  const double py_lo = kHeight - kMarginBottom, py_hi = kMarginTop;
  if (!curve.ci_lo.empty()) {
    std::ostringstream band;
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      band << x.scale(curve.grid[i], px_lo, px_hi) << ','
           << y.scale(curve.ci_hi[i], py_lo, py_hi) << ' ';
    }
    for (std::size_t i = curve.grid.size(); i-- > 0;) {
      band << x.scale(curve.grid[i], px_lo, px_hi) << ','
           << y.scale(curve.ci_lo[i], py_lo, py_hi) << ' ';
    }
    out << "<polygon points=\"" << band.str()
        << "\" fill=\"#6699cc\" fill-opacity=\"0.35\" stroke=\"none\"/>\n";
  }
  // zero reference
  if (y.lo < 0.0 && y.hi > 0.0) {
    double py = y.scale(0.0, py_lo, py_hi);
    out << "<line x1=\"" << px_lo << "\" y1=\"" << py << "\" x2=\"" << px_hi << "\" y2=\""
        << py << "\" stroke=\"#888888\" stroke-dasharray=\"5,4\"/>\n";
  }
  out << "<polyline points=\"" << polyline(curve.grid, curve.psi, x, y)
      << "\" fill=\"none\" stroke=\"#1f3d7a\" stroke-width=\"2\"/>\n";
  out << "</svg>\n";
}

void write_variogram_svg(const std::string& path, const EmpiricalVariogram& variogram,
                         const std::vector<CorrelationModel>& fits,
                         const CorrelationModel& selected) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write SVG: " + path);

  Axis x{0.0, variogram.bin_mid.back() * 1.05};
  double hi = 0.0;
  for (double g : variogram.gamma) hi = std::max(hi, g);
  for (const auto& fit : fits) hi = std::max(hi, fit.sigma2);
  Axis y{0.0, hi * 1.15 + 1e-12};

  open_svg(out, "Residual variogram");
  draw_axes(out, x, y, "distance (km)", "semivariance");

  const double px_lo = kMarginLeft, px_hi = kWidth - kMarginRight;
  const double py_lo = kHeight - kMarginBottom, py_hi = kMarginTop;
  const char* palette[] = {"#cc4444", "#44aa44", "#bb8800", "#8844bb", "#447788"};
  int color_idx = 0;
  for (const auto& fit : fits) {
    if (!fit.converged) continue;
    std::vector<double> xs, ys;
    for (int i = 0; i <= 120; ++i) {
      double m = x.hi * i / 120.0;
      xs.push_back(m);
      ys.push_back(fit.sigma2 * (1.0 - fit.corr(m)));
    }
    bool is_selected = fit.family == selected.family;
    out << "<polyline points=\"" << polyline(xs, ys, x, y) << "\" fill=\"none\" stroke=\""
        << palette[color_idx % 5] << "\" stroke-width=\"" << (is_selected ? 2.5 : 1.2)
        << "\"/>\n";
    out << "<text x=\"" << px_hi - 8 << "\" y=\"" << py_hi + 16 + 16 * color_idx
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
        << palette[color_idx % 5] << "\">" << family_name(fit.family)
        << (is_selected ? " (selected)" : "") << "</text>\n";
    ++color_idx;
  }
  for (std::size_t b = 0; b < variogram.bin_mid.size(); ++b) {
    out << "<circle cx=\"" << x.scale(variogram.bin_mid[b], px_lo, px_hi) << "\" cy=\""
        << y.scale(variogram.gamma[b], py_lo, py_hi)
        << "\" r=\"3.5\" fill=\"#222222\"/>\n";
  }
  out << "</svg>\n";
}

void write_lines_svg(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<double>& x, const std::vector<SvgSeries>& series) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write SVG: " + path);

  Axis ax{x.front(), x.back()};
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& s : series) {
    for (double v : s.y) {
      if (first) {
        lo = hi = v;
        first = false;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  double pad = 0.08 * std::max(1e-12, hi - lo);
  Axis ay{lo - pad, hi + pad};

  open_svg(out, title);
  draw_axes(out, ax, ay, x_label, y_label);
  const double px_hi = kWidth - kMarginRight;
  const char* palette[] = {"#1f3d7a", "#cc4444", "#44aa44", "#bb8800", "#8844bb"};
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline points=\"" << polyline(x, series[s].y, ax, ay)
        << "\" fill=\"none\" stroke=\"" << palette[s % 5] << "\" stroke-width=\"1.8\"/>\n";
    out << "<text x=\"" << px_hi - 8 << "\" y=\"" << kMarginTop + 16 + 16 * s
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
        << palette[s % 5] << "\">" << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace adt
