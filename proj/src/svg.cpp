#include "riskpred/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace riskpred::svg {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  void expand(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

// ~5 round tick positions covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  if (!(span > 0.0)) return {lo};
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> out;
  double t = std::ceil(lo / step) * step;
  for (; t <= hi + 1e-12 * span; t += step) out.push_back(t);
  return out;
}

}  // namespace

std::string line_plot(const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series) {
  if (series.empty()) throw std::invalid_argument("line_plot: no series");

  bool any = false;
  Range xr, yr;
  for (const auto& s : series) {
    for (const auto& [px, py] : s.points) {
      if (!any) {
        xr = {px, px};
        yr = {py, py};
        any = true;
      } else {
        xr.expand(px);
        yr.expand(py);
      }
    }
  }
  if (!any) throw std::invalid_argument("line_plot: no points");
  if (xr.hi == xr.lo) {
    xr.lo -= 0.5;
    xr.hi += 0.5;
  }
  if (yr.hi == yr.lo) {
    yr.lo -= 0.5;
    yr.hi += 0.5;
  }
  const double ypad = 0.05 * (yr.hi - yr.lo);
  yr.lo -= ypad;
  yr.hi += ypad;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double v) {
    return kMarginLeft + (v - xr.lo) / (xr.hi - xr.lo) * plot_w;
  };
  auto sy = [&](double v) {
    return kMarginTop + plot_h - (v - yr.lo) / (yr.hi - yr.lo) * plot_h;
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
         "\" height=\"" + std::to_string(kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + std::to_string(kWidth / 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         escape_xml(title) + "</text>\n";

  for (double t : ticks(xr.lo, xr.hi)) {
    const double px = sx(t);
    out += "<line x1=\"" + fmt("%.2f", px) + "\" y1=\"" + fmt("%.2f", kMarginTop) +
           "\" x2=\"" + fmt("%.2f", px) + "\" y2=\"" +
           fmt("%.2f", kMarginTop + plot_h) + "\" stroke=\"#dddddd\"/>\n";
    out += "<text x=\"" + fmt("%.2f", px) + "\" y=\"" +
           fmt("%.2f", kMarginTop + plot_h + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt("%.6g", t) + "</text>\n";
  }
  for (double t : ticks(yr.lo, yr.hi)) {
    const double py = sy(t);
    out += "<line x1=\"" + fmt("%.2f", kMarginLeft) + "\" y1=\"" + fmt("%.2f", py) +
           "\" x2=\"" + fmt("%.2f", kMarginLeft + plot_w) + "\" y2=\"" + fmt("%.2f", py) +
           "\" stroke=\"#dddddd\"/>\n";
    out += "<text x=\"" + fmt("%.2f", kMarginLeft - 6) + "\" y=\"" + fmt("%.2f", py + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt("%.6g", t) + "</text>\n";
  }
  out += "<rect x=\"" + std::to_string(kMarginLeft) + "\" y=\"" +
         std::to_string(kMarginTop) + "\" width=\"" + fmt("%.2f", plot_w) +
         "\" height=\"" + fmt("%.2f", plot_h) +
         "\" fill=\"none\" stroke=\"#333333\"/>\n";
  out += "<text x=\"" + std::to_string(kMarginLeft + static_cast<int>(plot_w) / 2) +
         "\" y=\"" + std::to_string(kHeight - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         escape_xml(x_label) + "</text>\n";
  out += "<text x=\"16\" y=\"" + std::to_string(kMarginTop + static_cast<int>(plot_h) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 " +
         std::to_string(kMarginTop + static_cast<int>(plot_h) / 2) + ")\">" +
         escape_xml(y_label) + "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % kPaletteSize];
    std::string pts;
    for (const auto& [px, py] : series[s].points) {
      if (!pts.empty()) pts += ' ';
      pts += fmt("%.2f", sx(px)) + "," + fmt("%.2f", sy(py));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  }

  // legend
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double ly = kMarginTop + 14.0 + 16.0 * static_cast<double>(s);
    const double lx = kMarginLeft + plot_w - 150.0;
    out += "<line x1=\"" + fmt("%.2f", lx) + "\" y1=\"" + fmt("%.2f", ly - 4) +
           "\" x2=\"" + fmt("%.2f", lx + 22) + "\" y2=\"" + fmt("%.2f", ly - 4) +
           "\" stroke=\"" + kPalette[s % kPaletteSize] + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + fmt("%.2f", lx + 28) + "\" y=\"" + fmt("%.2f", ly) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" +
           escape_xml(series[s].label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string bar_chart(const std::string& title,
                      const std::vector<std::pair<std::string, double>>& bars) {
  if (bars.empty()) throw std::invalid_argument("bar_chart: no bars");

  const int row_h = 18;
  const int height = kMarginTop + row_h * static_cast<int>(bars.size()) + kMarginBottom;
  const int label_w = 230;
  const double plot_w = kWidth - label_w - kMarginRight;

  Range vr;
  for (const auto& [label, v] : bars) vr.expand(v);
  if (vr.hi == vr.lo) vr.hi = vr.lo + 1.0;
  auto sx = [&](double v) {
    return label_w + (v - vr.lo) / (vr.hi - vr.lo) * plot_w;
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
         "\" height=\"" + std::to_string(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + std::to_string(kWidth / 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         escape_xml(title) + "</text>\n";

  const double zero_x = sx(0.0);
  out += "<line x1=\"" + fmt("%.2f", zero_x) + "\" y1=\"" + std::to_string(kMarginTop - 6) +
         "\" x2=\"" + fmt("%.2f", zero_x) + "\" y2=\"" +
         std::to_string(height - kMarginBottom + 6) + "\" stroke=\"#333333\"/>\n";

  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double y = kMarginTop + row_h * static_cast<double>(i);
    const double vx = sx(bars[i].second);
    const double x0 = std::min(zero_x, vx);
    const double w = std::max(std::abs(vx - zero_x), 0.5);
    const char* color = bars[i].second >= 0.0 ? "#d62728" : "#1f77b4";
    out += "<rect x=\"" + fmt("%.2f", x0) + "\" y=\"" + fmt("%.2f", y + 3) +
           "\" width=\"" + fmt("%.2f", w) + "\" height=\"" + std::to_string(row_h - 6) +
           "\" fill=\"" + color + "\"/>\n";
    out += "<text x=\"" + std::to_string(label_w - 8) + "\" y=\"" +
           fmt("%.2f", y + row_h - 5) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
           escape_xml(bars[i].first) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace riskpred::svg
