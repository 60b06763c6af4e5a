#include "supradiff/svg.hpp"

#include "supradiff/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace supradiff {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#000000", "#d62728", "#1f77b4", "#2ca02c",
                                "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
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
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo <= 0.0) {
      const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string render_svg(const LineChart& chart) {
  Range xr, yr;
  for (const auto& s : chart.series) {
    if (s.xs.size() != s.ys.size()) throw ValidationError("render_svg: series length mismatch");
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (std::isfinite(s.xs[i]) && std::isfinite(s.ys[i])) {
        xr.add(s.xs[i]);
        yr.add(s.ys[i]);
      }
    }
  }
  xr.finish();
  yr.finish();
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kWidth) + "\" height=\"" +
       fixed(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fixed(kLeft + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
       escape(chart.title) + "</text>\n";
  o += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(kTop) + "\" width=\"" + fixed(pw) +
       "\" height=\"" + fixed(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    o += "<text x=\"" + fixed(px(fx)) + "\" y=\"" + fixed(kTop + ph + 16) +
         "\" text-anchor=\"middle\">" + tick_label(fx) + "</text>\n";
    o += "<text x=\"" + fixed(kLeft - 6) + "\" y=\"" + fixed(py(fy) + 4) +
         "\" text-anchor=\"end\">" + tick_label(fy) + "</text>\n";
    o += "<line x1=\"" + fixed(kLeft) + "\" y1=\"" + fixed(py(fy)) + "\" x2=\"" + fixed(kLeft + pw) +
         "\" y2=\"" + fixed(py(fy)) + "\" stroke=\"#ddd\"/>\n";
  }
  o += "<text x=\"" + fixed(kLeft + pw / 2) + "\" y=\"" + fixed(kHeight - 12) +
       "\" text-anchor=\"middle\">" + escape(chart.x_label) + "</text>\n";
  o += "<text transform=\"translate(18," + fixed(kTop + ph / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + escape(chart.y_label) + "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string points;
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      if (!points.empty()) points += ' ';
      points += fixed(px(s.xs[i])) + "," + fixed(py(s.ys[i]));
    }
    o += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
         "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(k);
    o += "<line x1=\"" + fixed(kLeft + pw + 10) + "\" y1=\"" + fixed(ly) + "\" x2=\"" +
         fixed(kLeft + pw + 30) + "\" y2=\"" + fixed(ly) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + fixed(kLeft + pw + 36) + "\" y=\"" + fixed(ly + 4) + "\">" +
         escape(s.name) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

LineChart chart_from_csv(const CsvTable& table, const std::string& x_column,
                         const std::vector<std::string>& y_columns, std::string title,
                         std::string y_label) {
  LineChart chart{std::move(title), x_column, std::move(y_label), {}};
  const std::size_t xc = table.column(x_column);
  for (const auto& name : y_columns) {
    const std::size_t yc = table.column(name);
    LineSeries s{name, {}, {}};
    for (const auto& row : table.rows) {
      s.xs.push_back(parse_number(row[xc]));
      s.ys.push_back(parse_number(row[yc]));
    }
    chart.series.push_back(std::move(s));
  }
  return chart;
}

}  // namespace supradiff
