#include "ict/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ict/data_io.hpp"

namespace ict {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 700.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 424.0;

constexpr const char* kPalette[6] = {"#1f77b4", "#d62728", "#2ca02c",
                                     "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape_xml(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (const char ch : text) {
    switch (ch) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out.push_back(ch);
    }
  }
  return out;
}

std::string num(double v) {
  char buffer[48];
  std::snprintf(buffer, sizeof buffer, "%.2f", v);
  return buffer;
}

std::string tick_label(double v) {
  char buffer[48];
  std::snprintf(buffer, sizeof buffer, "%.4g", v);
  return buffer;
}

struct Range {
  double lo{0}, hi{1};

  double place(double v, double px_lo, double px_hi) const {
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

Range span(const std::vector<SvgSeries>& series, bool use_x) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const SvgSeries& s : series)
    for (const double v : use_x ? s.x : s.y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (lo > hi) {
    lo = 0.0;
    hi = 1.0;
  }
  if (lo == hi) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series) {
  if (series.empty()) throw std::invalid_argument("write_svg_chart: no series");
  for (const SvgSeries& s : series) {
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("write_svg_chart: series '" + s.label +
                                  "' has mismatched x/y lengths");
    if (s.x.empty())
      throw std::invalid_argument("write_svg_chart: series '" + s.label + "' is empty");
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        throw std::invalid_argument("write_svg_chart: series '" + s.label +
                                    "' contains non-finite values");
  }

  const Range rx = span(series, true);
  const Range ry = span(series, false);

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num((kLeft + kRight) / 2) +
         "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">" +
         escape_xml(title) + "</text>\n";

  // Axis frame and ticks.
  svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" +
         num(kRight - kLeft) + "\" height=\"" + num(kBottom - kTop) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  const int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double f = double(t) / double(ticks);
    const double vx = rx.lo + f * (rx.hi - rx.lo);
    const double px = rx.place(vx, kLeft, kRight);
    svg += "<line x1=\"" + num(px) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(px) +
           "\" y2=\"" + num(kBottom + 5) + "\" stroke=\"#333333\"/>\n";
    svg += "<text x=\"" + num(px) + "\" y=\"" + num(kBottom + 20) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
           tick_label(vx) + "</text>\n";

    const double vy = ry.lo + f * (ry.hi - ry.lo);
    const double py = ry.place(vy, kBottom, kTop);
    svg += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(py) + "\" x2=\"" + num(kLeft) +
           "\" y2=\"" + num(py) + "\" stroke=\"#333333\"/>\n";
    svg += "<text x=\"" + num(kLeft - 9) + "\" y=\"" + num(py + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
           tick_label(vy) + "</text>\n";
  }
  svg += "<text x=\"" + num((kLeft + kRight) / 2) + "\" y=\"" + num(kHeight - 12) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" +
         escape_xml(x_label) + "</text>\n";
  svg += "<text x=\"20\" y=\"" + num((kTop + kBottom) / 2) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 20 " +
         num((kTop + kBottom) / 2) + ")\">" + escape_xml(y_label) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const SvgSeries& s = series[k];
    const char* color = kPalette[k % 6];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i > 0) points += ' ';
      points += num(rx.place(s.x[i], kLeft, kRight)) + ',' + num(ry.place(s.y[i], kBottom, kTop));
    }
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"1.8\" points=\"" + points + "\"/>\n";

    // Legend entry, top-right inside the frame.
    const double ly = kTop + 16.0 + 18.0 * double(k);
    svg += "<line x1=\"" + num(kRight - 150) + "\" y1=\"" + num(ly) + "\" x2=\"" +
           num(kRight - 122) + "\" y2=\"" + num(ly) + "\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"1.8\"/>\n";
    svg += "<text x=\"" + num(kRight - 116) + "\" y=\"" + num(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + escape_xml(s.label) +
           "</text>\n";
  }
  svg += "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileAccessError(path + ": cannot create file");
  out << svg;
  out.flush();
  if (!out) throw FileAccessError(path + ": cannot write file");
}

}  // namespace ict
