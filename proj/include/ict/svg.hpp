#pragma once

#include <string>
#include <vector>

namespace ict {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Writes a self-contained SVG line chart, one polyline per series, with an
// axis frame, tick labels, and a legend. Output bytes depend only on the
// inputs. Throws std::invalid_argument on empty or ragged series and
// FileAccessError when the path cannot be written.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series);

}  // namespace ict
