#pragma once

#include <optional>
#include <span>
#include <string>

namespace qql {

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::span<const double> x;
  std::span<const double> y;
  /// Optional dashed horizontal reference line (e.g. the target level).
  std::optional<double> reference;
  std::string reference_label;
};

/// Standalone SVG document for a single line series. Output depends only on
/// the input values.
std::string line_plot_svg(const LinePlot& plot);

}  // namespace qql
