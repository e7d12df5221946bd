#ifndef LOWSYNC_TOOLS_SVG_PLOT_HPP
#define LOWSYNC_TOOLS_SVG_PLOT_HPP

#include <string>
#include <utility>
#include <vector>

namespace lowsync::cli {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
};

/// Line chart with markers and a legend. Nonpositive values are dropped on
/// log axes. Output is byte-identical for identical input.
std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series);

} // namespace lowsync::cli

#endif
