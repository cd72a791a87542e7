#pragma once

#include <string>
#include <utility>
#include <vector>

namespace engage {

struct PlotLine {
    std::string label;
    unsigned rgb = 0x1f77b4;
    /// Polylines drawn separately; a gap in the data starts a new one.
    std::vector<std::vector<std::pair<double, double>>> segments;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;
    std::vector<double> y_ticks;
    std::vector<PlotLine> lines;
    int width = 960;
    int height = 360;
};

/// SVG when the path ends in ".svg", otherwise any raster format OpenCV can encode. Throws IoError.
void write_line_plot(const LinePlot& plot, const std::string& path);

}  // namespace engage
