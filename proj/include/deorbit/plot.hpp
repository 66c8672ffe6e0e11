#pragma once

// Static SVG charts for the scenario outputs.

#include <filesystem>
#include <string>
#include <vector>

namespace deorbit::plot {

enum class Style { line, step, cdf, histogram };

struct Series {
    std::string label;
    std::vector<double> x;
    // For histograms these are the raw samples; x is ignored.
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    Style style = Style::line;
    double bin_width = 1.0;
    // Longer series are decimated, keeping each bucket's extremes.
    std::size_t max_points = 2000;
};

std::string render_svg(const std::vector<Series>& series, const PlotSpec& spec);

/// Throws std::invalid_argument when there is nothing to draw.
void emit_plot(const std::vector<Series>& series, const PlotSpec& spec, const std::filesystem::path& path);

}  // namespace deorbit::plot
