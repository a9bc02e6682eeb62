#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace windlq::plot {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    int width = 900;
    int height = 320;
};

struct BarGroup {
    std::string label;            // category on the x axis
    std::vector<double> values;   // one per bar label
};

struct BarChart {
    std::string title;
    std::string y_label;
    std::vector<std::string> bar_labels;
    std::vector<BarGroup> groups;
    int width = 700;
    int height = 360;
};

// Self-contained SVG documents. Long series are decimated to at most
// `max_points` per series by min/max bucketing so spikes stay visible.
std::string render_svg(const LineChart& chart, std::size_t max_points = 2000);
std::string render_svg(const BarChart& chart);

// Several line charts stacked vertically in one document.
std::string render_svg(const std::vector<LineChart>& panels, std::size_t max_points = 2000);

void write_svg(const std::filesystem::path& path, const std::string& svg);

}  // namespace windlq::plot
