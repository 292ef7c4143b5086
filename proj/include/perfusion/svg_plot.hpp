// Small deterministic SVG chart writer: line charts (optionally log-x),
// scatter plots and histogram grids. Purely presentational; all numeric
// results live in the CSVs.

#pragma once

#include <string>
#include <utility>
#include <vector>

namespace perfusion::svg {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
    std::string color = "#1f77b4";
    bool dashed = false;
    bool markers = true;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<Series> series;

    std::string render() const;
};

struct ScatterChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool identity_line = true; // y = x reference
    std::vector<std::pair<double, double>> points;
    std::string color = "#1f77b4";

    std::string render() const;
};

struct Histogram {
    std::string label;
    std::vector<double> values;
    int bins = 40;
};

// One SVG with the histograms side by side.
std::string render_histogram_row(const std::vector<Histogram>& panels, const std::string& title);

void write_file(const std::string& path, const std::string& svg_text);

} // namespace perfusion::svg
