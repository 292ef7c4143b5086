#include "perfusion/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "perfusion/errors.hpp"

namespace perfusion::svg {

namespace {

constexpr double kWidth = 560.0;
constexpr double kHeight = 420.0;
constexpr double kMarginL = 70.0;
constexpr double kMarginR = 20.0;
constexpr double kMarginT = 40.0;
constexpr double kMarginB = 55.0;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;

    double to_unit(double v) const {
        if (log) return (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
        return (v - lo) / (hi - lo);
    }
};

// Round the range outward to "nice" tick bounds and propose tick positions.
std::vector<double> linear_ticks(double lo, double hi, double& out_lo, double& out_hi) {
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double raw_step = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw_step <= m * mag) {
            step = m * mag;
            break;
        }
    }
    out_lo = std::floor(lo / step) * step;
    out_hi = std::ceil(hi / step) * step;
    std::vector<double> ticks;
    for (double t = out_lo; t <= out_hi + 0.5 * step; t += step) ticks.push_back(t);
    return ticks;
}

std::vector<double> log_ticks(double lo, double hi, double& out_lo, double& out_hi) {
    const int e_lo = static_cast<int>(std::floor(std::log10(lo)));
    const int e_hi = static_cast<int>(std::ceil(std::log10(hi)));
    out_lo = std::pow(10.0, e_lo);
    out_hi = std::pow(10.0, e_hi);
    std::vector<double> ticks;
    for (int e = e_lo; e <= e_hi; ++e) ticks.push_back(std::pow(10.0, e));
    return ticks;
}

void open_doc(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">"
        << title << "</text>\n";
}

void draw_frame_and_axes(std::ostringstream& out, const Axis& xa, const Axis& ya,
                         const std::vector<double>& xticks, const std::vector<double>& yticks,
                         const std::string& x_label, const std::string& y_label) {
    const double x0 = kMarginL, x1 = kWidth - kMarginR;
    const double y0 = kHeight - kMarginB, y1 = kMarginT;
    out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\"" << num(x1 - x0)
        << "\" height=\"" << num(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : xticks) {
        const double px = x0 + xa.to_unit(t) * (x1 - x0);
        out << "<line x1=\"" << num(px) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(px)
            << "\" y2=\"" << num(y0 + 5) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << num(px) << "\" y=\"" << num(y0 + 20)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << tick_label(t) << "</text>\n";
    }
    for (double t : yticks) {
        const double py = y0 - ya.to_unit(t) * (y0 - y1);
        out << "<line x1=\"" << num(x0 - 5) << "\" y1=\"" << num(py) << "\" x2=\"" << num(x0)
            << "\" y2=\"" << num(py) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << num(x0 - 8) << "\" y=\"" << num(py + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(t)
            << "</text>\n";
    }
    out << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 12)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << num((y0 + y1) / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 "
           "16 "
        << num((y0 + y1) / 2) << ")\">" << y_label << "</text>\n";
}

} // namespace

std::string LineChart::render() const {
    if (series.empty()) throw DataError("LineChart: no series to plot");

    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const Series& s : series) {
        if (s.points.empty()) throw DataError("LineChart: series '" + s.label + "' is empty");
        for (auto [x, y] : s.points) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }

    Axis xa{x_min, x_max, log_x};
    Axis ya{y_min, y_max, log_y};
    const auto xticks = log_x ? log_ticks(x_min, x_max, xa.lo, xa.hi)
                              : linear_ticks(x_min, x_max, xa.lo, xa.hi);
    double pad_lo = y_min, pad_hi = y_max;
    const auto yticks =
        log_y ? log_ticks(y_min, y_max, ya.lo, ya.hi) : linear_ticks(pad_lo, pad_hi, ya.lo, ya.hi);

    std::ostringstream out;
    open_doc(out, title);
    draw_frame_and_axes(out, xa, ya, xticks, yticks, x_label, y_label);

    const double x0 = kMarginL, x1 = kWidth - kMarginR;
    const double y0 = kHeight - kMarginB, y1 = kMarginT;
    double legend_y = y1 + 14;
    for (const Series& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
        if (s.dashed) out << " stroke-dasharray=\"6 4\"";
        out << " points=\"";
        for (auto [x, y] : s.points)
            out << num(x0 + xa.to_unit(x) * (x1 - x0)) << "," << num(y0 - ya.to_unit(y) * (y0 - y1))
                << " ";
        out << "\"/>\n";
        if (s.markers) {
            for (auto [x, y] : s.points)
                out << "<circle cx=\"" << num(x0 + xa.to_unit(x) * (x1 - x0)) << "\" cy=\""
                    << num(y0 - ya.to_unit(y) * (y0 - y1)) << "\" r=\"3\" fill=\"" << s.color
                    << "\"/>\n";
        }
        out << "<line x1=\"" << num(x1 - 150) << "\" y1=\"" << num(legend_y) << "\" x2=\""
            << num(x1 - 125) << "\" y2=\"" << num(legend_y) << "\" stroke=\"" << s.color
            << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        out << "<text x=\"" << num(x1 - 120) << "\" y=\"" << num(legend_y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
        legend_y += 16;
    }
    out << "</svg>\n";
    return out.str();
}

std::string ScatterChart::render() const {
    if (points.empty()) throw DataError("ScatterChart: no points to plot");

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (auto [x, y] : points) {
        lo = std::min({lo, x, y});
        hi = std::max({hi, x, y});
    }

    Axis xa{lo, hi, false}, ya{lo, hi, false};
    const auto ticks = linear_ticks(lo, hi, xa.lo, xa.hi);
    ya.lo = xa.lo;
    ya.hi = xa.hi;

    std::ostringstream out;
    open_doc(out, title);
    draw_frame_and_axes(out, xa, ya, ticks, ticks, x_label, y_label);

    const double x0 = kMarginL, x1 = kWidth - kMarginR;
    const double y0 = kHeight - kMarginB, y1 = kMarginT;
    if (identity_line) {
        out << "<line x1=\"" << num(x0 + xa.to_unit(xa.lo) * (x1 - x0)) << "\" y1=\""
            << num(y0 - ya.to_unit(ya.lo) * (y0 - y1)) << "\" x2=\""
            << num(x0 + xa.to_unit(xa.hi) * (x1 - x0)) << "\" y2=\""
            << num(y0 - ya.to_unit(ya.hi) * (y0 - y1))
            << "\" stroke=\"#888888\" stroke-dasharray=\"4 4\"/>\n";
    }
    for (auto [x, y] : points)
        out << "<circle cx=\"" << num(x0 + xa.to_unit(x) * (x1 - x0)) << "\" cy=\""
            << num(y0 - ya.to_unit(y) * (y0 - y1)) << "\" r=\"1.5\" fill=\"" << color
            << "\" fill-opacity=\"0.35\"/>\n";
    out << "</svg>\n";
    return out.str();
}

std::string render_histogram_row(const std::vector<Histogram>& panels, const std::string& title) {
    if (panels.empty()) throw DataError("render_histogram_row: no panels");

    const double panel_w = 260.0, panel_h = 220.0, gap = 20.0;
    const double width = gap + panels.size() * (panel_w + gap);
    const double height = panel_h + 80.0;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">"
        << title << "</text>\n";

    double px0 = gap;
    for (const Histogram& hpanel : panels) {
        if (hpanel.values.empty()) throw DataError("render_histogram_row: empty panel values");
        double lo = *std::min_element(hpanel.values.begin(), hpanel.values.end());
        double hi = *std::max_element(hpanel.values.begin(), hpanel.values.end());
        if (lo == hi) hi = lo + 1.0;
        const int bins = std::max(1, hpanel.bins);
        std::vector<int> counts(static_cast<std::size_t>(bins), 0);
        for (double v : hpanel.values) {
            auto b = static_cast<int>((v - lo) / (hi - lo) * bins);
            b = std::clamp(b, 0, bins - 1);
            ++counts[static_cast<std::size_t>(b)];
        }
        const int peak = *std::max_element(counts.begin(), counts.end());

        const double base_y = 40.0 + panel_h;
        out << "<rect x=\"" << num(px0) << "\" y=\"40\" width=\"" << num(panel_w) << "\" height=\""
            << num(panel_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
        const double bw = panel_w / bins;
        for (int b = 0; b < bins; ++b) {
            const double hgt = panel_h * counts[static_cast<std::size_t>(b)] / peak;
            if (hgt <= 0.0) continue;
            out << "<rect x=\"" << num(px0 + b * bw) << "\" y=\"" << num(base_y - hgt)
                << "\" width=\"" << num(bw) << "\" height=\"" << num(hgt)
                << "\" fill=\"#1f77b4\"/>\n";
        }
        out << "<text x=\"" << num(px0 + panel_w / 2) << "\" y=\"" << num(base_y + 20)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << hpanel.label << " [" << tick_label(lo) << ", " << tick_label(hi) << "]</text>\n";
        px0 += panel_w + gap;
    }
    out << "</svg>\n";
    return out.str();
}

void write_file(const std::string& path, const std::string& svg_text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << svg_text;
    if (!out) throw DataError("write failed: " + path);
}

} // namespace perfusion::svg
