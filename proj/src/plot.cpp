#include "windlq/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "windlq/errors.hpp"

namespace windlq::plot {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

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

// Roughly five round tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
    const double span = hi - lo;
    if (!(span > 0.0)) return {lo};
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
        out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
    }
    return out;
}

std::string tick_label(double v) { return fmt::format("{:.4g}", v); }

// Keeps the first, min, max and last point of each bucket.
Series decimate(const Series& s, std::size_t max_points) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (n <= max_points || max_points < 8) return s;
    Series out{s.label, {}, {}};
    const std::size_t buckets = max_points / 4;
    for (std::size_t b = 0; b < buckets; ++b) {
        const std::size_t lo = b * n / buckets;
        const std::size_t hi = (b + 1) * n / buckets;
        if (lo >= hi) continue;
        std::size_t imin = lo, imax = lo;
        for (std::size_t i = lo; i < hi; ++i) {
            if (s.y[i] < s.y[imin]) imin = i;
            if (s.y[i] > s.y[imax]) imax = i;
        }
        std::vector<std::size_t> keep{lo, imin, imax, hi - 1};
        std::sort(keep.begin(), keep.end());
        keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
        for (std::size_t i : keep) {
            out.x.push_back(s.x[i]);
            out.y.push_back(s.y[i]);
        }
    }
    return out;
}

struct Frame {
    double left, top, width, height;
    double x0, x1, y0, y1;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
    double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

void widen(double& lo, double& hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        lo = 0.0;
        hi = 1.0;
    } else if (hi - lo <= 0.0) {
        const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
        lo -= pad;
        hi += pad;
    }
}

void axes(std::ostringstream& o, const Frame& f, const std::string& x_label, const std::string& y_label,
          bool x_ticks) {
    o << fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="{:.1f}" height="{:.1f}" fill="none" stroke="#444"/>)",
                     f.left, f.top, f.width, f.height)
      << '\n';
    for (double t : ticks(f.y0, f.y1)) {
        const double y = f.py(t);
        o << fmt::format(R"(<line x1="{:.1f}" y1="{:.1f}" x2="{:.1f}" y2="{:.1f}" stroke="#ddd"/>)", f.left, y,
                         f.left + f.width, y)
          << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="11" text-anchor="end">{}</text>)", f.left - 4,
                         y + 4, tick_label(t))
          << '\n';
    }
    if (x_ticks) {
        for (double t : ticks(f.x0, f.x1)) {
            const double x = f.px(t);
            o << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="11" text-anchor="middle">{}</text>)", x,
                             f.top + f.height + 14, tick_label(t))
              << '\n';
        }
    }
    if (!x_label.empty()) {
        o << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="12" text-anchor="middle">{}</text>)",
                         f.left + f.width / 2, f.top + f.height + 30, escape(x_label))
          << '\n';
    }
    if (!y_label.empty()) {
        const double cy = f.top + f.height / 2;
        o << fmt::format(
                 R"svg(<text x="14" y="{:.1f}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.1f})">{}</text>)svg",
                 cy, cy, escape(y_label))
          << '\n';
    }
}

void line_panel(std::ostringstream& o, const LineChart& c, double y_offset, std::size_t max_points) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    std::vector<Series> shown;
    for (const Series& s : c.series) {
        if (s.x.size() != s.y.size()) throw ValidationError("plot", "series '" + s.label + "' has mismatched x/y");
        shown.push_back(decimate(s, max_points));
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    widen(x0, x1);
    widen(y0, y1);
    const Frame f{70.0, y_offset + 30.0, c.width - 90.0, c.height - 75.0, x0, x1, y0, y1};
    o << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="14" text-anchor="middle">{}</text>)", c.width / 2.0,
                     y_offset + 18, escape(c.title))
      << '\n';
    axes(o, f, c.x_label, c.y_label, true);
    for (std::size_t k = 0; k < shown.size(); ++k) {
        const char* color = kPalette[k % std::size(kPalette)];
        o << R"(<polyline fill="none" stroke-width="1" stroke=")" << color << R"(" points=")";
        for (std::size_t i = 0; i < shown[k].x.size(); ++i) {
            if (!std::isfinite(shown[k].y[i])) continue;
            o << fmt::format("{:.1f},{:.1f} ", f.px(shown[k].x[i]), f.py(shown[k].y[i]));
        }
        o << "\"/>\n";
        if (!shown[k].label.empty()) {
            const double ly = f.top + 14 + 14.0 * static_cast<double>(k);
            o << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="11" fill="{}" text-anchor="end">{}</text>)",
                             f.left + f.width - 6, ly, color, escape(shown[k].label))
              << '\n';
        }
    }
}

std::string header(int width, int height) {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        width, height);
}

}  // namespace

std::string render_svg(const LineChart& chart, std::size_t max_points) {
    return render_svg(std::vector<LineChart>{chart}, max_points);
}

std::string render_svg(const std::vector<LineChart>& panels, std::size_t max_points) {
    int width = 0, height = 0;
    for (const LineChart& c : panels) {
        width = std::max(width, c.width);
        height += c.height;
    }
    std::ostringstream o;
    o << header(std::max(width, 1), std::max(height, 1));
    double y = 0.0;
    for (const LineChart& c : panels) {
        line_panel(o, c, y, max_points);
        y += c.height;
    }
    o << "</svg>\n";
    return o.str();
}

std::string render_svg(const BarChart& chart) {
    double y1 = 0.0;
    for (const BarGroup& g : chart.groups) {
        if (g.values.size() != chart.bar_labels.size()) {
            throw ValidationError("plot", "bar group '" + g.label + "' has the wrong number of values");
        }
        for (double v : g.values) {
            if (std::isfinite(v)) y1 = std::max(y1, v);
        }
    }
    if (y1 <= 0.0) y1 = 1.0;
    y1 *= 1.1;
    const Frame f{70.0, 30.0, chart.width - 90.0, chart.height - 80.0, 0.0, 1.0, 0.0, y1};

    std::ostringstream o;
    o << header(chart.width, chart.height);
    o << fmt::format(R"(<text x="{:.1f}" y="18" font-size="14" text-anchor="middle">{}</text>)",
                     chart.width / 2.0, escape(chart.title))
      << '\n';
    axes(o, f, "", chart.y_label, false);

    const double group_w = f.width / static_cast<double>(std::max<std::size_t>(chart.groups.size(), 1));
    const double bar_w = 0.8 * group_w / static_cast<double>(std::max<std::size_t>(chart.bar_labels.size(), 1));
    for (std::size_t g = 0; g < chart.groups.size(); ++g) {
        const double gx = f.left + group_w * static_cast<double>(g) + 0.1 * group_w;
        for (std::size_t b = 0; b < chart.bar_labels.size(); ++b) {
            const double v = std::isfinite(chart.groups[g].values[b]) ? chart.groups[g].values[b] : 0.0;
            const double top = f.py(v);
            o << fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="{:.1f}" height="{:.1f}" fill="{}"/>)",
                             gx + bar_w * static_cast<double>(b), top, bar_w, f.top + f.height - top,
                             kPalette[b % std::size(kPalette)])
              << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="10" text-anchor="middle">{}</text>)",
                             gx + bar_w * (static_cast<double>(b) + 0.5), top - 3, tick_label(v))
              << '\n';
        }
        o << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="12" text-anchor="middle">{}</text>)",
                         gx + 0.4 * group_w, f.top + f.height + 16, escape(chart.groups[g].label))
          << '\n';
    }
    for (std::size_t b = 0; b < chart.bar_labels.size(); ++b) {
        o << fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="10" height="10" fill="{}"/>)",
                         f.left + 10 + 140.0 * static_cast<double>(b), chart.height - 22.0,
                         kPalette[b % std::size(kPalette)])
          << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="11">{}</text>)",
                         f.left + 24 + 140.0 * static_cast<double>(b), chart.height - 13.0,
                         escape(chart.bar_labels[b]))
          << '\n';
    }
    o << "</svg>\n";
    return o.str();
}

void write_svg(const std::filesystem::path& path, const std::string& svg) {
    std::ofstream out(path);
    if (!out) throw ValidationError("plot", "cannot write " + path.string());
    out << svg;
    if (!out) throw ValidationError("plot", "write failed: " + path.string());
}

}  // namespace windlq::plot
