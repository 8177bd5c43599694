#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "intflow/grid.hpp"

// Minimal self-contained SVG emitter: every byte is generated here, nothing
// references external resources, and all geometry is written with fixed
// two-decimal pixel coordinates so identical inputs give identical files.
namespace intflow::svg {

namespace detail {

inline std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string rgb(double r, double g, double b) {
    char buf[16];
    auto clamp = [](double v) { return std::clamp(static_cast<int>(std::lround(v)), 0, 255); };
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", clamp(r), clamp(g), clamp(b));
    return buf;
}

// t in [-1, 1]: blue through white to red.
inline std::string diverging_color(double t) {
    t = std::clamp(t, -1.0, 1.0);
    if (t < 0.0) {
        const double u = -t;
        return rgb(255 - u * (255 - 33), 255 - u * (255 - 102), 255 - u * (255 - 172));
    }
    return rgb(255 - t * (255 - 178), 255 - t * (255 - 24), 255 - t * (255 - 43));
}

// t in [0, 1]: white to dark blue.
inline std::string sequential_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return rgb(255 - t * (255 - 8), 255 - t * (255 - 48), 255 - t * (255 - 107));
}

struct Frame {
    double left = 64.0, top = 44.0, width = 520.0, height = 520.0;
    double canvas_w() const { return left + width + 24.0; }
    double canvas_h() const { return top + height + 56.0; }
};

inline std::string open_svg(const Frame& f) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(f.canvas_w()) +
           "\" height=\"" + px(f.canvas_h()) + "\" viewBox=\"0 0 " + px(f.canvas_w()) + " " +
           px(f.canvas_h()) + "\">\n<rect x=\"0\" y=\"0\" width=\"" + px(f.canvas_w()) +
           "\" height=\"" + px(f.canvas_h()) + "\" fill=\"#ffffff\"/>\n";
}

inline std::string title_text(const Frame& f, const std::string& title) {
    return "<text x=\"" + px(f.left + f.width / 2) +
           "\" y=\"26\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">" +
           escape(title) + "</text>\n";
}

inline std::string corner_labels(const Frame& f, double x_min, double x_max, double y_min,
                                 double y_max) {
    auto label = [&](double x, double y, const std::string& anchor, double value) {
        char num[32];
        std::snprintf(num, sizeof(num), "%g", value);
        return "<text x=\"" + px(x) + "\" y=\"" + px(y) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"" + anchor + "\">" +
               escape(num) + "</text>\n";
    };
    std::string out;
    out += label(f.left, f.top + f.height + 16, "middle", x_min);
    out += label(f.left + f.width, f.top + f.height + 16, "middle", x_max);
    out += label(f.left - 6, f.top + f.height, "end", y_min);
    out += label(f.left - 6, f.top + 10, "end", y_max);
    return out;
}

inline std::string cells(const ScalarGrid& grid, const Frame& f, bool diverging) {
    const int nx = grid.spec.nx, ny = grid.spec.ny;
    const double cw = f.width / nx, ch = f.height / ny;
    double lo = grid.values.minCoeff(), hi = grid.values.maxCoeff();
    const double amp = std::max(std::abs(lo), std::abs(hi));
    std::string out;
    out.reserve(std::size_t(nx) * ny * 64);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            std::string color;
            if (diverging) {
                color = diverging_color(amp > 0.0 ? grid.values(i, j) / amp : 0.0);
            } else {
                const double span = hi - lo;
                color = sequential_color(span > 0.0 ? (grid.values(i, j) - lo) / span : 0.0);
            }
            // y axis points up: row j = 0 sits at the bottom.
            out += "<rect x=\"" + px(f.left + i * cw) + "\" y=\"" +
                   px(f.top + f.height - (j + 1) * ch) + "\" width=\"" + px(cw + 0.1) +
                   "\" height=\"" + px(ch + 0.1) + "\" fill=\"" + color + "\"/>\n";
        }
    }
    out += "<rect x=\"" + px(f.left) + "\" y=\"" + px(f.top) + "\" width=\"" + px(f.width) +
           "\" height=\"" + px(f.height) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
    return out;
}

}  // namespace detail

inline std::string heatmap(const ScalarGrid& grid, bool diverging, const std::string& title) {
    detail::Frame f;
    std::string out = detail::open_svg(f);
    out += detail::title_text(f, title);
    out += detail::cells(grid, f, diverging);
    out += detail::corner_labels(f, grid.spec.x_min, grid.spec.x_max, grid.spec.y_min,
                                 grid.spec.y_max);
    out += "</svg>\n";
    return out;
}

// Heatmap with a vector overlay: one arrow per row of points/vectors, scaled
// so the longest arrow spans about five percent of the window.
inline std::string heatmap_with_arrows(const ScalarGrid& grid, const Eigen::MatrixXd& points,
                                       const Eigen::MatrixXd& vectors, bool diverging,
                                       const std::string& title) {
    if (points.rows() != vectors.rows() || points.cols() != 2 || vectors.cols() != 2)
        throw std::invalid_argument("heatmap_with_arrows: need matching N x 2 arrays");
    detail::Frame f;
    const auto& spec = grid.spec;
    const double sx = f.width / (spec.x_max - spec.x_min);
    const double sy = f.height / (spec.y_max - spec.y_min);
    auto to_px = [&](double x, double y) {
        return std::pair<double, double>{f.left + (x - spec.x_min) * sx,
                                         f.top + f.height - (y - spec.y_min) * sy};
    };
    double vmax = 0.0;
    for (int i = 0; i < vectors.rows(); ++i) vmax = std::max(vmax, vectors.row(i).norm());
    const double scale = vmax > 0.0 ? 0.05 * (spec.x_max - spec.x_min) / vmax : 0.0;

    std::string out = detail::open_svg(f);
    out += detail::title_text(f, title);
    out += detail::cells(grid, f, diverging);
    for (int i = 0; i < points.rows(); ++i) {
        const auto [x0, y0] = to_px(points(i, 0), points(i, 1));
        const auto [x1, y1] =
            to_px(points(i, 0) + scale * vectors(i, 0), points(i, 1) + scale * vectors(i, 1));
        out += "<line x1=\"" + detail::px(x0) + "\" y1=\"" + detail::px(y0) + "\" x2=\"" +
               detail::px(x1) + "\" y2=\"" + detail::px(y1) +
               "\" stroke=\"#111111\" stroke-width=\"0.8\"/>\n";
        const double dx = x1 - x0, dy = y1 - y0;
        const double len = std::hypot(dx, dy);
        if (len > 1e-9) {
            const double hx = dx / len * 3.0, hy = dy / len * 3.0;
            out += "<line x1=\"" + detail::px(x1) + "\" y1=\"" + detail::px(y1) + "\" x2=\"" +
                   detail::px(x1 - hx - 0.6 * hy) + "\" y2=\"" + detail::px(y1 - hy + 0.6 * hx) +
                   "\" stroke=\"#111111\" stroke-width=\"0.8\"/>\n";
            out += "<line x1=\"" + detail::px(x1) + "\" y1=\"" + detail::px(y1) + "\" x2=\"" +
                   detail::px(x1 - hx + 0.6 * hy) + "\" y2=\"" + detail::px(y1 - hy - 0.6 * hx) +
                   "\" stroke=\"#111111\" stroke-width=\"0.8\"/>\n";
        }
    }
    out += detail::corner_labels(f, spec.x_min, spec.x_max, spec.y_min, spec.y_max);
    out += "</svg>\n";
    return out;
}

struct LinePlot {
    struct Series {
        std::string name;
        std::string color;
        std::vector<std::pair<double, double>> points;
    };
    std::string title, x_label, y_label;
    bool log_x = false, log_y = false;
    std::vector<Series> series;
};

inline std::string line_plot(const LinePlot& plot) {
    if (plot.series.empty()) throw std::invalid_argument("line_plot: no series");
    double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
    bool first = true;
    auto tx = [&](double v) {
        if (plot.log_x && !(v > 0.0))
            throw std::invalid_argument("line_plot: log x needs positive values");
        return plot.log_x ? std::log10(v) : v;
    };
    auto ty = [&](double v) {
        if (plot.log_y && !(v > 0.0))
            throw std::invalid_argument("line_plot: log y needs positive values");
        return plot.log_y ? std::log10(v) : v;
    };
    for (const auto& s : plot.series) {
        if (s.points.empty()) throw std::invalid_argument("line_plot: empty series");
        for (const auto& [x, y] : s.points) {
            const double u = tx(x), v = ty(y);
            if (first) {
                x_lo = x_hi = u;
                y_lo = y_hi = v;
                first = false;
            } else {
                x_lo = std::min(x_lo, u);
                x_hi = std::max(x_hi, u);
                y_lo = std::min(y_lo, v);
                y_hi = std::max(y_hi, v);
            }
        }
    }
    if (x_hi == x_lo) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if (y_hi == y_lo) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }

    detail::Frame f;
    f.height = 420.0;
    auto to_px = [&](double u, double v) {
        return std::pair<double, double>{
            f.left + (u - x_lo) / (x_hi - x_lo) * f.width,
            f.top + f.height - (v - y_lo) / (y_hi - y_lo) * f.height};
    };
    std::string out = detail::open_svg(f);
    out += detail::title_text(f, plot.title);
    out += "<rect x=\"" + detail::px(f.left) + "\" y=\"" + detail::px(f.top) + "\" width=\"" +
           detail::px(f.width) + "\" height=\"" + detail::px(f.height) +
           "\" fill=\"none\" stroke=\"#333333\"/>\n";
    int legend_row = 0;
    for (const auto& s : plot.series) {
        std::string pts;
        for (const auto& [x, y] : s.points) {
            const auto [u, v] = to_px(tx(x), ty(y));
            pts += detail::px(u) + "," + detail::px(v) + " ";
        }
        if (!pts.empty()) pts.pop_back();
        out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
               detail::escape(s.color) + "\" stroke-width=\"1.6\"/>\n";
        const double ly = f.top + 14 + 18 * legend_row++;
        out += "<line x1=\"" + detail::px(f.left + f.width - 140) + "\" y1=\"" + detail::px(ly) +
               "\" x2=\"" + detail::px(f.left + f.width - 116) + "\" y2=\"" + detail::px(ly) +
               "\" stroke=\"" + detail::escape(s.color) + "\" stroke-width=\"1.6\"/>\n";
        out += "<text x=\"" + detail::px(f.left + f.width - 110) + "\" y=\"" +
               detail::px(ly + 4) + "\" font-family=\"sans-serif\" font-size=\"12\">" +
               detail::escape(s.name) + "</text>\n";
    }
    auto axis_label = [&](double x, double y, const std::string& text,
                          const std::string& extra) {
        return "<text x=\"" + detail::px(x) + "\" y=\"" + detail::px(y) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\"" + extra +
               ">" + detail::escape(text) + "</text>\n";
    };
    out += axis_label(f.left + f.width / 2, f.top + f.height + 36,
                      plot.log_x ? plot.x_label + " (log)" : plot.x_label, "");
    out += axis_label(18, f.top + f.height / 2,
                      plot.log_y ? plot.y_label + " (log)" : plot.y_label,
                      " transform=\"rotate(-90 18 " + detail::px(f.top + f.height / 2) + ")\"");
    char num[32];
    std::snprintf(num, sizeof(num), "%.3g", plot.log_x ? std::pow(10.0, x_lo) : x_lo);
    out += axis_label(f.left, f.top + f.height + 16, num, "");
    std::snprintf(num, sizeof(num), "%.3g", plot.log_x ? std::pow(10.0, x_hi) : x_hi);
    out += axis_label(f.left + f.width, f.top + f.height + 16, num, "");
    out += "</svg>\n";
    return out;
}

}  // namespace intflow::svg
