#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "intflow/flow.hpp"
#include "intflow/grid.hpp"
#include "intflow/ksd.hpp"

namespace intflow {

// Shortest representation that parses back to the same double: exact
// round-trip, and a fixed format so identical runs write identical bytes.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_grid_csv(const std::string& path, const ScalarGrid& grid) {
    std::string text = "x,y,value\n";
    for (int i = 0; i < grid.spec.nx; ++i)
        for (int j = 0; j < grid.spec.ny; ++j)
            text += format_double(grid.spec.x(i)) + "," + format_double(grid.spec.y(j)) + "," +
                    format_double(grid.values(i, j)) + "\n";
    write_text_file(path, text);
}

inline void write_flow_csv(const std::string& path, const Eigen::MatrixXd& points,
                           const FlowField& field) {
    const int count = static_cast<int>(points.rows());
    const int n = static_cast<int>(points.cols());
    if (field.vectors.rows() != count || field.vectors.cols() != n ||
        field.clipped.size() != static_cast<std::size_t>(count))
        throw std::invalid_argument("write_flow_csv: shape mismatch");
    std::string text = "i";
    for (int a = 1; a <= n; ++a) text += ",x_" + std::to_string(a);
    for (int a = 1; a <= n; ++a) text += ",v_" + std::to_string(a);
    text += ",clipped\n";
    for (int i = 0; i < count; ++i) {
        text += std::to_string(i);
        for (int a = 0; a < n; ++a) text += "," + format_double(points(i, a));
        for (int a = 0; a < n; ++a) text += "," + format_double(field.vectors(i, a));
        text += field.clipped[i] ? ",1\n" : ",0\n";
    }
    write_text_file(path, text);
}

inline void write_ksd_csv(const std::string& path,
                          const std::vector<std::pair<double, KsdResult>>& rows) {
    std::string text = "epsilon,ustat,bandwidth,n_samples\n";
    for (const auto& [eps, r] : rows)
        text += format_double(eps) + "," + format_double(r.ustat) + "," +
                format_double(r.bandwidth) + "," + std::to_string(r.n_samples) + "\n";
    write_text_file(path, text);
}

// Flat name -> number map; keys are emitted sorted, so reruns are stable.
inline void write_metrics_json(const std::string& path,
                               const std::map<std::string, double>& metrics) {
    nlohmann::json j(metrics);
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace intflow
