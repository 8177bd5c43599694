#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "intflow/mixture.hpp"

namespace intflow {

struct WindowSpec {
    double x_min, x_max, y_min, y_max;
};

// Everything a run needs besides the CLI-chosen output directory and thread
// count.  Absent fields take the documented defaults; an absent perturbation
// shift list means fresh random unit shifts per repeat.
struct ExperimentConfig {
    std::vector<GaussianComponent> components;
    std::vector<Eigen::VectorXd> perturbation_shifts;  // empty: random per repeat
    double perturbation_scale = 0.0;                   // 0: tenth of smallest std
    int n_samples = 10000;
    int n_perturbations = 10;
    std::vector<double> epsilons;
    double clip_factor = 10.0;
    double kde_sigma = 0.2;
    double kde_step = 1e-4;
    int grid_cells = 200;
    std::optional<WindowSpec> window;
    std::uint64_t seed = 0;
    std::string output_dir;
};

inline std::vector<double> default_epsilons() {
    std::vector<double> eps(15);
    const double lo = std::log10(1e-4), hi = std::log10(3e-1);
    for (int k = 1; k < 14; ++k) eps[k] = std::pow(10.0, lo + k * (hi - lo) / 14.0);
    eps[0] = 1e-4;
    eps[14] = 3e-1;
    return eps;
}

inline GaussianMixture build_mixture(const ExperimentConfig& cfg) {
    return GaussianMixture(cfg.components);
}

// The configured perturbation if shifts are pinned, otherwise random unit
// shifts drawn from the given seed.
inline Perturbation build_perturbation(const ExperimentConfig& cfg, const GaussianMixture& mix,
                                       std::uint64_t seed) {
    if (cfg.perturbation_shifts.empty())
        return random_perturbation(mix, cfg.perturbation_scale, seed);
    return Perturbation{cfg.perturbation_shifts, cfg.perturbation_scale};
}

namespace detail {

[[noreturn]] inline void bad_field(const std::string& field, const std::string& why) {
    throw std::invalid_argument("config field '" + field + "': " + why);
}

inline double require_positive(const nlohmann::json& j, const std::string& field,
                               double fallback) {
    if (!j.contains(field)) return fallback;
    if (!j[field].is_number()) bad_field(field, "must be a number");
    const double v = j[field].get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) bad_field(field, "must be positive and finite");
    return v;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig cfg;

    if (!j.contains("mixture") || !j["mixture"].contains("components") ||
        !j["mixture"]["components"].is_array() || j["mixture"]["components"].empty())
        detail::bad_field("mixture", "must provide a nonempty components array");
    for (const auto& c : j["mixture"]["components"]) {
        if (!c.contains("weight") || !c.contains("mean") || !c.contains("cov"))
            detail::bad_field("mixture", "each component needs weight, mean, cov");
        GaussianComponent comp;
        comp.weight = c["weight"].get<double>();
        const auto mean = c["mean"].get<std::vector<double>>();
        comp.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
        const auto cov = c["cov"].get<std::vector<std::vector<double>>>();
        comp.cov.resize(cov.size(), cov.size());
        for (std::size_t r = 0; r < cov.size(); ++r) {
            if (cov[r].size() != cov.size())
                detail::bad_field("mixture", "cov rows must be square");
            for (std::size_t s = 0; s < cov.size(); ++s) comp.cov(r, s) = cov[r][s];
        }
        cfg.components.push_back(std::move(comp));
    }
    try {
        GaussianMixture probe(cfg.components);
        cfg.perturbation_scale =
            detail::require_positive(j, "perturbation_scale", default_perturbation_scale(probe));
        if (j.contains("perturbation_shifts")) {
            const auto shifts = j["perturbation_shifts"].get<std::vector<std::vector<double>>>();
            if (shifts.size() != probe.n_components())
                detail::bad_field("perturbation_shifts", "need one shift per component");
            for (const auto& s : shifts) {
                if (static_cast<int>(s.size()) != probe.dim())
                    detail::bad_field("perturbation_shifts", "shift dimension mismatch");
                cfg.perturbation_shifts.push_back(
                    Eigen::Map<const Eigen::VectorXd>(s.data(), s.size()));
            }
        }
    } catch (const std::invalid_argument& e) {
        if (std::string(e.what()).rfind("config field", 0) == 0) throw;
        detail::bad_field("mixture", e.what());
    }

    if (j.contains("n_samples")) {
        cfg.n_samples = j["n_samples"].get<int>();
        if (cfg.n_samples < 100)
            detail::bad_field("n_samples", "must be at least 100 for statistical runs");
    }
    if (j.contains("n_perturbations")) {
        cfg.n_perturbations = j["n_perturbations"].get<int>();
        if (cfg.n_perturbations < 1) detail::bad_field("n_perturbations", "must be positive");
    }
    if (j.contains("epsilons")) {
        cfg.epsilons = j["epsilons"].get<std::vector<double>>();
        if (cfg.epsilons.empty()) detail::bad_field("epsilons", "must be nonempty");
        for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
            if (!(cfg.epsilons[k] > 0.0))
                detail::bad_field("epsilons", "entries must be positive");
            if (k > 0 && !(cfg.epsilons[k] > cfg.epsilons[k - 1]))
                detail::bad_field("epsilons", "entries must be strictly ascending");
        }
    } else {
        cfg.epsilons = default_epsilons();
    }
    cfg.clip_factor = detail::require_positive(j, "clip_factor", cfg.clip_factor);
    cfg.kde_sigma = detail::require_positive(j, "kde_sigma", cfg.kde_sigma);
    cfg.kde_step = detail::require_positive(j, "kde_step", cfg.kde_step);
    if (j.contains("grid_cells")) {
        cfg.grid_cells = j["grid_cells"].get<int>();
        if (cfg.grid_cells < 8) detail::bad_field("grid_cells", "must be at least 8");
    }
    if (j.contains("window")) {
        const auto& w = j["window"];
        for (const char* key : {"x_min", "x_max", "y_min", "y_max"})
            if (!w.contains(key)) detail::bad_field("window", "needs x_min/x_max/y_min/y_max");
        WindowSpec win{w["x_min"].get<double>(), w["x_max"].get<double>(),
                       w["y_min"].get<double>(), w["y_max"].get<double>()};
        if (!(win.x_max > win.x_min) || !(win.y_max > win.y_min))
            detail::bad_field("window", "must have positive extent");
        cfg.window = win;
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    try {
        return parse_config(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config field error in " + path + ": " + e.what());
    }
}

}  // namespace intflow
