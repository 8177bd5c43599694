#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "intflow/config.hpp"
#include "intflow/continuity.hpp"
#include "intflow/flow.hpp"
#include "intflow/io.hpp"
#include "intflow/ksd.hpp"
#include "intflow/mixture.hpp"
#include "intflow/svg.hpp"

namespace intflow {

struct Fig1Result {
    double correlation = 0.0;
    long long skipped_pairs = 0;
    int clipped_count = 0;
    double flow_max_norm = 0.0;
};

// One epsilon of the sweep, aggregated over the seeded perturbation repeats.
// Standard deviations use the n-1 divisor and are zero for a single repeat.
struct SweepRow {
    double epsilon = 0.0;
    double ustat_original = 0.0, ustat_original_std = 0.0;
    double ustat_flowed = 0.0, ustat_flowed_std = 0.0;
    double ustat_over_eps_original = 0.0, ustat_over_eps_original_std = 0.0;
    double ustat_over_eps_flowed = 0.0, ustat_over_eps_flowed_std = 0.0;
};

namespace detail {

// Pairs below this separation contribute unbounded kernel values and are
// skipped by the estimator; with continuous samples this almost never fires.
constexpr double kPairDistanceFloor = 1e-9;

struct MeanStd {
    double mean = 0.0, sd = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
    MeanStd out;
    out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() >= 2) {
        double acc = 0.0;
        for (double x : v) acc += (x - out.mean) * (x - out.mean);
        out.sd = std::sqrt(acc / static_cast<double>(v.size() - 1));
    }
    return out;
}

// Copy of the config with the scale default resolved, so callers that build
// a config by hand get the same behavior as the JSON loader.
inline ExperimentConfig resolved(const ExperimentConfig& cfg, const GaussianMixture& mix) {
    ExperimentConfig c = cfg;
    if (!(c.perturbation_scale > 0.0)) c.perturbation_scale = default_perturbation_scale(mix);
    if (c.epsilons.empty()) c.epsilons = default_epsilons();
    return c;
}

inline GridSpec window_spec(const ExperimentConfig& cfg, const Eigen::MatrixXd* samples,
                            const GaussianMixture& mix, double sample_margin) {
    if (cfg.window)
        return GridSpec(cfg.window->x_min, cfg.window->x_max, cfg.window->y_min,
                        cfg.window->y_max, cfg.grid_cells, cfg.grid_cells);
    if (samples != nullptr)
        return GridSpec(samples->col(0).minCoeff() - sample_margin,
                        samples->col(0).maxCoeff() + sample_margin,
                        samples->col(1).minCoeff() - sample_margin,
                        samples->col(1).maxCoeff() + sample_margin, cfg.grid_cells,
                        cfg.grid_cells);
    const auto [lo, hi] = mix.bounding_box(5.0);
    return GridSpec(lo[0], hi[0], lo[1], hi[1], cfg.grid_cells, cfg.grid_cells);
}

inline void write_metadata(const std::string& path,
                           const std::map<std::string, std::string>& entries) {
    nlohmann::json j(entries);
    write_text_file(path, j.dump(2) + "\n");
}

// Seeded uniform subsample of row indices, returned ascending.
inline std::vector<int> thin_indices(int count, int keep, std::uint64_t seed) {
    std::vector<int> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    if (count <= keep) return idx;
    std::mt19937_64 engine = make_engine(seed);
    std::shuffle(idx.begin(), idx.end(), engine);
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace detail

inline std::string sweep_csv_text(const std::vector<SweepRow>& rows) {
    std::string text =
        "epsilon,ustat_original,ustat_original_std,ustat_flowed,ustat_flowed_std,"
        "ustat_over_eps_original,ustat_over_eps_original_std,"
        "ustat_over_eps_flowed,ustat_over_eps_flowed_std\n";
    for (const auto& r : rows)
        text += format_double(r.epsilon) + "," + format_double(r.ustat_original) + "," +
                format_double(r.ustat_original_std) + "," + format_double(r.ustat_flowed) + "," +
                format_double(r.ustat_flowed_std) + "," +
                format_double(r.ustat_over_eps_original) + "," +
                format_double(r.ustat_over_eps_original_std) + "," +
                format_double(r.ustat_over_eps_flowed) + "," +
                format_double(r.ustat_over_eps_flowed_std) + "\n";
    return text;
}

// Flow visualization on a 2-D mixture: density heatmap, estimated flow over
// the analytic rate of density change, and the filtered KDE shift diagnostic.
inline Fig1Result run_fig1(const ExperimentConfig& cfg, const std::string& out_dir,
                           int n_threads) {
    std::filesystem::create_directories(out_dir);
    const GaussianMixture mix = build_mixture(cfg);
    if (mix.dim() != 2) throw std::invalid_argument("fig1 requires a 2-D mixture");
    const ExperimentConfig c = detail::resolved(cfg, mix);
    const auto dir = std::filesystem::path(out_dir);

    const Perturbation pert = build_perturbation(c, mix, derive_seed(c.seed, 1));
    const SampleSet set = make_sample_set(mix, pert, c.n_samples, derive_seed(c.seed, 2));
    const FlowField raw = estimate_flow(set, Dim(2), detail::kPairDistanceFloor, n_threads);
    const FlowField field = clip_flow(raw, c.clip_factor);

    const GridSpec spec = detail::window_spec(c, &set.points, mix, 3.0 * c.kde_sigma);
    const ScalarGrid density = evaluate_on_grid(
        [&](double x, double y) { return std::exp(mix.log_density(Eigen::Vector2d(x, y))); },
        spec);
    const ScalarGrid rate = evaluate_on_grid(
        [&](double x, double y) { return mix.delta_p(pert, Eigen::Vector2d(x, y)); }, spec);

    write_grid_csv((dir / "density.csv").string(), density);
    write_text_file((dir / "density.svg").string(),
                    svg::heatmap(density, false, "Mixture density"));
    write_grid_csv((dir / "delta_p.csv").string(), rate);
    write_flow_csv((dir / "flow_field.csv").string(), set.points, field);

    const auto shown =
        detail::thin_indices(c.n_samples, 1000, derive_seed(c.seed, 3));
    Eigen::MatrixXd pts(shown.size(), 2), vecs(shown.size(), 2);
    for (std::size_t k = 0; k < shown.size(); ++k) {
        pts.row(k) = set.points.row(shown[k]);
        vecs.row(k) = field.vectors.row(shown[k]);
    }
    write_text_file(
        (dir / "flow_overlay.svg").string(),
        svg::heatmap_with_arrows(rate, pts, vecs, true, "Estimated flow over analytic rate"));

    const Eigen::MatrixXd moved = apply_flow(set.points, field, c.kde_step);
    const ScalarGrid shift =
        median_filter(kde_difference(set.points, moved, c.kde_sigma, spec, c.kde_step), 3);
    write_grid_csv((dir / "kde_difference.csv").string(), shift);
    write_text_file((dir / "kde_difference.svg").string(),
                    svg::heatmap(shift, true, "KDE shift under the flow (filtered)"));

    // Agreement between the diagnostic and the analytic rate where the
    // density carries mass; two flat channels (a zero perturbation) count
    // as agreement-free and report zero.
    std::vector<double> a, b;
    const double p_max = density.values.maxCoeff();
    for (int i = 0; i < spec.nx; ++i)
        for (int j = 0; j < spec.ny; ++j)
            if (density.values(i, j) > 1e-3 * p_max) {
                a.push_back(rate.values(i, j));
                b.push_back(shift.values(i, j));
            }
    Fig1Result result;
    try {
        result.correlation = pearson_correlation(a, b);
    } catch (const std::domain_error&) {
        result.correlation = 0.0;
    }
    result.skipped_pairs = field.skipped_pairs;
    result.clipped_count = static_cast<int>(
        std::count(field.clipped.begin(), field.clipped.end(), std::uint8_t{1}));
    for (int i = 0; i < field.vectors.rows(); ++i)
        result.flow_max_norm = std::max(result.flow_max_norm, field.vectors.row(i).norm());

    write_metrics_json((dir / "metrics.json").string(),
                       {{"clipped_count", static_cast<double>(result.clipped_count)},
                        {"flow_max_norm", result.flow_max_norm},
                        {"kde_delta_p_correlation", result.correlation},
                        {"n_samples", static_cast<double>(c.n_samples)},
                        {"skipped_pairs", static_cast<double>(result.skipped_pairs)}});
    detail::write_metadata(
        (dir / "metadata.json").string(),
        {{"run", "fig1"},
         {"scale_convention", field.scale_convention},
         {"kde_difference_scale", "(kde of moved samples - kde of samples) / kde_step"},
         {"flow_overlay_note", "arrows auto-scaled for display; at most 1000 shown"}});
    return result;
}

// Discrepancy sweep: for each seeded perturbation, estimate the flow once,
// then compare original and flowed samples against the epsilon-perturbed
// target over the whole epsilon grid with a fixed per-repeat bandwidth.
inline std::vector<SweepRow> run_fig2(const ExperimentConfig& cfg, const std::string& out_dir,
                                      int n_threads) {
    std::filesystem::create_directories(out_dir);
    const GaussianMixture mix = build_mixture(cfg);
    const ExperimentConfig c = detail::resolved(cfg, mix);
    const auto dir = std::filesystem::path(out_dir);
    const int repeats = c.n_perturbations;
    const int n_eps = static_cast<int>(c.epsilons.size());

    Eigen::MatrixXd u_orig(n_eps, repeats), u_flow(n_eps, repeats);
    std::vector<double> bandwidths(repeats);
    for (int r = 0; r < repeats; ++r) {
        const Perturbation pert = build_perturbation(c, mix, derive_seed(c.seed, 1000 + r));
        const SampleSet set =
            make_sample_set(mix, pert, c.n_samples, derive_seed(c.seed, 2000 + r));
        const FlowField field = clip_flow(
            estimate_flow(set, Dim(mix.dim()), detail::kPairDistanceFloor, n_threads),
            c.clip_factor);
        bandwidths[r] = median_bandwidth(set.points);
        const RbfBandwidth bw(bandwidths[r]);
        for (int k = 0; k < n_eps; ++k) {
            const double eps = c.epsilons[k];
            const GaussianMixture target = perturbed_mixture(mix, pert, eps);
            auto score = [&](const Eigen::VectorXd& x) { return target.grad_log_density(x); };
            u_orig(k, r) = ksd_ustat(set.points, score, bw, n_threads).ustat;
            const Eigen::MatrixXd moved = apply_flow(set.points, field, eps);
            u_flow(k, r) = ksd_ustat(moved, score, bw, n_threads).ustat;
        }
    }

    std::vector<SweepRow> rows(n_eps);
    std::vector<std::pair<double, KsdResult>> raw_orig, raw_flow;
    for (int k = 0; k < n_eps; ++k) {
        const double eps = c.epsilons[k];
        std::vector<double> vo(repeats), vf(repeats);
        for (int r = 0; r < repeats; ++r) {
            vo[r] = u_orig(k, r);
            vf[r] = u_flow(k, r);
            raw_orig.push_back({eps, {u_orig(k, r), bandwidths[r], c.n_samples}});
            raw_flow.push_back({eps, {u_flow(k, r), bandwidths[r], c.n_samples}});
        }
        const auto mo = detail::mean_std(vo);
        const auto mf = detail::mean_std(vf);
        rows[k] = {eps,           mo.mean,      mo.sd,        mf.mean,      mf.sd,
                   mo.mean / eps, mo.sd / eps,  mf.mean / eps, mf.sd / eps};
    }

    write_text_file((dir / "sweep.csv").string(), sweep_csv_text(rows));
    write_ksd_csv((dir / "ksd_original.csv").string(), raw_orig);
    write_ksd_csv((dir / "ksd_flowed.csv").string(), raw_flow);

    svg::LinePlot plot;
    plot.title = "Discrepancy per unit step";
    plot.x_label = "epsilon";
    plot.y_label = "ustat / epsilon";
    plot.log_x = true;
    plot.series.resize(2);
    plot.series[0].name = "original";
    plot.series[0].color = "#d62728";
    plot.series[1].name = "flowed";
    plot.series[1].color = "#1f77b4";
    for (const auto& r : rows) {
        plot.series[0].points.push_back({r.epsilon, r.ustat_over_eps_original});
        plot.series[1].points.push_back({r.epsilon, r.ustat_over_eps_flowed});
    }
    write_text_file((dir / "sweep.svg").string(), svg::line_plot(plot));

    write_metrics_json((dir / "metrics.json").string(),
                       {{"bandwidth_mean", detail::mean_std(bandwidths).mean},
                        {"n_repeats", static_cast<double>(repeats)},
                        {"n_samples", static_cast<double>(c.n_samples)}});
    detail::write_metadata(
        (dir / "metadata.json").string(),
        {{"run", "fig2"},
         {"scale_convention", "coefficient-one"},
         {"epsilon_note",
          "flowed samples are x + epsilon v with the clipped estimate; the target is the "
          "epsilon-perturbed mixture"},
         {"bandwidth_note",
          "median heuristic on the unflowed samples, fixed across epsilon within a repeat"}});
    return rows;
}

// Quadrature check that the reconstructed transport balances the analytic
// rate of density change on a grid.
inline double run_continuity(const ExperimentConfig& cfg, const std::string& out_dir,
                             int n_threads) {
    std::filesystem::create_directories(out_dir);
    const GaussianMixture mix = build_mixture(cfg);
    if (mix.dim() != 2) throw std::invalid_argument("continuity requires a 2-D mixture");
    const ExperimentConfig c = detail::resolved(cfg, mix);
    const auto dir = std::filesystem::path(out_dir);

    const Perturbation pert = build_perturbation(c, mix, derive_seed(c.seed, 1));
    const GridSpec spec = detail::window_spec(c, nullptr, mix, 0.0);
    const ContinuityReport report = continuity_residual(mix, pert, spec, n_threads);

    write_grid_csv((dir / "residual.csv").string(), report.residual);
    write_metrics_json((dir / "metrics.json").string(),
                       {{"grid_cells", static_cast<double>(c.grid_cells)},
                        {"relative_l2", report.relative_l2}});
    detail::write_metadata(
        (dir / "metadata.json").string(),
        {{"run", "continuity"},
         {"residual_note",
          "residual = divergence of the quadrature transport field plus the analytic rate; "
          "relative_l2 is measured where the density carries mass"}});
    return report.relative_l2;
}

}  // namespace intflow
