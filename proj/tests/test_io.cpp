#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "intflow/config.hpp"
#include "intflow/io.hpp"

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;
using Catch::Matchers::WithinRel;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "intflow_io_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path write_config(const std::string& name, const std::string& body) {
    auto path = temp_dir() / name;
    std::ofstream out(path);
    out << body;
    return path;
}

const char* kValidConfig = R"({
  "mixture": {"components": [
    {"weight": 0.5, "mean": [-1.0, 0.0], "cov": [[0.5, 0.0], [0.0, 0.5]]},
    {"weight": 0.5, "mean": [1.0, 0.0], "cov": [[0.4, 0.1], [0.1, 0.4]]}
  ]},
  "n_samples": 500,
  "n_perturbations": 3,
  "seed": 7
})";

}  // namespace

TEST_CASE("format_double round-trips") {
    for (double v : {1.0 / 3.0, 1e-300, 12345.678901234567, -0.25, 0.0, 3e-1}) {
        const std::string s = intflow::format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("grid CSV layout") {
    intflow::GridSpec spec(0.0, 1.0, 0.0, 1.0, 8, 8);
    intflow::ScalarGrid g{spec, Eigen::MatrixXd::Zero(8, 8)};
    g.values(0, 0) = 1.5;
    g.values(7, 7) = -2.5;
    auto path = temp_dir() / "grid.csv";
    intflow::write_grid_csv(path.string(), g);
    std::string text = slurp(path);

    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "x,y,value");
    std::getline(lines, line);
    CHECK(line == intflow::format_double(spec.x(0)) + "," + intflow::format_double(spec.y(0)) +
                      ",1.5");
    int rows = 1;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 64);
    CHECK(text.back() == '\n');
}

TEST_CASE("flow CSV layout") {
    Eigen::MatrixXd pts(2, 2);
    pts << 0.5, -0.5, 1.5, 2.5;
    intflow::FlowField f;
    f.vectors.resize(2, 2);
    f.vectors << 0.1, 0.2, 0.3, 0.4;
    f.clipped = {0, 1};
    auto path = temp_dir() / "flow.csv";
    intflow::write_flow_csv(path.string(), pts, f);
    std::istringstream lines(slurp(path));
    std::string line;
    std::getline(lines, line);
    CHECK(line == "i,x_1,x_2,v_1,v_2,clipped");
    std::getline(lines, line);
    CHECK(line == "0,0.5,-0.5,0.1,0.2,0");
    std::getline(lines, line);
    CHECK(line == "1,1.5,2.5,0.3,0.4,1");
}

TEST_CASE("ksd CSV layout") {
    std::vector<std::pair<double, intflow::KsdResult>> rows;
    rows.push_back({0.01, {0.5, 1.25, 100}});
    auto path = temp_dir() / "ksd.csv";
    intflow::write_ksd_csv(path.string(), rows);
    std::istringstream lines(slurp(path));
    std::string line;
    std::getline(lines, line);
    CHECK(line == "epsilon,ustat,bandwidth,n_samples");
    std::getline(lines, line);
    CHECK(line == "0.01,0.5,1.25,100");
}

TEST_CASE("metrics files are stable and parseable") {
    std::map<std::string, double> metrics{{"beta", 2.5}, {"alpha", 1.0 / 3.0}};
    auto path = temp_dir() / "metrics.json";
    intflow::write_metrics_json(path.string(), metrics);
    std::string first = slurp(path);
    intflow::write_metrics_json(path.string(), metrics);
    CHECK(first == slurp(path));

    auto parsed = nlohmann::json::parse(first);
    CHECK(parsed["alpha"].get<double>() == 1.0 / 3.0);
    CHECK(parsed["beta"].get<double>() == 2.5);
}

TEST_CASE("valid config fills defaults") {
    auto cfg = intflow::load_config(write_config("ok.json", kValidConfig).string());
    CHECK(cfg.n_samples == 500);
    CHECK(cfg.n_perturbations == 3);
    CHECK(cfg.seed == 7);
    CHECK(cfg.clip_factor == 10.0);
    CHECK(cfg.kde_sigma == 0.2);
    CHECK(cfg.kde_step == 1e-4);
    CHECK(cfg.grid_cells == 200);
    REQUIRE(cfg.epsilons.size() == 15);
    CHECK(cfg.epsilons.front() == 1e-4);
    CHECK(cfg.epsilons.back() == 3e-1);
    for (std::size_t k = 1; k < cfg.epsilons.size(); ++k)
        CHECK(cfg.epsilons[k] > cfg.epsilons[k - 1]);
    auto mix = intflow::build_mixture(cfg);
    CHECK(mix.n_components() == 2);
    // Smallest component std is sqrt(0.3) from the correlated covariance.
    CHECK_THAT(cfg.perturbation_scale, WithinRel(0.1 * std::sqrt(0.3), 1e-12));
}

TEST_CASE("config validation names the offending field") {
    auto check_throws = [](const std::string& name, const std::string& body,
                           const std::string& field) {
        auto path = write_config(name, body);
        CHECK_THROWS_MATCHES(intflow::load_config(path.string()), std::invalid_argument,
                             MessageMatches(ContainsSubstring(field)));
    };
    check_throws("eps_desc.json", R"({
      "mixture": {"components": [{"weight": 1.0, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}]},
      "epsilons": [0.1, 0.05]})",
                 "epsilons");
    check_throws("eps_zero.json", R"({
      "mixture": {"components": [{"weight": 1.0, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}]},
      "epsilons": [0.0, 0.05]})",
                 "epsilons");
    check_throws("small_n.json", R"({
      "mixture": {"components": [{"weight": 1.0, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}]},
      "n_samples": 50})",
                 "n_samples");
    check_throws("bad_sigma.json", R"({
      "mixture": {"components": [{"weight": 1.0, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}]},
      "kde_sigma": -0.2})",
                 "kde_sigma");
    check_throws("bad_weights.json", R"({
      "mixture": {"components": [{"weight": 0.7, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}]}})",
                 "mixture");
    check_throws("no_mixture.json", R"({"n_samples": 500})", "mixture");
    check_throws("bad_window.json", R"({
      "mixture": {"components": [{"weight": 1.0, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}]},
      "window": {"x_min": 1.0, "x_max": -1.0, "y_min": 0.0, "y_max": 1.0}})",
                 "window");
    check_throws("bad_shifts.json", R"({
      "mixture": {"components": [{"weight": 1.0, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}]},
      "perturbation_shifts": [[1.0, 0.0], [0.0, 1.0]]})",
                 "perturbation_shifts");
    check_throws("bad_pert.json", R"({
      "mixture": {"components": [{"weight": 1.0, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}]},
      "n_perturbations": 0})",
                 "n_perturbations");
    check_throws("bad_clip.json", R"({
      "mixture": {"components": [{"weight": 1.0, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}]},
      "clip_factor": 0.0})",
                 "clip_factor");
}

TEST_CASE("explicit perturbation shifts are honored") {
    auto path = write_config("shifts.json", R"({
      "mixture": {"components": [{"weight": 1.0, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}]},
      "perturbation_shifts": [[1.0, 0.0]],
      "perturbation_scale": 1.0})");
    auto cfg = intflow::load_config(path.string());
    auto mix = intflow::build_mixture(cfg);
    auto pert = intflow::build_perturbation(cfg, mix, 42);
    REQUIRE(pert.mean_shifts.size() == 1);
    CHECK(pert.mean_shifts[0] == Eigen::Vector2d(1.0, 0.0));
    CHECK(pert.scale == 1.0);
}

TEST_CASE("missing config file is reported") {
    CHECK_THROWS_AS(intflow::load_config("/nonexistent/intflow.json"), std::runtime_error);
}
