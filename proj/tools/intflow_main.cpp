#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "intflow/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--seed", args.seed, "override the config seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
    cmd->add_option("--threads", args.threads, "worker threads (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
}

intflow::ExperimentConfig load(const CommonArgs& args) {
    intflow::ExperimentConfig cfg = intflow::load_config(args.config_path);
    if (args.seed_given) cfg.seed = args.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"integrable flow reconstruction experiments"};
    app.require_subcommand(1);

    CommonArgs fig1_args, fig2_args, cont_args;
    CLI::App* fig1 = app.add_subcommand("fig1", "flow visualization and KDE shift diagnostic");
    add_common(fig1, fig1_args);
    CLI::App* fig2 = app.add_subcommand("fig2", "discrepancy sweep over epsilon");
    add_common(fig2, fig2_args);
    CLI::App* cont = app.add_subcommand("continuity", "quadrature continuity residual");
    add_common(cont, cont_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (fig1->parsed()) {
            const auto result = intflow::run_fig1(load(fig1_args), fig1_args.out_dir,
                                                  intflow::resolve_threads(fig1_args.threads));
            std::cout << "fig1: correlation " << result.correlation << ", clipped "
                      << result.clipped_count << ", skipped pairs " << result.skipped_pairs
                      << "\n";
        } else if (fig2->parsed()) {
            const auto rows = intflow::run_fig2(load(fig2_args), fig2_args.out_dir,
                                                intflow::resolve_threads(fig2_args.threads));
            std::cout << "fig2: " << rows.size() << " epsilon values written\n";
        } else {
            const double rel = intflow::run_continuity(
                load(cont_args), cont_args.out_dir, intflow::resolve_threads(cont_args.threads));
            std::cout << "continuity: relative_l2 " << rel << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
