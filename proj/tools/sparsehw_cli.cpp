#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sparsehw/runner.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::int64_t reps = 0;
    bool reps_set = false;
    std::string out_dir;
    int workers = 0;
};

void attach_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "seed override (highest priority)");
    cmd->add_option("--reps", args.reps, "replicate-count override");
    cmd->add_option("--out", args.out_dir, "output directory override");
    cmd->add_option("--workers", args.workers,
                    "worker threads (affects speed only, never results)");
}

sparsehw::CliOverrides to_overrides(const CLI::App* cmd, const CommonArgs& args) {
    sparsehw::CliOverrides ov;
    if (cmd->count("--seed") > 0) ov.seed = args.seed;
    if (cmd->count("--reps") > 0) ov.reps = args.reps;
    if (cmd->count("--out") > 0) ov.out_dir = args.out_dir;
    if (cmd->count("--workers") > 0) ov.workers = args.workers;
    return ov;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse bilinear concentration bounds and cross-covariance testing harness"};
    app.require_subcommand(1);

    const std::vector<std::string> commands = {"tail", "calibrate", "fwer", "norms",
                                               "check-mgf"};
    const std::vector<std::string> descriptions = {
        "empirical tail curve of one estimator entry vs. the theoretical bound",
        "calibrate the tail rate c and the threshold constant C, write constants.json",
        "family-wise error rate and per-entry power at the configured cutoff",
        "norm table of the scenario's coefficient matrices",
        "MGF bound and Hoeffding-tail Monte Carlo checks"};

    std::vector<CommonArgs> args(commands.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        CLI::App* sub = app.add_subcommand(commands[i], descriptions[i]);
        attach_common(sub, args[i]);
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        try {
            const sparsehw::ExperimentConfig cfg =
                sparsehw::parse_config(args[i].config_path, to_overrides(subs[i], args[i]));
            const sparsehw::RunResult result = sparsehw::run_command(cfg, commands[i]);
            std::cout << result.summary;
            return result.pass ? 0 : 1;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
    }
    return 2;
}
