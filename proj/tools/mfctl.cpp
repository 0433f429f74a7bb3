#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "mf/scenario.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::int64_t seed = -1;
    int workers = 0;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "scenario config file")->required();
    cmd->add_option("--seed", flags.seed, "override particles.seed");
    cmd->add_option("--workers", flags.workers, "cap the worker pool (0 = default)");
    cmd->add_option("--out", flags.out_dir, "override output.directory");
}

int run_mode(mf::ScenarioMode mode, const CommonFlags& flags) {
    mf::ScenarioConfig cfg;
    try {
        cfg = mf::load_config(flags.config_path);
        if (cfg.mode != mode)
            throw mf::ConfigError("config declares mode '" + mf::to_string(cfg.mode) +
                                  "' but subcommand is '" + mf::to_string(mode) + "'");
        if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
        if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
        mf::set_max_workers(flags.workers);
        mf::validate_config(cfg);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        const auto res = mf::run_scenario(cfg);
        std::cout << res.summary;
        return res.exit_code;
    } catch (const mf::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        std::error_code ec;
        std::filesystem::create_directories(cfg.out_dir, ec);
        std::ofstream diag(std::filesystem::path(cfg.out_dir) / "error.txt");
        diag << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-field SDE/BSDE toolkit and Pontryagin optimizer"};
    app.require_subcommand(1);

    CommonFlags flags[5];
    const std::pair<const char*, mf::ScenarioMode> modes[5] = {
        {"simulate-sde", mf::ScenarioMode::simulate_sde},
        {"solve-bsde", mf::ScenarioMode::solve_bsde},
        {"optimize", mf::ScenarioMode::optimize},
        {"mollify-report", mf::ScenarioMode::mollify_report},
        {"check", mf::ScenarioMode::check},
    };
    CLI::App* cmds[5];
    for (int i = 0; i < 5; ++i) {
        cmds[i] = app.add_subcommand(modes[i].first);
        add_common(cmds[i], flags[i]);
    }

    CLI11_PARSE(app, argc, argv);

    for (int i = 0; i < 5; ++i)
        if (cmds[i]->parsed()) return run_mode(modes[i].second, flags[i]);
    return 2;
}
