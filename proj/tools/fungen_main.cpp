#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "fungen/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Functionally generated portfolios: simulate, backtest, verify"};
    app.require_subcommand(1);

    std::string config_file;
    std::string out_dir;
    std::vector<std::uint64_t> seeds;
    bool inject = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        sub->add_option("--seed", seeds, "seed(s) (override seeds)");
    };
    auto* sim = app.add_subcommand("simulate", "write simulated market CSVs");
    auto* bt = app.add_subcommand("backtest", "run strategies and write reports");
    auto* ver = app.add_subcommand("verify", "run the invariant suites");
    common(sim);
    common(bt);
    common(ver);
    ver->add_flag("--inject-dg-sign-error", inject, "flip the sign of DG in the traded strategy (mutation check)");

    CLI11_PARSE(app, argc, argv);

    try {
        fungen::cli::RunConfig cfg = fungen::cli::load_run_config(config_file);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (!seeds.empty()) cfg.seeds = seeds;
        if (inject) cfg.verify.inject_dg_sign_error = true;

        if (sim->parsed()) return fungen::cli::cmd_simulate(cfg, std::cerr);
        if (bt->parsed()) return fungen::cli::cmd_backtest(cfg, std::cerr);
        return fungen::cli::cmd_verify(cfg, std::cout);
    } catch (const fungen::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
