#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "fungen/marketdata.hpp"

namespace fungen::cli {

/// Market for one seed: the csv file, or the simulator re-seeded with `seed`.
MarketPath market_for_seed(const RunConfig& cfg, std::uint64_t seed);

/// Worker count for seed fan-out: FUNGEN_THREADS if set, else hardware concurrency.
std::size_t thread_budget(std::size_t jobs);

/// Writes `<run_id>__market.csv` per seed. Returns the process exit code.
int cmd_simulate(const RunConfig& cfg, std::ostream& log);

/// Full report set per seed plus `<config_hash>__aggregate.json`.
int cmd_backtest(const RunConfig& cfg, std::ostream& log);

struct SuiteResult {
    std::string name;
    std::uint64_t seed = 0;
    bool passed = false;
    double worst = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

std::vector<SuiteResult> run_verification(const RunConfig& cfg, std::uint64_t seed);

/// Prints one line per suite and seed; nonzero when any suite fails.
int cmd_verify(const RunConfig& cfg, std::ostream& out);

}  // namespace fungen::cli
