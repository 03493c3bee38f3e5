#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fungen/engine.hpp"
#include "fungen/genfun.hpp"
#include "fungen/lambda.hpp"
#include "fungen/simulate.hpp"

namespace fungen::cli {

struct MarketSource {
    std::optional<std::filesystem::path> csv;
    std::optional<SimConfig> simulator;
    std::optional<DiversityTrend> scenario;  // only with simulator
    ScenarioOptions scenario_options;
};

struct GenSpec {
    std::string name = "entropy";
    std::map<std::string, double> params;
    bool negate = false;

    GenFunctionPtr build() const;
};

enum class ModeSelection { additive, multiplicative, both };

struct VerifySettings {
    std::size_t samples = 1000;
    double route_tolerance = 1e-4;
    bool inject_dg_sign_error = false;
};

struct RunConfig {
    MarketSource market;
    GenSpec genfun;
    LambdaSpec lambda;
    ModeSelection mode = ModeSelection::both;
    double c = 0.0;
    double epsilon = 0.0;
    std::filesystem::path output_dir = "out";
    std::vector<std::uint64_t> seeds{1};
    VerifySettings verify;

    void validate() const;
    bool wants(StrategyMode m) const;
};

/// Parses the JSON config. Relative csv paths resolve against base_dir.
/// Errors are ConfigError with the offending field path.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& file);

/// Sorted-key JSON of everything that influences results (not output_dir or seeds).
std::string canonical_json(const RunConfig& cfg);

/// 12 hex digits of FNV-1a over canonical_json + seed.
std::string make_run_id(const RunConfig& cfg, std::uint64_t seed);
/// Same hash without the seed; names the aggregate summary.
std::string config_hash(const RunConfig& cfg);

}  // namespace fungen::cli
