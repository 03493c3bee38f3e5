#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fungen/grid.hpp"
#include "fungen/marketdata.hpp"

namespace fungen {

/// Synthetic market: correlated geometric random walks in market value.
///
/// Per-asset vectors may be left empty, in which case defaults apply: drift 0,
/// vol 0.01, div_yield 0, init_mv 1. An empty corr means identity.
struct SimConfig {
    std::size_t d = 2;
    std::size_t n_days = 250;
    std::uint64_t seed = 1;
    std::vector<double> drift;      ///< daily log-drift
    std::vector<double> vol;        ///< daily volatility
    Matrix corr;                    ///< d x d correlation
    std::vector<double> div_yield;  ///< daily dividend yield, enters TR only
    std::vector<double> init_mv;
    std::string start_date = "2000-01-03";

    /// Throws ConfigError (including for a correlation matrix that is not PSD).
    void validate() const;

    /// d assets with log-spaced initial values spanning a factor of 20 and 1%
    /// daily volatility.
    static SimConfig defaults(std::size_t d, std::size_t n_days, std::uint64_t seed);
};

/// Deterministic in (cfg, seed). Day 0 carries TR = 1; afterwards
/// TR_i(t_l) = (MV_i(t̄_l) / MV_i(t̲_l)) (1 + div_yield_i) and the next day
/// opens at MV_i(t̲_{l+1}) = MV_i(t̲_l) · TR_i(t_l) / (1 + div_yield_i).
MarketPath simulate_market(const SimConfig& cfg);

enum class DiversityTrend { increasing, decreasing, flat };

std::string to_string(DiversityTrend trend);
DiversityTrend parse_diversity_trend(const std::string& name);

struct ScenarioOptions {
    double strength = 0.002;       ///< daily pull of log weights towards (away from) their mean
    std::size_t max_attempts = 20;
};

/// Adds a size-dependent drift (large caps dragged for `increasing`, boosted
/// for `decreasing`) and retries with fresh seeds until the realized E(·)
/// has the requested sign at the last day. Throws SimulationError when the
/// retry budget runs out.
MarketPath diversification_scenario(DiversityTrend trend, const SimConfig& cfg,
                                    const ScenarioOptions& options = {});

}  // namespace fungen
