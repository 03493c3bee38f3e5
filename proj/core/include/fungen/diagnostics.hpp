#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fungen/engine.hpp"
#include "fungen/marketdata.hpp"

namespace fungen {

/// D(t_l) = Σ_j -log μ_j(t̲_l) (μ_j(t̄_l) - μ_j(t̲_l)). Positive when weight
/// flows from large to small begin-of-day weights. Entries with zero begin
/// weight raise DomainError.
double direction_indicator(std::span<const double> mu_begin, std::span<const double> mu_end);

/// Running sum of D.
std::vector<double> cumulative_e(std::span<const double> d_series);

/// Σ_i min(x_i, cap).
double diversity_capped(std::span<const double> x, double cap);

struct DiagnosticsSeries {
    std::vector<double> d_indicator;
    std::vector<double> e_cumulative;
    std::vector<double> diversity_capped;  ///< on end-of-day weights
    double cap = 0.0;
    std::vector<std::size_t> flagged_days;  ///< membership changed; D over surviving members
};

/// cap defaults to 1/d (0.002 for d = 500).
DiagnosticsSeries compute_diagnostics(const MarketPath& path, std::optional<double> cap = std::nullopt);

struct ReportInput {
    std::string run_id;
    const MarketPath* path = nullptr;
    std::optional<BacktestResult> additive;
    std::optional<BacktestResult> multiplicative;
    std::optional<ArbitrageVerdict> additive_verdict;
    std::optional<ArbitrageVerdict> multiplicative_verdict;
    DiagnosticsSeries diagnostics;
    bool rank_based = false;
    std::string config_json = "{}";                ///< canonical run configuration
    std::map<std::string, std::string> metadata;  ///< non-deterministic fields (timestamps)
};

/// Writes `<run_id>__{wealth,gamma,D,E,diversity}.csv`, one ledger CSV per
/// mode and `<run_id>__summary.json` into `dir`. Each file is written to a
/// temporary name and renamed. Returns the written paths.
std::vector<std::filesystem::path> assemble_report(const ReportInput& input,
                                                   const std::filesystem::path& dir);

/// Maximum relative drawdown max_l (peak_l - V_l) / peak_l.
double max_drawdown(std::span<const double> wealth);

/// Parsed plot-data CSV: header plus columns as text.
struct SeriesTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Numeric column by name; throws InputError when absent or non-numeric.
    std::vector<double> column(const std::string& name) const;
};

SeriesTable read_series_csv(const std::filesystem::path& file);

}  // namespace fungen
