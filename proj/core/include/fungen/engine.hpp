#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fungen/errors.hpp"
#include "fungen/genfun.hpp"
#include "fungen/lambda.hpp"
#include "fungen/marketdata.hpp"

namespace fungen {

enum class GammaRoute { defect, closed_form };
enum class StrategyMode { additive, multiplicative };

std::string to_string(StrategyMode mode);

/// Γ(t_l) on the trading grid; Γ(t_0) = 0.
struct GammaPath {
    std::vector<double> values;
    GammaRoute route = GammaRoute::defect;

    std::size_t days() const noexcept { return values.size(); }
    double terminal() const { return values.empty() ? 0.0 : values.back(); }
};

enum class NormalizationMode { divide, shift_plus_one };

/// G rescaled so that its value at (Λ(0), μ(t̲_0)) is exactly one.
///
/// divide:          𝒢 = (G + c) / (g0 + c),  D𝒢 = DG / (g0 + c)
/// shift_plus_one:  𝒢 = G + 1,               D𝒢 = DG   (g0 + c == 0)
///
/// With c = 0 this is the additive normalization; c > 0 gives the shifted
/// function G^(c) used for multiplicative generation.
struct NormalizedGen {
    GenFunctionPtr base;
    double g0 = 1.0;
    NormalizationMode mode = NormalizationMode::divide;
    double c_shift = 0.0;

    double offset() const noexcept { return mode == NormalizationMode::divide ? c_shift : 1.0; }
    double scale() const noexcept { return mode == NormalizationMode::divide ? g0 + c_shift : 1.0; }

    /// G + offset, the quantity the positivity floor applies to.
    double shifted_value(std::span<const double> lambda, std::span<const double> x) const;
    double value(std::span<const double> lambda, std::span<const double> x) const;
    void gradient(std::span<const double> lambda, std::span<const double> x, std::span<double> out) const;
};

/// Throws DomainError when G(λ0, μ0) + c < 0.
NormalizedGen normalize(GenFunctionPtr g, std::span<const double> lambda0, const WeightVector& mu0,
                        double c = 0.0);

/// Normalizes at day 0 of the path, restricted to the day-0 members.
NormalizedGen normalize_at_start(GenFunctionPtr g, const MarketPath& path, const LambdaPath& lam,
                                 double c = 0.0);

/// Throws ConfigError when the Λ dimension does not fit the function.
void check_lambda_compatible(const GenFunction& g, const LambdaPath& lam, std::size_t asset_count);

/// Γ(t_l) = 𝒢(Λ(0), μ(t̲_0)) - 𝒢(Λ(t_l), μ(t̄_l))
///          + Σ_{k<=l} Σ_i D𝒢_i(Λ(t_k), μ(t̲_k)) (μ_i(t̄_k) - μ_i(t̲_k)).
GammaPath gamma_defect(const NormalizedGen& g, const MarketPath& path, const LambdaPath& lam);

/// Sum of the per-day closed-form increments of the generating function,
/// rescaled like 𝒢. Throws ConfigError when the function has no closed form.
GammaPath gamma_closed(const NormalizedGen& g, const MarketPath& path, const LambdaPath& lam);

/// θ_i = D𝒢_i(λ, μ̲) on the given (member-restricted) weights.
std::vector<double> theta_additive(const NormalizedGen& g, std::span<const double> lambda,
                                   std::span<const double> mu_begin);

/// Σ_{k<l} ΔΓ(t_k) / 𝒢(Λ(t_k), μ(t̲_k)) with ΔΓ(t_k) = Γ(t_k) - Γ(t_{k-1}).
/// Throws StrategyError when G + c drops below the positivity floor.
double multiplicative_exponent(const NormalizedGen& g, const MarketPath& path, const LambdaPath& lam,
                               const GammaPath& gamma_so_far, std::size_t l);

/// θ̃_i = D𝒢_i(λ, μ̲) · exp(exponent).
std::vector<double> theta_multiplicative(const NormalizedGen& g, std::span<const double> lambda,
                                         std::span<const double> mu_begin, double exponent);

struct Conversion {
    std::vector<double> phi;
    double defect = 0.0;  ///< C(t_l) = Σ θ_j μ_j(t̲_l) - V(t̲_l)
};

/// φ_i = θ_i - C(t_l), which makes Σ φ_i μ_i(t̲_l) = V(t̲_l).
Conversion self_financing_convert(std::span<const double> theta, std::span<const double> mu_begin,
                                  double v_begin);

inline constexpr double kPositivityFloor = 1e-10;

struct DayRecord {
    std::vector<double> theta;  ///< full asset dimension, 0 for non-members
    std::vector<double> phi;
    double defect = 0.0;
    double v_begin = 0.0;
    double v_end = 0.0;              ///< Σ φ_j μ_j(t̄_l)
    double v_end_incremental = 0.0;  ///< V(t̲_l) + Σ θ_j (μ_j(t̄_l) - μ_j(t̲_l))
    double g_end = 0.0;              ///< 𝒢(Λ(t_l), μ(t̄_l))
    double gamma_defect = 0.0;
    double gamma_closed = std::numeric_limits<double>::quiet_NaN();
    double exponent = 0.0;           ///< multiplicative exponent used on day l
    bool membership_changed = false;
};

struct StrategyLedger {
    StrategyMode mode = StrategyMode::additive;
    double c_shift = 0.0;
    std::vector<DayRecord> days;

    std::vector<double> wealth_end() const;
    /// max_l |Σ φ_i μ_i(t̲_l) - V(t̲_l)|, recomputed from the stored positions.
    double max_self_financing_residual(const MarketPath& path) const;
    /// max_l |v_end - v_end_incremental|
    double max_form_gap() const;
};

struct BacktestResult {
    StrategyLedger ledger;
    GammaPath gamma_defect;
    std::optional<GammaPath> gamma_closed;
};

/// Raised by run_backtest; carries the ledger up to (excluding) the failing day.
class BacktestFailure : public StrategyError {
public:
    BacktestFailure(const std::string& what, std::size_t day, StrategyLedger partial, bool positivity)
        : StrategyError(what, day), partial_(std::move(partial)), positivity_(positivity) {}
    const StrategyLedger& partial() const noexcept { return partial_; }
    bool positivity() const noexcept { return positivity_; }

private:
    StrategyLedger partial_;
    bool positivity_;
};

/// The daily loop: overnight carry, θ from begin-of-day weights, conversion to
/// a self-financing φ, end-of-day wealth. V(t̲_0) = 1.
BacktestResult run_backtest(const MarketPath& path, const NormalizedGen& g, const LambdaPath& lam,
                            StrategyMode mode);

struct ArbitrageVerdict {
    double threshold = 1.0;
    std::optional<std::size_t> t_star;  ///< first day with Γ > threshold
    double max_gamma = 0.0;
};

/// Single-path scan: threshold 1 (additive) or 1 + epsilon (multiplicative).
ArbitrageVerdict arbitrage_check(const GammaPath& gamma, StrategyMode mode, double epsilon = 0.0);

}  // namespace fungen
