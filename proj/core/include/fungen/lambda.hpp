#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fungen/grid.hpp"
#include "fungen/marketdata.hpp"

namespace fungen {

enum class LambdaKind {
    constant,           ///< Λ ≡ value
    exp_deterministic,  ///< Λ(t_l) = exp(rate · l)
    exp_qv,             ///< Λ(t_l) = exp(scale · Σ_j QV_j(t_l))
    qv_linear,          ///< Λ(t_l) = offset + gamma · Σ_j QV_j(t_l)
    moving_average,     ///< Λ_i(t_l) = mean of the last `window` begin-of-day weights
    clip,               ///< Λ = xi_hi ∧ (xi_lo ∨ inner)
};

std::string to_string(LambdaKind kind);
LambdaKind parse_lambda_kind(const std::string& name);

enum class Monotonicity { none, constant, nondecreasing, nonincreasing };

struct LambdaSpec {
    LambdaKind kind = LambdaKind::constant;
    double value = 1.0;
    double rate = 1e-4;
    double scale = 100.0;
    double gamma = 0.0;
    double offset = 0.0;
    std::size_t window = 250;
    double xi_lo = 0.0;
    double xi_hi = 0.0;
    std::shared_ptr<const LambdaSpec> inner;

    static LambdaSpec constant(double value);
    static LambdaSpec exp_deterministic(double rate);
    static LambdaSpec exp_qv(double scale);
    static LambdaSpec qv_linear(double gamma, double offset = 0.0);
    static LambdaSpec moving_average(std::size_t window);
    static LambdaSpec clipped(LambdaSpec inner, double xi_lo, double xi_hi);

    /// Throws ConfigError on invalid parameters.
    void validate() const;
    std::string describe() const;
};

/// Λ sampled on the trading grid; row l holds Λ(t_l).
struct LambdaPath {
    Matrix values;
    std::string kind;
    Monotonicity monotone = Monotonicity::none;
    std::optional<double> fv_bound;

    std::size_t days() const noexcept { return values.rows(); }
    std::size_t dim() const noexcept { return values.cols(); }
    std::span<const double> at(std::size_t l) const { return values.row(l); }
    /// Σ_l |Λ(t_l) - Λ(t_{l-1})| summed over components.
    double total_variation() const;
};

/// Cumulative realized quadratic variation of each market weight.
struct QVPath {
    Matrix values;

    std::size_t days() const noexcept { return values.rows(); }
    /// Σ_j QV_j(t_l).
    double total(std::size_t l) const;
};

/// QV_i(t_l) = Σ_{k <= l} (μ_i(t̄_k) - μ_i(t̲_k))².
QVPath realized_qv(std::span<const WeightVector> begin, std::span<const WeightVector> end);
QVPath realized_qv(const MarketPath& path);

LambdaPath build_lambda(const LambdaSpec& spec, const MarketPath& path);

}  // namespace fungen
