#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fungen/marketdata.hpp"

namespace fungen {

enum class LyapunovHint { always, if_lambda_nonincreasing, never_in_general };

struct GenDomain {
    bool open_simplex = false;      ///< x must be strictly positive
    std::string lambda_constraint;  ///< human-readable, e.g. "lambda > 0"
};

/// Axis-aligned box the condition spot-checks draw λ from.
struct LambdaBox {
    std::size_t dim = 1;
    double lo = 0.0;
    double hi = 1.0;
};

struct GenEval {
    double value = 0.0;
    std::vector<double> gradient;
};

/// A portfolio-generating function G(λ, x) together with a gradient-like map DG.
///
/// `lambda` is either a single component or one component per asset (see
/// lambda_dim). `x` is a point of the simplex restricted to member assets.
class GenFunction {
public:
    virtual ~GenFunction() = default;

    virtual std::string name() const = 0;
    virtual GenDomain domain() const = 0;
    virtual LyapunovHint lyapunov_hint() const = 0;

    /// Number of λ components the function expects for d assets (1 or d).
    virtual std::size_t lambda_dim(std::size_t d) const { (void)d; return 1; }
    /// Whether a scalar λ may be broadcast to every asset.
    virtual bool broadcasts_scalar_lambda() const { return false; }

    /// Throws DomainError when (λ, x) is outside the declared domain.
    virtual void check_domain(std::span<const double> lambda, std::span<const double> x) const = 0;

    virtual double value(std::span<const double> lambda, std::span<const double> x) const = 0;
    virtual void gradient(std::span<const double> lambda, std::span<const double> x,
                          std::span<double> out) const = 0;

    /// One day of the Itô decomposition of Γ with left-point integrands:
    /// the dΛ term at (λ_prev, x_begin) over λ_cur - λ_prev, and the
    /// second-order term at (λ_cur, x_begin) against products of intraday
    /// increments x_end - x_begin. nullopt when no closed form is registered.
    virtual std::optional<double> gamma_increment(std::span<const double> lambda_prev,
                                                  std::span<const double> lambda_cur,
                                                  std::span<const double> x_begin,
                                                  std::span<const double> x_end) const {
        (void)lambda_prev, (void)lambda_cur, (void)x_begin, (void)x_end;
        return std::nullopt;
    }

    /// True for functions composed with the rank operator; their closed-form
    /// Γ omits the local-time terms of the ranked dynamics.
    virtual bool rank_based() const { return false; }

    virtual LambdaBox lambda_box(std::size_t d) const = 0;

    /// Checked evaluation of G and DG.
    GenEval eval(std::span<const double> lambda, std::span<const double> x) const;
};

using GenFunctionPtr = std::shared_ptr<const GenFunction>;

/// G(λ, x) = λ Σ x_i log(1/x_i), λ > 0, x in the open simplex.
class EntropyFunction final : public GenFunction {
public:
    std::string name() const override { return "entropy"; }
    GenDomain domain() const override { return {true, "lambda > 0"}; }
    LyapunovHint lyapunov_hint() const override { return LyapunovHint::if_lambda_nonincreasing; }
    void check_domain(std::span<const double> lambda, std::span<const double> x) const override;
    double value(std::span<const double> lambda, std::span<const double> x) const override;
    void gradient(std::span<const double> lambda, std::span<const double> x,
                  std::span<double> out) const override;
    std::optional<double> gamma_increment(std::span<const double> lambda_prev,
                                          std::span<const double> lambda_cur,
                                          std::span<const double> x_begin,
                                          std::span<const double> x_end) const override;
    LambdaBox lambda_box(std::size_t) const override { return {1, 0.1, 3.0}; }
};

/// G(λ, x) = (Σ (α x_i + (1-α) λ_i)^p)^{1/p}.
class PowerDiversityFunction final : public GenFunction {
public:
    PowerDiversityFunction(double alpha, double p);

    double alpha() const noexcept { return alpha_; }
    double p() const noexcept { return p_; }

    std::string name() const override { return "power_diversity"; }
    GenDomain domain() const override { return {false, "alpha*x_i + (1-alpha)*lambda_i > 0"}; }
    LyapunovHint lyapunov_hint() const override { return LyapunovHint::never_in_general; }
    std::size_t lambda_dim(std::size_t d) const override { return d; }
    bool broadcasts_scalar_lambda() const override { return true; }
    void check_domain(std::span<const double> lambda, std::span<const double> x) const override;
    double value(std::span<const double> lambda, std::span<const double> x) const override;
    void gradient(std::span<const double> lambda, std::span<const double> x,
                  std::span<double> out) const override;
    std::optional<double> gamma_increment(std::span<const double> lambda_prev,
                                          std::span<const double> lambda_cur,
                                          std::span<const double> x_begin,
                                          std::span<const double> x_end) const override;
    LambdaBox lambda_box(std::size_t d) const override;

private:
    double blended(std::span<const double> lambda, std::span<const double> x, std::size_t i) const;
    double alpha_;
    double p_;
};

/// G(λ, x) = λ - Σ x_i².
class QuadraticFunction final : public GenFunction {
public:
    std::string name() const override { return "quadratic"; }
    GenDomain domain() const override { return {false, "lambda real"}; }
    LyapunovHint lyapunov_hint() const override { return LyapunovHint::never_in_general; }
    void check_domain(std::span<const double> lambda, std::span<const double> x) const override;
    double value(std::span<const double> lambda, std::span<const double> x) const override;
    void gradient(std::span<const double> lambda, std::span<const double> x,
                  std::span<double> out) const override;
    std::optional<double> gamma_increment(std::span<const double> lambda_prev,
                                          std::span<const double> lambda_cur,
                                          std::span<const double> x_begin,
                                          std::span<const double> x_end) const override;
    LambdaBox lambda_box(std::size_t) const override { return {1, -1.0, 1.0}; }
};

/// Rank-composed hybrid: generalized entropy on the top d1 ranks, a quadratic
/// penalty on ranks d1+1..d2, with λ = ξ_hi ∧ (ξ_lo ∨ λ').
class RankedHybridFunction final : public GenFunction {
public:
    RankedHybridFunction(std::size_t d1, std::size_t d2, double xi_lo, double xi_hi);

    std::string name() const override { return "ranked_hybrid"; }
    GenDomain domain() const override { return {true, "xi_lo <= clip(lambda') <= xi_hi"}; }
    LyapunovHint lyapunov_hint() const override { return LyapunovHint::never_in_general; }
    void check_domain(std::span<const double> lambda, std::span<const double> x) const override;
    double value(std::span<const double> lambda, std::span<const double> x) const override;
    void gradient(std::span<const double> lambda, std::span<const double> x,
                  std::span<double> out) const override;
    std::optional<double> gamma_increment(std::span<const double> lambda_prev,
                                          std::span<const double> lambda_cur,
                                          std::span<const double> x_begin,
                                          std::span<const double> x_end) const override;
    bool rank_based() const override { return true; }
    LambdaBox lambda_box(std::size_t) const override { return {1, 0.0, 2.0 * xi_hi_}; }

    double clip(double lambda_raw) const noexcept;

private:
    std::size_t d1_;
    std::size_t d2_;
    double xi_lo_;
    double xi_hi_;
};

/// G ≡ 1 with DG ≡ 1: generates the market portfolio.
class MarketFunction final : public GenFunction {
public:
    std::string name() const override { return "market"; }
    GenDomain domain() const override { return {false, "any"}; }
    LyapunovHint lyapunov_hint() const override { return LyapunovHint::always; }
    void check_domain(std::span<const double>, std::span<const double>) const override {}
    double value(std::span<const double>, std::span<const double>) const override { return 1.0; }
    void gradient(std::span<const double>, std::span<const double>,
                  std::span<double> out) const override;
    std::optional<double> gamma_increment(std::span<const double>, std::span<const double>,
                                          std::span<const double>,
                                          std::span<const double>) const override {
        return 0.0;
    }
    LambdaBox lambda_box(std::size_t) const override { return {1, 0.0, 1.0}; }
};

/// -G with -DG; Γ changes sign.
GenFunctionPtr negated(GenFunctionPtr inner);

/// Test hook: same G, DG with the sign flipped. Breaks the strategy while
/// leaving G intact, so verification suites must catch it.
GenFunctionPtr with_flipped_gradient(GenFunctionPtr inner);

/// Catalog lookup by name (`entropy`, `power_diversity`, `quadratic`,
/// `ranked_hybrid`, `market`). Unknown names or bad parameters throw
/// ConfigError. Parameters: alpha, p (power_diversity); d1, d2, xi_lo, xi_hi
/// (ranked_hybrid).
GenFunctionPtr make_genfun(const std::string& name, const std::map<std::string, double>& params = {});

GenEval entropy(double lambda, const WeightVector& x);
GenEval power_diversity(std::span<const double> lambda, const WeightVector& x, double alpha, double p);
GenEval quadratic(double lambda, const WeightVector& x);
GenEval ranked_hybrid(double lambda_raw, const WeightVector& x, std::size_t d1, std::size_t d2,
                      double xi_lo, double xi_hi);

struct RankedWeights {
    std::vector<double> sorted;      ///< descending
    std::vector<std::size_t> rank;   ///< rank[i]: 0-based rank of asset i
    std::vector<std::size_t> order;  ///< order[r]: asset holding rank r
    std::vector<std::size_t> counts; ///< counts[r] = N_r = #{i : x_i == sorted[r]}
};

/// Descending sort; equal values keep ascending original index.
RankedWeights rank_weights(std::span<const double> x);

struct ConcavityWitness {
    std::vector<double> lambda;
    std::vector<double> x;
    std::vector<double> y;
    double g_mid = 0.0;      ///< G(λ, (x+y)/2)
    double g_average = 0.0;  ///< (G(λ,x) + G(λ,y)) / 2
};

struct ConditionReport {
    std::size_t samples = 0;
    std::size_t dimension = 0;
    double lipschitz_estimate = 0.0;  ///< max |ΔG| / |Δλ| over sampled pairs
    bool lipschitz_ok = true;         ///< estimate finite
    std::size_t concavity_violations = 0;
    double worst_concavity_gap = 0.0; ///< min over samples of G(mid) - average
    std::optional<ConcavityWitness> witness;
    bool local_time_omitted = false;

    bool concavity_ok() const noexcept { return concavity_violations == 0; }
    bool passed() const noexcept { return lipschitz_ok && concavity_ok(); }
};

/// Monte-Carlo falsification of the regularity conditions: λ-Lipschitz
/// continuity via difference quotients and midpoint concavity in x. A pass
/// is evidence only.
ConditionReport spot_check_conditions(const GenFunction& g, std::size_t sample_count,
                                      std::uint64_t seed, std::size_t d = 5);

}  // namespace fungen
