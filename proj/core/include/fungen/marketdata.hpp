#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fungen/grid.hpp"

namespace fungen {

/// Market weights on the closed simplex: non-negative, summing to one.
class WeightVector {
public:
    WeightVector() = default;

    /// Validates the simplex constraints (sum within 1e-12, each entry in [0, 1]).
    static WeightVector from_values(std::vector<double> values);

    /// Normalizes positive values (non-members pass 0) into weights.
    static WeightVector normalize(std::span<const double> values);

    std::size_t size() const noexcept { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    std::span<const double> values() const noexcept { return w_; }
    const std::vector<double>& vec() const noexcept { return w_; }

    /// True when every component is strictly positive.
    bool interior() const noexcept;

    friend bool operator==(const WeightVector&, const WeightVector&) = default;

private:
    explicit WeightVector(std::vector<double> w) : w_(std::move(w)) {}
    std::vector<double> w_;
};

/// Full discrete market history on a trading-day grid.
///
/// Row l of `mv_begin` holds the market values at the start of day l, row l of
/// `tr` the total-return factor over day l. Non-members carry mv = 0 and
/// tr = 1 and are excluded from every sum.
struct MarketPath {
    std::vector<std::string> dates;
    std::vector<std::string> assets;
    Matrix mv_begin;
    Matrix tr;
    Mask membership;

    std::size_t days() const noexcept { return dates.size(); }
    std::size_t asset_count() const noexcept { return assets.size(); }
    bool is_member(std::size_t l, std::size_t i) const { return membership(l, i) != 0; }
    std::vector<std::size_t> member_indices(std::size_t l) const;
    /// Membership on day l differs from day l-1 (false on day 0).
    bool membership_changed(std::size_t l) const;

    /// Throws ValidationError if any structural invariant is broken.
    void validate() const;

    friend bool operator==(const MarketPath&, const MarketPath&) = default;
};

struct DayEnd {
    std::vector<double> mv;  ///< MV(t̄_l) = MV(t̲_l) * TR(t_l); 0 for non-members
    double total = 0.0;      ///< Σ(t̄_l)
    WeightVector weights;    ///< μ(t̄_l)
};

/// Total begin-of-day capitalization Σ(t̲_l) over members.
double total_begin(const MarketPath& path, std::size_t l);

/// μ(t̲_l); non-members get weight 0.
WeightVector begin_weights(const MarketPath& path, std::size_t l);

/// End-of-day implied market values and weights μ(t̄_l).
DayEnd end_of_day(const MarketPath& path, std::size_t l);

/// Reads `date,asset_id,market_value,return_index,member` rows.
///
/// Return-index levels are converted to daily factors RI(t_l)/RI(t_{l-1});
/// the first day of the file and the first row of each asset get factor 1.
MarketPath parse_market_csv(std::istream& in);
MarketPath load_market_csv(const std::filesystem::path& file);

/// Inverse of parse_market_csv. Return-index levels start at 1 on each
/// asset's first row and compound the stored factors.
void write_market_csv(const MarketPath& path, std::ostream& out);
void save_market_csv(const MarketPath& path, const std::filesystem::path& file);

}  // namespace fungen
