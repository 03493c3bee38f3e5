#include "fungen/marketdata.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "fungen/errors.hpp"

namespace fungen {

namespace {

constexpr double kSimplexTol = 1e-12;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

bool valid_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    int y = 0;
    unsigned m = 0, d = 0;
    auto ok = [](std::string_view part, auto& v) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        return ec == std::errc{} && p == part.data() + part.size();
    };
    if (!ok(s.substr(0, 4), y) || !ok(s.substr(5, 2), m) || !ok(s.substr(8, 2), d)) return false;
    return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                       std::chrono::day{d}}
        .ok();
}

std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<bool> parse_flag(std::string_view s) {
    if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
    if (s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
    return std::nullopt;
}

struct Row {
    std::size_t line;
    double mv;
    double ri;
    bool member;
};

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

WeightVector WeightVector::from_values(std::vector<double> values) {
    double sum = 0.0;
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("weight outside [0, 1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) throw ValidationError("weights do not sum to 1");
    return WeightVector(std::move(values));
}

WeightVector WeightVector::normalize(std::span<const double> values) {
    double total = 0.0;
    for (double v : values) total += v;
    if (!(total > 0.0)) throw ValidationError("cannot normalize a non-positive total");
    std::vector<double> w(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) w[i] = values[i] / total;
    return WeightVector(std::move(w));
}

bool WeightVector::interior() const noexcept {
    return std::all_of(w_.begin(), w_.end(), [](double v) { return v > 0.0; });
}

std::vector<std::size_t> MarketPath::member_indices(std::size_t l) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < asset_count(); ++i)
        if (is_member(l, i)) idx.push_back(i);
    return idx;
}

bool MarketPath::membership_changed(std::size_t l) const {
    if (l == 0) return false;
    auto prev = membership.row(l - 1);
    auto cur = membership.row(l);
    return !std::equal(prev.begin(), prev.end(), cur.begin());
}

void MarketPath::validate() const {
    const std::size_t n = days();
    const std::size_t d = asset_count();
    if (d < 2) throw ValidationError("market needs at least 2 assets");
    if (n == 0) throw ValidationError("market has no trading days");
    if (mv_begin.rows() != n || mv_begin.cols() != d || tr.rows() != n || tr.cols() != d ||
        membership.rows() != n || membership.cols() != d)
        throw ValidationError("market matrices do not match dates x assets");
    for (std::size_t l = 0; l < n; ++l) {
        std::size_t members = 0;
        for (std::size_t i = 0; i < d; ++i) {
            if (!is_member(l, i)) continue;
            ++members;
            const double mv = mv_begin(l, i);
            const double f = tr(l, i);
            if (!(mv > 0.0) || !std::isfinite(mv))
                throw ValidationError("non-positive market value for member " + assets[i] +
                                      " on " + dates[l]);
            if (!(f > 0.0) || !std::isfinite(f))
                throw ValidationError("non-positive total-return factor for member " + assets[i] +
                                      " on " + dates[l]);
        }
        if (members < 2) throw ValidationError("fewer than 2 member assets on " + dates[l]);
    }
}

double total_begin(const MarketPath& path, std::size_t l) {
    double total = 0.0;
    for (std::size_t i = 0; i < path.asset_count(); ++i)
        if (path.is_member(l, i)) total += path.mv_begin(l, i);
    return total;
}

WeightVector begin_weights(const MarketPath& path, std::size_t l) {
    std::vector<double> mv(path.asset_count(), 0.0);
    for (std::size_t i = 0; i < mv.size(); ++i)
        if (path.is_member(l, i)) mv[i] = path.mv_begin(l, i);
    return WeightVector::normalize(mv);
}

DayEnd end_of_day(const MarketPath& path, std::size_t l) {
    DayEnd out;
    out.mv.assign(path.asset_count(), 0.0);
    for (std::size_t i = 0; i < out.mv.size(); ++i) {
        if (!path.is_member(l, i)) continue;
        out.mv[i] = path.mv_begin(l, i) * path.tr(l, i);
        out.total += out.mv[i];
    }
    out.weights = WeightVector::normalize(out.mv);
    return out;
}

MarketPath parse_market_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw ParseError("empty input, header expected", 1);
    ++line_no;
    std::string_view header = line;
    if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
    {
        auto cols = split(header, ',');
        const std::vector<std::string_view> expected{"date", "asset_id", "market_value",
                                                     "return_index", "member"};
        if (cols != expected)
            throw ParseError("header must be date,asset_id,market_value,return_index,member",
                             line_no);
    }

    std::map<std::string, std::map<std::string, Row>> by_asset;  // asset -> date -> row
    std::vector<std::string> asset_order;
    std::map<std::string, std::size_t> date_set;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto f = split(line, ',');
        if (f.size() != 5) throw ParseError("expected 5 fields, got " + std::to_string(f.size()), line_no);
        if (!valid_iso_date(f[0])) throw ParseError("invalid ISO-8601 date '" + std::string(f[0]) + "'", line_no);
        if (f[1].empty()) throw ParseError("empty asset_id", line_no);
        auto member = parse_flag(f[4]);
        if (!member) throw ParseError("invalid member flag '" + std::string(f[4]) + "'", line_no);

        auto mv = parse_number(f[2]);
        auto ri = parse_number(f[3]);
        if (*member) {
            if (!mv || !ri) throw ParseError("non-numeric value for a member row", line_no);
        } else {
            if ((!f[2].empty() && !mv) || (!f[3].empty() && !ri))
                throw ParseError("non-numeric value", line_no);
        }
        Row row{line_no, mv.value_or(0.0), ri.value_or(0.0), *member};
        if (row.member && !(row.mv > 0.0 && std::isfinite(row.mv)))
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": member market_value must be positive");
        if (row.member && !(row.ri > 0.0 && std::isfinite(row.ri)))
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": member return_index must be positive");

        std::string asset(f[1]);
        auto [it, inserted] = by_asset.try_emplace(asset);
        if (inserted) asset_order.push_back(asset);
        if (!it->second.emplace(std::string(f[0]), row).second)
            throw ParseError("duplicate row for " + asset + " on " + std::string(f[0]), line_no);
        date_set.emplace(std::string(f[0]), 0);
    }

    MarketPath path;
    for (auto& [date, idx] : date_set) {
        idx = path.dates.size();
        path.dates.push_back(date);
    }
    path.assets = asset_order;
    const std::size_t n = path.dates.size();
    const std::size_t d = path.assets.size();
    path.mv_begin = Matrix(n, d, 0.0);
    path.tr = Matrix(n, d, 1.0);
    path.membership = Mask(n, d, 0);

    for (std::size_t i = 0; i < d; ++i) {
        const auto& rows = by_asset.at(path.assets[i]);
        const std::size_t first = date_set.at(rows.begin()->first);
        const std::size_t last = date_set.at(rows.rbegin()->first);
        for (std::size_t l = first; l <= last; ++l) {
            auto it = rows.find(path.dates[l]);
            if (it == rows.end())
                throw ValidationError("missing row for " + path.assets[i] + " on " + path.dates[l]);
            const Row& r = it->second;
            if (!r.member) continue;
            path.membership(l, i) = 1;
            path.mv_begin(l, i) = r.mv;
            if (l == first) continue;  // factor 1 on the asset's first row
            const Row& prev = rows.at(path.dates[l - 1]);
            if (!(prev.ri > 0.0 && std::isfinite(prev.ri)))
                throw ValidationError("line " + std::to_string(r.line) + ": " + path.assets[i] +
                                      " has no positive return index on the previous day");
            path.tr(l, i) = r.ri / prev.ri;
        }
    }
    path.validate();
    return path;
}

MarketPath load_market_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot open " + file.string());
    return parse_market_csv(in);
}

void write_market_csv(const MarketPath& path, std::ostream& out) {
    out << "date,asset_id,market_value,return_index,member\n";
    std::vector<double> level(path.asset_count(), 1.0);
    for (std::size_t l = 0; l < path.days(); ++l) {
        for (std::size_t i = 0; i < path.asset_count(); ++i) {
            if (l > 0) level[i] *= path.tr(l, i);
            const bool member = path.is_member(l, i);
            out << path.dates[l] << ',' << path.assets[i] << ','
                << format_double(member ? path.mv_begin(l, i) : 0.0) << ','
                << format_double(level[i]) << ',' << (member ? 1 : 0) << '\n';
        }
    }
}

void save_market_csv(const MarketPath& path, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw InputError("cannot write " + file.string());
    write_market_csv(path, out);
    if (!out) throw InputError("write failed for " + file.string());
}

}  // namespace fungen
