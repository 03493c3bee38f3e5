#include "fungen/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fungen/errors.hpp"

namespace fungen {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes to `<file>.tmp` and renames over the target.
void write_atomically(const fs::path& file, const std::string& contents) {
    fs::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out << contents;
        if (!out) throw InputError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, file, ec);
    if (ec) throw InputError("cannot rename " + tmp.string() + " to " + file.string() + ": " + ec.message());
}

struct Column {
    std::string name;
    std::vector<double> values;
};

std::string series_csv(const MarketPath& path, const std::vector<Column>& cols) {
    std::ostringstream os;
    os << "day,date";
    for (const auto& c : cols) os << ',' << c.name;
    os << '\n';
    for (std::size_t l = 0; l < path.days(); ++l) {
        os << l << ',' << path.dates[l];
        for (const auto& c : cols) os << ',' << (l < c.values.size() ? num(c.values[l]) : "nan");
        os << '\n';
    }
    return os.str();
}

std::string ledger_csv(const MarketPath& path, const BacktestResult& r) {
    std::ostringstream os;
    os << "day";
    for (const auto& a : path.assets) os << ",theta_" << a;
    for (const auto& a : path.assets) os << ",phi_" << a;
    os << ",C,v_begin,v_end,G,Gamma_defect,Gamma_closed\n";
    for (std::size_t l = 0; l < r.ledger.days.size(); ++l) {
        const DayRecord& d = r.ledger.days[l];
        os << l;
        for (double t : d.theta) os << ',' << num(t);
        for (double p : d.phi) os << ',' << num(p);
        os << ',' << num(d.defect) << ',' << num(d.v_begin) << ',' << num(d.v_end) << ','
           << num(d.g_end) << ',' << num(d.gamma_defect) << ',' << num(d.gamma_closed) << '\n';
    }
    return os.str();
}

ordered_json verdict_json(const std::optional<ArbitrageVerdict>& v) {
    if (!v) return nullptr;
    ordered_json j;
    j["threshold"] = v->threshold;
    j["t_star"] = v->t_star ? ordered_json(*v->t_star) : ordered_json(nullptr);
    j["max_gamma"] = v->max_gamma;
    return j;
}

ordered_json finite_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

}  // namespace

double direction_indicator(std::span<const double> mu_begin, std::span<const double> mu_end) {
    if (mu_begin.size() != mu_end.size()) throw InputError("direction_indicator: length mismatch");
    double d = 0.0;
    for (std::size_t j = 0; j < mu_begin.size(); ++j) {
        if (!(mu_begin[j] > 0.0))
            throw DomainError("direction_indicator: zero begin-of-day weight at index " + std::to_string(j));
        d -= std::log(mu_begin[j]) * (mu_end[j] - mu_begin[j]);
    }
    return d;
}

std::vector<double> cumulative_e(std::span<const double> d_series) {
    std::vector<double> e(d_series.size());
    double acc = 0.0;
    for (std::size_t l = 0; l < d_series.size(); ++l) e[l] = (acc += d_series[l]);
    return e;
}

double diversity_capped(std::span<const double> x, double cap) {
    if (!(cap > 0.0)) throw ConfigError("diversity_capped: cap must be > 0");
    double s = 0.0;
    for (double v : x) s += std::min(v, cap);
    return s;
}

DiagnosticsSeries compute_diagnostics(const MarketPath& path, std::optional<double> cap) {
    DiagnosticsSeries out;
    out.cap = cap.value_or(1.0 / static_cast<double>(path.asset_count()));
    const std::size_t n = path.days();
    out.d_indicator.resize(n);
    out.diversity_capped.resize(n);
    std::vector<double> b, e;
    for (std::size_t l = 0; l < n; ++l) {
        const WeightVector wb = begin_weights(path, l);
        const DayEnd end = end_of_day(path, l);
        b.clear();
        e.clear();
        for (std::size_t i : path.member_indices(l)) {
            b.push_back(wb[i]);
            e.push_back(end.weights[i]);
        }
        out.d_indicator[l] = direction_indicator(b, e);
        out.diversity_capped[l] = diversity_capped(e, out.cap);
        if (path.membership_changed(l)) out.flagged_days.push_back(l);
    }
    out.e_cumulative = cumulative_e(out.d_indicator);
    return out;
}

double max_drawdown(std::span<const double> wealth) {
    double peak = -std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (double v : wealth) {
        peak = std::max(peak, v);
        if (peak > 0.0) worst = std::max(worst, (peak - v) / peak);
    }
    return worst;
}

std::vector<fs::path> assemble_report(const ReportInput& in, const fs::path& dir) {
    if (!in.path) throw InputError("assemble_report: no market path");
    const MarketPath& path = *in.path;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());

    std::vector<fs::path> written;
    auto emit = [&](const std::string& suffix, const std::string& contents) {
        const fs::path file = dir / (in.run_id + "__" + suffix);
        write_atomically(file, contents);
        written.push_back(file);
    };

    std::vector<Column> wealth;
    if (in.additive) wealth.push_back({"v_phi", in.additive->ledger.wealth_end()});
    if (in.multiplicative) wealth.push_back({"v_psi", in.multiplicative->ledger.wealth_end()});
    emit("wealth.csv", series_csv(path, wealth));

    const BacktestResult* primary = in.additive ? &*in.additive : in.multiplicative ? &*in.multiplicative : nullptr;
    std::vector<Column> gamma;
    if (primary) {
        gamma.push_back({"gamma_defect", primary->gamma_defect.values});
        if (primary->gamma_closed) gamma.push_back({"gamma_closed", primary->gamma_closed->values});
    }
    emit("gamma.csv", series_csv(path, gamma));
    emit("D.csv", series_csv(path, {{"D", in.diagnostics.d_indicator}}));
    emit("E.csv", series_csv(path, {{"E", in.diagnostics.e_cumulative}}));
    emit("diversity.csv", series_csv(path, {{"diversity", in.diagnostics.diversity_capped}}));
    if (in.additive) emit("ledger_additive.csv", ledger_csv(path, *in.additive));
    if (in.multiplicative) emit("ledger_multiplicative.csv", ledger_csv(path, *in.multiplicative));

    ordered_json summary;
    summary["run_id"] = in.run_id;
    summary["days"] = path.days();
    summary["assets"] = path.asset_count();
    ordered_json terminal, drawdown;
    terminal["v_phi"] = in.additive ? finite_or_null(in.additive->ledger.days.back().v_end) : ordered_json(nullptr);
    terminal["v_psi"] =
        in.multiplicative ? finite_or_null(in.multiplicative->ledger.days.back().v_end) : ordered_json(nullptr);
    drawdown["v_phi"] = in.additive ? ordered_json(max_drawdown(in.additive->ledger.wealth_end())) : ordered_json(nullptr);
    drawdown["v_psi"] =
        in.multiplicative ? ordered_json(max_drawdown(in.multiplicative->ledger.wealth_end())) : ordered_json(nullptr);
    summary["terminal_wealth"] = terminal;
    summary["max_drawdown"] = drawdown;
    summary["t_star"] = {{"additive", verdict_json(in.additive_verdict)},
                         {"multiplicative", verdict_json(in.multiplicative_verdict)}};
    if (primary) {
        summary["gamma"] = {
            {"terminal_defect", primary->gamma_defect.terminal()},
            {"terminal_closed", primary->gamma_closed ? finite_or_null(primary->gamma_closed->terminal())
                                                      : ordered_json(nullptr)}};
    }
    summary["diagnostics"] = {{"cap", in.diagnostics.cap},
                              {"terminal_E", in.diagnostics.e_cumulative.empty()
                                                 ? 0.0
                                                 : in.diagnostics.e_cumulative.back()},
                              {"membership_change_days", in.diagnostics.flagged_days}};
    summary["ranked_local_time_omitted"] = in.rank_based;
    try {
        summary["config"] = ordered_json::parse(in.config_json);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("assemble_report: config is not valid JSON: ") + e.what());
    }
    ordered_json meta = ordered_json::object();
    for (const auto& [k, v] : in.metadata) meta[k] = v;
    summary["metadata"] = meta;
    emit("summary.json", summary.dump(2) + "\n");
    return written;
}

std::vector<double> SeriesTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("no column '" + name + "'");
    const auto idx = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        const std::string& s = r.at(idx);
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw InputError("column '" + name + "' has non-numeric entry '" + s + "'");
        out.push_back(v);
    }
    return out;
}

SeriesTable read_series_csv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot open " + file.string());
    SeriesTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        if (!s.empty() && s.back() == ',') out.emplace_back();
        return out;
    };
    if (!std::getline(in, line)) throw InputError(file.string() + " is empty");
    t.header = split(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto row = split(line);
        if (row.size() != t.header.size()) throw ParseError("column count mismatch in " + file.string(), line_no);
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace fungen
