#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fungen/diagnostics.hpp"
#include "fungen/errors.hpp"
#include "fungen/simulate.hpp"

using namespace fungen;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("fungen_diag_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& f) {
    std::ifstream in(f);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("direction indicator") {
    const std::vector<double> b{0.6, 0.4}, e{0.5, 0.5};
    CHECK(direction_indicator(b, b) == 0.0);
    CHECK(direction_indicator(b, e) == doctest::Approx(0.1 * std::log(1.5)).epsilon(1e-14));
    CHECK(direction_indicator(b, e) == doctest::Approx(0.0405465).epsilon(1e-6));
    // two-asset reduction
    CHECK(direction_indicator(b, e) == doctest::Approx((std::log(0.4) - std::log(0.6)) * (0.5 - 0.6)));
    CHECK_THROWS_AS(direction_indicator(std::vector<double>{1.0, 0.0}, e), DomainError);
    CHECK_THROWS_AS(direction_indicator(b, std::vector<double>{1.0}), InputError);
}

TEST_CASE("two-asset sign law") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 10000; ++k) {
        const double b1 = 0.5 + 0.5 * u(rng);
        if (b1 >= 1.0) continue;
        const double e1 = u(rng);
        const std::vector<double> b{b1, 1 - b1}, e{e1, 1 - e1};
        const double d = direction_indicator(b, e);
        CHECK((d > 0) == (e1 < b1));
    }
}

TEST_CASE("cumulative E") {
    CHECK(cumulative_e(std::vector<double>{0, 0, 0}) == std::vector<double>{0, 0, 0});
    const auto e = cumulative_e(std::vector<double>{0.1, -0.05});
    CHECK(e[0] == 0.1);
    CHECK(e[1] == doctest::Approx(0.05));
    const std::vector<double> d{0.3, -0.1, 0.2, 0.0, -0.4};
    const auto run = cumulative_e(d);
    for (std::size_t l = 1; l < d.size(); ++l) CHECK(((run[l] > run[l - 1]) == (d[l] > 0)));
}

TEST_CASE("capped diversity") {
    CHECK(diversity_capped(std::vector<double>{0.1, 0.2, 0.3, 0.4}, 0.5) == doctest::Approx(1.0));
    CHECK(diversity_capped(std::vector<double>{0.7, 0.3}, 0.002) == doctest::Approx(0.004));
    CHECK(diversity_capped(std::vector<double>(8, 0.125), 0.125) == 1.0);
    CHECK_THROWS_AS(diversity_capped(std::vector<double>{1.0}, 0.0), ConfigError);
    // monotone below the cap, flat above
    CHECK(diversity_capped(std::vector<double>{0.05, 0.95}, 0.1) < diversity_capped(std::vector<double>{0.08, 0.92}, 0.1));
    CHECK(diversity_capped(std::vector<double>{0.2, 0.8}, 0.1) == diversity_capped(std::vector<double>{0.3, 0.7}, 0.1));
}

TEST_CASE("series over a path") {
    const auto p = simulate_market(SimConfig::defaults(6, 300, 4));
    const auto s = compute_diagnostics(p);
    CHECK(s.cap == doctest::Approx(1.0 / 6));
    double acc = 0;
    for (std::size_t l = 0; l < p.days(); ++l) {
        acc += s.d_indicator[l];
        CHECK(s.e_cumulative[l] == acc);
        CHECK(s.diversity_capped[l] > 0.0);
        CHECK(s.diversity_capped[l] <= 1.0 + 1e-15);
    }
    CHECK(s.flagged_days.empty());
    CHECK(compute_diagnostics(p, 0.002).cap == 0.002);
}

TEST_CASE("additive entropy wealth increment is Λ D / G(0)") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto p = simulate_market(SimConfig::defaults(10, 500, seed));
        const auto lam = build_lambda(LambdaSpec::exp_deterministic(1e-4), p);
        const auto g = normalize_at_start(make_genfun("entropy"), p, lam);
        const auto r = run_backtest(p, g, lam, StrategyMode::additive);
        const auto s = compute_diagnostics(p);
        for (std::size_t l = 0; l < p.days(); ++l) {
            const auto& d = r.ledger.days[l];
            CHECK(std::abs((d.v_end - d.v_begin) - lam.at(l)[0] * s.d_indicator[l] / g.g0) < 1e-10);
        }
    }
}

TEST_CASE("membership-change days are flagged") {
    auto p = simulate_market(SimConfig::defaults(4, 40, 2));
    for (std::size_t l = 20; l < 40; ++l) {
        p.membership(l, 0) = 0;
        p.mv_begin(l, 0) = 0;
        p.tr(l, 0) = 1;
    }
    const auto s = compute_diagnostics(p);
    CHECK(s.flagged_days == std::vector<std::size_t>{20});
    CHECK(std::isfinite(s.d_indicator[20]));
}

TEST_CASE("max drawdown") {
    CHECK(max_drawdown(std::vector<double>{1, 2, 1, 3}) == 0.5);
    CHECK(max_drawdown(std::vector<double>{1, 1.1, 1.2}) == 0.0);
    CHECK(max_drawdown(std::vector<double>{}) == 0.0);
}

TEST_CASE("report files round-trip") {
    const auto p = simulate_market(SimConfig::defaults(3, 50, 8));
    const auto lam = build_lambda(LambdaSpec::constant(1.0), p);
    ReportInput in;
    in.run_id = "rt";
    in.path = &p;
    in.additive = run_backtest(p, normalize_at_start(make_genfun("entropy"), p, lam), lam, StrategyMode::additive);
    in.multiplicative =
        run_backtest(p, normalize_at_start(make_genfun("entropy"), p, lam), lam, StrategyMode::multiplicative);
    in.additive_verdict = arbitrage_check(in.additive->gamma_defect, StrategyMode::additive);
    in.diagnostics = compute_diagnostics(p);
    in.config_json = R"({"genfun":"entropy"})";
    in.metadata = {{"started_at", "now"}};
    const auto dir = scratch("rt");
    const auto files = assemble_report(in, dir);
    CHECK(files.size() == 8);
    for (const auto& f : files) CHECK(fs::exists(f));
    for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");

    const auto wealth = read_series_csv(dir / "rt__wealth.csv");
    CHECK(wealth.column("v_phi") == in.additive->ledger.wealth_end());
    CHECK(wealth.column("v_psi") == in.multiplicative->ledger.wealth_end());
    CHECK(read_series_csv(dir / "rt__E.csv").column("E") == in.diagnostics.e_cumulative);
    CHECK(read_series_csv(dir / "rt__D.csv").column("D") == in.diagnostics.d_indicator);
    CHECK(read_series_csv(dir / "rt__gamma.csv").column("gamma_defect") == in.additive->gamma_defect.values);
    const auto ledger = read_series_csv(dir / "rt__ledger_additive.csv");
    CHECK(ledger.header.front() == "day");
    CHECK(ledger.header[1] == "theta_A000");
    CHECK(ledger.header.back() == "Gamma_closed");
    CHECK(ledger.column("v_end") == in.additive->ledger.wealth_end());
    CHECK_THROWS_AS(ledger.column("missing"), InputError);

    const auto summary = nlohmann::json::parse(slurp(dir / "rt__summary.json"));
    CHECK(summary["terminal_wealth"]["v_phi"].get<double>() == in.additive->ledger.days.back().v_end);
    CHECK(summary["terminal_wealth"]["v_psi"].get<double>() == in.multiplicative->ledger.days.back().v_end);
    CHECK(summary["t_star"].contains("additive"));
    CHECK(summary["t_star"]["multiplicative"].is_null());
    CHECK(summary["metadata"]["started_at"] == "now");
    CHECK(summary["config"]["genfun"] == "entropy");
}

TEST_CASE("empty optional sections still give a valid summary") {
    const auto p = simulate_market(SimConfig::defaults(2, 10, 1));
    ReportInput in;
    in.run_id = "empty";
    in.path = &p;
    in.diagnostics = compute_diagnostics(p);
    const auto dir = scratch("empty");
    assemble_report(in, dir);
    const auto summary = nlohmann::json::parse(slurp(dir / "empty__summary.json"));
    CHECK(summary["terminal_wealth"]["v_phi"].is_null());
    CHECK(summary["t_star"]["additive"].is_null());
    CHECK_FALSE(fs::exists(dir / "empty__ledger_additive.csv"));
    in.config_json = "{not json";
    CHECK_THROWS_AS(assemble_report(in, dir), InputError);
}
