#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "fungen/diagnostics.hpp"
#include "fungen/engine.hpp"
#include "fungen/errors.hpp"
#include "fungen/lambda.hpp"
#include "fungen/simulate.hpp"

namespace fungen::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Runs job(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) job(i);
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

class Logger {
public:
    explicit Logger(std::ostream& os) : os_(os) {}
    void line(const std::string& s) {
        std::lock_guard<std::mutex> lock(mu_);
        os_ << s << '\n' << std::flush;
    }

private:
    std::ostream& os_;
    std::mutex mu_;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

/// Entries 0..l-1 of the path are unaffected by index changes.
std::size_t first_membership_change(const MarketPath& path) {
    for (std::size_t l = 1; l < path.days(); ++l)
        if (path.membership_changed(l)) return l;
    return path.days();
}

ordered_json opt_number(const std::optional<double>& v) {
    return v && std::isfinite(*v) ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json opt_day(const std::optional<std::size_t>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

struct SeedOutcome {
    std::uint64_t seed = 0;
    std::string run_id;
    bool ok = false;
    std::string error;
    std::optional<double> v_phi;
    std::optional<double> v_psi;
    std::optional<std::size_t> t_star_additive;
    std::optional<std::size_t> t_star_multiplicative;
    double terminal_gamma = 0.0;
};

SeedOutcome backtest_seed(const RunConfig& cfg, std::uint64_t seed, Logger& log) {
    SeedOutcome out;
    out.seed = seed;
    out.run_id = make_run_id(cfg, seed);
    const std::string started = utc_now();
    const std::string tag = "seed " + std::to_string(seed) + " [" + out.run_id + "]";
    try {
        const MarketPath path = market_for_seed(cfg, seed);
        const GenFunctionPtr g = cfg.genfun.build();
        const LambdaPath lam = build_lambda(cfg.lambda, path);
        check_lambda_compatible(*g, lam, path.asset_count());

        ReportInput report;
        report.run_id = out.run_id;
        report.path = &path;
        report.rank_based = g->rank_based();
        report.config_json = canonical_json(cfg);
        report.diagnostics = compute_diagnostics(path);

        if (cfg.wants(StrategyMode::additive)) {
            const NormalizedGen ng = normalize_at_start(g, path, lam, 0.0);
            report.additive = run_backtest(path, ng, lam, StrategyMode::additive);
            report.additive_verdict = arbitrage_check(report.additive->gamma_defect, StrategyMode::additive);
            out.v_phi = report.additive->ledger.days.back().v_end;
            out.t_star_additive = report.additive_verdict->t_star;
            out.terminal_gamma = report.additive->gamma_defect.terminal();
        }
        if (cfg.wants(StrategyMode::multiplicative)) {
            const NormalizedGen ng = normalize_at_start(g, path, lam, cfg.c);
            report.multiplicative = run_backtest(path, ng, lam, StrategyMode::multiplicative);
            report.multiplicative_verdict =
                arbitrage_check(report.multiplicative->gamma_defect, StrategyMode::multiplicative, cfg.epsilon);
            out.v_psi = report.multiplicative->ledger.days.back().v_end;
            out.t_star_multiplicative = report.multiplicative_verdict->t_star;
            if (!report.additive) out.terminal_gamma = report.multiplicative->gamma_defect.terminal();
        }
        report.metadata = {{"started_at", started}, {"finished_at", utc_now()}};
        const auto files = assemble_report(report, cfg.output_dir);
        out.ok = true;
        log.line(tag + ": wrote " + std::to_string(files.size()) + " files to " + cfg.output_dir.string());
        if (report.rank_based) log.line(tag + ": note: ranked function, local-time terms omitted from Gamma");
        if (!report.diagnostics.flagged_days.empty())
            log.line(tag + ": " + std::to_string(report.diagnostics.flagged_days.size()) +
                     " membership-change days flagged");
    } catch (const BacktestFailure& e) {
        out.error = e.what();
        log.line(tag + ": failed at day " + std::to_string(e.day()) + ": " + e.what());
    } catch (const Error& e) {
        out.error = e.what();
        log.line(tag + ": failed: " + e.what());
    }
    return out;
}

}  // namespace

MarketPath market_for_seed(const RunConfig& cfg, std::uint64_t seed) {
    if (cfg.market.csv) return load_market_csv(*cfg.market.csv);
    SimConfig sim = *cfg.market.simulator;
    sim.seed = seed;
    if (cfg.market.scenario) return diversification_scenario(*cfg.market.scenario, sim, cfg.market.scenario_options);
    return simulate_market(sim);
}

std::size_t thread_budget(std::size_t jobs) {
    std::size_t cap = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FUNGEN_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) cap = static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::min(cap, jobs));
}

int cmd_simulate(const RunConfig& cfg, std::ostream& os) {
    if (!cfg.market.simulator) throw ConfigError("$.market.simulator: simulate needs a simulator source");
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw InputError("cannot create " + cfg.output_dir.string() + ": " + ec.message());
    Logger log(os);
    std::atomic<bool> ok{true};
    parallel_for(cfg.seeds.size(), thread_budget(cfg.seeds.size()), [&](std::size_t i) {
        const std::uint64_t seed = cfg.seeds[i];
        const fs::path file = cfg.output_dir / (make_run_id(cfg, seed) + "__market.csv");
        try {
            const MarketPath path = market_for_seed(cfg, seed);
            fs::path tmp = file;
            tmp += ".tmp";
            save_market_csv(path, tmp);
            fs::rename(tmp, file);
            log.line("seed " + std::to_string(seed) + ": wrote " + file.string());
        } catch (const std::exception& e) {
            ok = false;
            log.line("seed " + std::to_string(seed) + ": failed: " + e.what());
        }
    });
    return ok ? 0 : 1;
}

int cmd_backtest(const RunConfig& cfg, std::ostream& os) {
    Logger log(os);
    std::vector<SeedOutcome> outcomes(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), thread_budget(cfg.seeds.size()),
                 [&](std::size_t i) { outcomes[i] = backtest_seed(cfg, cfg.seeds[i], log); });

    ordered_json runs = ordered_json::array();
    std::size_t failed = 0, crossed = 0;
    for (const auto& o : outcomes) {
        failed += o.ok ? 0 : 1;
        crossed += o.t_star_additive ? 1 : 0;
        ordered_json r;
        r["seed"] = o.seed;
        r["run_id"] = o.run_id;
        r["ok"] = o.ok;
        r["error"] = o.ok ? ordered_json(nullptr) : ordered_json(o.error);
        r["terminal_v_phi"] = opt_number(o.v_phi);
        r["terminal_v_psi"] = opt_number(o.v_psi);
        r["terminal_gamma"] = o.ok ? ordered_json(o.terminal_gamma) : ordered_json(nullptr);
        r["t_star_additive"] = opt_day(o.t_star_additive);
        r["t_star_multiplicative"] = opt_day(o.t_star_multiplicative);
        runs.push_back(r);
    }
    ordered_json agg;
    agg["config_hash"] = config_hash(cfg);
    agg["seeds"] = cfg.seeds.size();
    agg["failed"] = failed;
    agg["additive_crossings"] = crossed;
    agg["runs"] = runs;
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    const fs::path file = cfg.output_dir / (config_hash(cfg) + "__aggregate.json");
    fs::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw InputError("cannot write " + tmp.string());
        f << agg.dump(2) << '\n';
    }
    fs::rename(tmp, file);
    log.line("aggregate: " + file.string() + " (" + std::to_string(cfg.seeds.size() - failed) + "/" +
             std::to_string(cfg.seeds.size()) + " seeds ok)");
    return failed == 0 ? 0 : 1;
}

std::vector<SuiteResult> run_verification(const RunConfig& cfg, std::uint64_t seed) {
    std::vector<SuiteResult> out;
    auto add = [&](std::string name, double worst, double tol, std::string detail = {}) {
        out.push_back({std::move(name), seed, worst < tol, worst, tol, std::move(detail)});
    };

    const MarketPath path = market_for_seed(cfg, seed);
    const std::size_t clean = first_membership_change(path);
    const std::string clean_note =
        clean < path.days() ? "checked days 0.." + std::to_string(clean - 1) + " (membership changes after)" : "";

    // Ledger identity and self-financing for the configured function. The
    // reference Γ always comes from the catalog function; the backtest may
    // run the mutated one.
    const GenFunctionPtr reference = cfg.genfun.build();
    const GenFunctionPtr traded = cfg.verify.inject_dg_sign_error ? with_flipped_gradient(reference) : reference;
    const LambdaPath lam = build_lambda(cfg.lambda, path);
    check_lambda_compatible(*reference, lam, path.asset_count());
    const NormalizedGen ref_g = normalize_at_start(reference, path, lam, 0.0);
    NormalizedGen traded_g = ref_g;
    traded_g.base = traded;
    const BacktestResult bt = run_backtest(path, traded_g, lam, StrategyMode::additive);
    const GammaPath ref_gamma = gamma_defect(ref_g, path, lam);
    double ledger_worst = 0.0;
    std::size_t ledger_day = 0;
    for (std::size_t l = 0; l < clean; ++l) {
        std::vector<double> lambda(lam.at(l).begin(), lam.at(l).end());
        std::vector<double> mu_end;
        const DayEnd end = end_of_day(path, l);
        for (std::size_t i : path.member_indices(l)) mu_end.push_back(end.weights[i]);
        if (lambda.size() == path.asset_count() && lambda.size() > 1) {
            std::vector<double> member_lambda;
            for (std::size_t i : path.member_indices(l)) member_lambda.push_back(lambda[i]);
            lambda = member_lambda;
        }
        const double r = std::abs(bt.ledger.days[l].v_end - ref_g.value(lambda, mu_end) - ref_gamma.values[l]);
        if (!(r <= ledger_worst)) {
            ledger_worst = r;
            ledger_day = l;
        }
    }
    add("ledger_identity", ledger_worst, 1e-10,
        "worst at day " + std::to_string(ledger_day) + (clean_note.empty() ? "" : "; " + clean_note));
    add("self_financing", bt.ledger.max_self_financing_residual(path), 1e-10);
    add("wealth_forms", bt.ledger.max_form_gap(), 1e-10);

    // Market function: V ≡ 1.
    {
        const LambdaPath one = build_lambda(LambdaSpec::constant(1.0), path);
        const auto m = run_backtest(path, normalize_at_start(make_genfun("market"), path, one), one,
                                    StrategyMode::additive);
        double worst = 0.0;
        for (const auto& d : m.ledger.days) worst = std::max(worst, std::abs(d.v_end - 1.0));
        add("market_neutrality", worst, 1e-12);
    }

    // Quadratic oracle: Γ = (1 - γ) ΣQV exactly, unnormalized.
    {
        const QVPath qv = realized_qv(path);
        NormalizedGen quad{make_genfun("quadratic"), 1.0, NormalizationMode::divide, 0.0};
        double worst = 0.0;
        for (double gamma : {0.0, 1.0, 2.0}) {
            const LambdaPath lq = build_lambda(LambdaSpec::qv_linear(gamma), path);
            const GammaPath gp = gamma_defect(quad, path, lq);
            for (std::size_t l = 0; l < clean; ++l)
                worst = std::max(worst, std::abs(gp.values[l] - (1.0 - gamma) * qv.total(l)));
        }
        add("quadratic_oracle", worst, 1e-12, clean_note);
    }

    // Route agreement for entropy with Λ ≡ 1.
    {
        const LambdaPath one = build_lambda(LambdaSpec::constant(1.0), path);
        const NormalizedGen ent = normalize_at_start(make_genfun("entropy"), path, one);
        const double gap =
            std::abs(gamma_closed(ent, path, one).values[clean - 1] - gamma_defect(ent, path, one).values[clean - 1]);
        add("route_agreement", gap, cfg.verify.route_tolerance, "entropy, constant lambda");
    }

    // Condition spot checks.
    auto spot = [&](const std::string& label, const GenFunction& g) {
        const ConditionReport rep = spot_check_conditions(g, cfg.verify.samples, seed);
        std::string detail = "lipschitz~" + fmt(rep.lipschitz_estimate);
        if (rep.witness) {
            detail += "; witness G(mid)=" + fmt(rep.witness->g_mid) + " < avg=" + fmt(rep.witness->g_average);
        }
        if (rep.local_time_omitted) detail += "; local-time terms omitted";
        out.push_back({"conditions[" + label + "]", seed, rep.passed(),
                       static_cast<double>(rep.concavity_violations), 1.0, detail});
    };
    spot(cfg.genfun.name + (cfg.genfun.negate ? " (negated)" : ""), *reference);
    if (reference->name() != "entropy") spot("entropy", *make_genfun("entropy"));
    if (reference->name() != "quadratic") spot("quadratic", *make_genfun("quadratic"));
    return out;
}

int cmd_verify(const RunConfig& cfg, std::ostream& os) {
    Logger log(os);
    std::vector<std::vector<SuiteResult>> results(cfg.seeds.size());
    std::vector<std::string> errors(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), thread_budget(cfg.seeds.size()), [&](std::size_t i) {
        try {
            results[i] = run_verification(cfg, cfg.seeds[i]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    bool ok = true;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
        if (!errors[i].empty()) {
            ok = false;
            log.line("ERROR seed=" + std::to_string(cfg.seeds[i]) + " " + errors[i]);
            continue;
        }
        for (const auto& r : results[i]) {
            ok = ok && r.passed;
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s %-28s seed=%-6llu worst=%.3e tol=%.0e", r.passed ? "PASS" : "FAIL",
                          r.name.c_str(), static_cast<unsigned long long>(r.seed), r.worst, r.tolerance);
            log.line(std::string(buf) + (r.detail.empty() ? "" : "  " + r.detail));
        }
    }
    log.line(ok ? "verify: all suites passed" : "verify: FAILED");
    return ok ? 0 : 1;
}

}  // namespace fungen::cli
