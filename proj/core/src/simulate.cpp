#include "fungen/simulate.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>

#include "fungen/diagnostics.hpp"
#include "fungen/errors.hpp"

namespace fungen {

namespace {

using DriftFn = std::function<void(std::span<const double> mv, std::span<double> drift)>;

std::vector<double> or_default(const std::vector<double>& v, std::size_t d, double fallback) {
    return v.empty() ? std::vector<double>(d, fallback) : v;
}

Eigen::MatrixXd correlation_factor(const SimConfig& cfg) {
    const auto d = static_cast<Eigen::Index>(cfg.d);
    if (cfg.corr.empty()) return Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd c(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) c(i, j) = cfg.corr(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    if (eig.info() != Eigen::Success) throw ConfigError("corr: eigen decomposition failed");
    if (eig.eigenvalues().minCoeff() < -1e-10)
        throw ConfigError("corr is not positive semidefinite (min eigenvalue " +
                          std::to_string(eig.eigenvalues().minCoeff()) + ")");
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal();
}

std::vector<std::string> business_days(const std::string& start, std::size_t n) {
    using namespace std::chrono;
    int y = std::stoi(start.substr(0, 4));
    unsigned m = static_cast<unsigned>(std::stoi(start.substr(5, 2)));
    unsigned dd = static_cast<unsigned>(std::stoi(start.substr(8, 2)));
    year_month_day ymd{year{y}, month{m}, day{dd}};
    if (!ymd.ok()) throw ConfigError("start_date is not a valid date");
    sys_days cur{ymd};
    std::vector<std::string> out;
    out.reserve(n);
    while (out.size() < n) {
        const weekday wd{cur};
        if (wd != Saturday && wd != Sunday) {
            const year_month_day v{cur};
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()),
                          static_cast<unsigned>(v.month()), static_cast<unsigned>(v.day()));
            out.emplace_back(buf);
        }
        cur += days{1};
    }
    return out;
}

MarketPath simulate_with(const SimConfig& cfg, const DriftFn& extra_drift) {
    cfg.validate();
    const std::size_t d = cfg.d;
    const std::size_t n = cfg.n_days;
    const auto drift = or_default(cfg.drift, d, 0.0);
    const auto vol = or_default(cfg.vol, d, 0.01);
    const auto div = or_default(cfg.div_yield, d, 0.0);
    const auto init = or_default(cfg.init_mv, d, 1.0);
    const Eigen::MatrixXd factor = correlation_factor(cfg);

    MarketPath path;
    path.dates = business_days(cfg.start_date, n);
    path.assets.reserve(d);
    for (std::size_t i = 0; i < d; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "A%03zu", i);
        path.assets.emplace_back(buf);
    }
    path.mv_begin = Matrix(n, d);
    path.tr = Matrix(n, d, 1.0);
    path.membership = Mask(n, d, 1);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd eps(static_cast<Eigen::Index>(d));
    std::vector<double> day_drift(d);
    std::vector<double> mv(init);

    for (std::size_t l = 0; l < n; ++l) {
        for (std::size_t i = 0; i < d; ++i) path.mv_begin(l, i) = mv[i];
        if (l == 0) continue;  // day 0 has no prior day: TR = 1
        for (auto k = 0; k < eps.size(); ++k) eps[k] = normal(rng);
        const Eigen::VectorXd z = factor * eps;
        day_drift = drift;
        if (extra_drift) extra_drift(mv, day_drift);
        for (std::size_t i = 0; i < d; ++i) {
            const double ratio = std::exp(day_drift[i] + vol[i] * z[static_cast<Eigen::Index>(i)]);
            path.tr(l, i) = ratio * (1.0 + div[i]);
            mv[i] *= ratio;
        }
    }
    path.validate();
    return path;
}

}  // namespace

void SimConfig::validate() const {
    if (d < 2) throw ConfigError("simulator: d must be at least 2");
    if (n_days < 1) throw ConfigError("simulator: need at least one day");
    auto sized = [&](const std::vector<double>& v, const char* name) {
        if (!v.empty() && v.size() != d)
            throw ConfigError(std::string("simulator: ") + name + " must have " + std::to_string(d) +
                              " entries");
        for (double x : v)
            if (!std::isfinite(x)) throw ConfigError(std::string("simulator: ") + name + " must be finite");
    };
    sized(drift, "drift");
    sized(vol, "vol");
    sized(div_yield, "div_yield");
    sized(init_mv, "init_mv");
    for (double v : vol)
        if (v < 0.0) throw ConfigError("simulator: vol must be >= 0");
    for (double v : div_yield)
        if (v < 0.0) throw ConfigError("simulator: div_yield must be >= 0");
    for (double v : init_mv)
        if (!(v > 0.0)) throw ConfigError("simulator: init_mv must be > 0");
    if (!corr.empty()) {
        if (corr.rows() != d || corr.cols() != d) throw ConfigError("simulator: corr must be d x d");
        for (std::size_t i = 0; i < d; ++i) {
            if (std::abs(corr(i, i) - 1.0) > 1e-12) throw ConfigError("simulator: corr needs a unit diagonal");
            for (std::size_t j = 0; j < i; ++j)
                if (std::abs(corr(i, j) - corr(j, i)) > 1e-12)
                    throw ConfigError("simulator: corr must be symmetric");
        }
    }
    if (!corr.empty()) (void)correlation_factor(*this);
    if (start_date.size() != 10) throw ConfigError("simulator: start_date must be YYYY-MM-DD");
}

SimConfig SimConfig::defaults(std::size_t d, std::size_t n_days, std::uint64_t seed) {
    SimConfig cfg;
    cfg.d = d;
    cfg.n_days = n_days;
    cfg.seed = seed;
    cfg.vol.assign(d, 0.01);
    cfg.drift.assign(d, 0.0);
    cfg.div_yield.assign(d, 0.0);
    cfg.init_mv.resize(d);
    for (std::size_t i = 0; i < d; ++i)
        cfg.init_mv[i] = std::exp(std::log(20.0) * static_cast<double>(i) / static_cast<double>(d - 1));
    return cfg;
}

MarketPath simulate_market(const SimConfig& cfg) { return simulate_with(cfg, nullptr); }

std::string to_string(DiversityTrend trend) {
    switch (trend) {
        case DiversityTrend::increasing: return "increasing";
        case DiversityTrend::decreasing: return "decreasing";
        case DiversityTrend::flat: return "flat";
    }
    return "flat";
}

DiversityTrend parse_diversity_trend(const std::string& name) {
    for (auto t : {DiversityTrend::increasing, DiversityTrend::decreasing, DiversityTrend::flat})
        if (to_string(t) == name) return t;
    throw ConfigError("unknown diversification scenario '" + name + "'");
}

MarketPath diversification_scenario(DiversityTrend trend, const SimConfig& cfg,
                                    const ScenarioOptions& options) {
    if (!(options.strength >= 0.0)) throw ConfigError("scenario strength must be >= 0");
    if (trend == DiversityTrend::flat) return simulate_market(cfg);

    const double sign = trend == DiversityTrend::increasing ? -1.0 : 1.0;
    const DriftFn pull = [&](std::span<const double> mv, std::span<double> drift) {
        double mean_log = 0.0;
        for (double v : mv) mean_log += std::log(v);
        mean_log /= static_cast<double>(mv.size());
        for (std::size_t i = 0; i < mv.size(); ++i)
            drift[i] += sign * options.strength * (std::log(mv[i]) - mean_log);
    };

    SimConfig attempt_cfg = cfg;
    for (std::size_t attempt = 0; attempt < options.max_attempts; ++attempt) {
        attempt_cfg.seed = cfg.seed + attempt * 0x9E3779B97F4A7C15ULL;
        MarketPath path = simulate_with(attempt_cfg, pull);
        const DiagnosticsSeries diag = compute_diagnostics(path);
        const double e_final = diag.e_cumulative.empty() ? 0.0 : diag.e_cumulative.back();
        if ((trend == DiversityTrend::increasing && e_final > 0.0) ||
            (trend == DiversityTrend::decreasing && e_final < 0.0))
            return path;
    }
    throw SimulationError("diversification scenario '" + to_string(trend) + "' not realized after " +
                          std::to_string(options.max_attempts) + " attempts");
}

}  // namespace fungen
