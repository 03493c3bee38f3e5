#include <doctest.h>

#include <cmath>

#include "fungen/diagnostics.hpp"
#include "fungen/errors.hpp"
#include "fungen/simulate.hpp"

using namespace fungen;

TEST_CASE("zero volatility gives a constant path") {
    auto cfg = SimConfig::defaults(3, 50, 1);
    cfg.vol = {0, 0, 0};
    const auto p = simulate_market(cfg);
    const auto w0 = begin_weights(p, 0);
    for (std::size_t l = 0; l < p.days(); ++l) {
        CHECK(begin_weights(p, l) == w0);
        CHECK(end_of_day(p, l).weights == w0);
    }
}

TEST_CASE("same seed, same path; different seed, different path") {
    const auto cfg = SimConfig::defaults(5, 200, 42);
    CHECK(simulate_market(cfg) == simulate_market(cfg));
    auto other = cfg;
    other.seed = 43;
    CHECK_FALSE(simulate_market(cfg) == simulate_market(other));
}

TEST_CASE("deterministic drift moves weights monotonically") {
    SimConfig cfg;
    cfg.d = 2;
    cfg.n_days = 100;
    cfg.vol = {0, 0};
    const double g = 0.01;
    cfg.drift = {g, -g};
    cfg.init_mv = {1, 1};
    const auto p = simulate_market(cfg);
    for (std::size_t l = 0; l < p.days(); ++l) {
        // day 0 carries no move, so the first step lands on day 2
        const double k = l == 0 ? 0.0 : static_cast<double>(l - 1);
        const double expect = std::exp(g * k) / (std::exp(g * k) + std::exp(-g * k));
        CHECK(begin_weights(p, l)[0] == doctest::Approx(expect).epsilon(1e-12));
        CHECK(end_of_day(p, l).weights[0] > begin_weights(p, l)[0] - (l == 0 ? 1e-15 : 0.0));
        if (l > 1) CHECK(begin_weights(p, l)[0] > begin_weights(p, l - 1)[0]);
    }
}

TEST_CASE("total-return factor is the value ratio without dividends") {
    auto cfg = SimConfig::defaults(4, 80, 3);
    const auto p = simulate_market(cfg);
    for (std::size_t i = 0; i < 4; ++i) CHECK(p.tr(0, i) == 1.0);
    for (std::size_t l = 0; l + 1 < p.days(); ++l)
        for (std::size_t i = 0; i < 4; ++i) CHECK(p.mv_begin(l, i) * p.tr(l, i) == p.mv_begin(l + 1, i));
}

TEST_CASE("dividends enter the return factor only") {
    auto cfg = SimConfig::defaults(2, 30, 3);
    cfg.div_yield = {0.001, 0.0};
    auto plain = cfg;
    plain.div_yield.clear();
    const auto a = simulate_market(cfg), b = simulate_market(plain);
    CHECK(a.mv_begin == b.mv_begin);
    for (std::size_t l = 1; l < a.days(); ++l) CHECK(a.tr(l, 0) == doctest::Approx(b.tr(l, 0) * 1.001).epsilon(1e-14));
}

TEST_CASE("correlation matrix is checked and honoured") {
    auto cfg = SimConfig::defaults(2, 20000, 9);
    cfg.init_mv = {1, 1};
    cfg.corr = Matrix(2, 2, 1.0);
    cfg.corr(0, 1) = cfg.corr(1, 0) = 0.8;
    const auto p = simulate_market(cfg);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t l = 0; l + 1 < p.days(); ++l) {
        const double x = std::log(p.mv_begin(l + 1, 0) / p.mv_begin(l, 0));
        const double y = std::log(p.mv_begin(l + 1, 1) / p.mv_begin(l, 1));
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    CHECK(sxy / std::sqrt(sxx * syy) == doctest::Approx(0.8).epsilon(0.03));

    cfg.corr(0, 1) = cfg.corr(1, 0) = 1.5;
    CHECK_THROWS_AS(simulate_market(cfg), ConfigError);
}

TEST_CASE("identity correlation by default") {
    auto cfg = SimConfig::defaults(2, 20000, 10);
    const auto p = simulate_market(cfg);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t l = 0; l + 1 < p.days(); ++l) {
        const double x = std::log(p.mv_begin(l + 1, 0) / p.mv_begin(l, 0));
        const double y = std::log(p.mv_begin(l + 1, 1) / p.mv_begin(l, 1));
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.03);
    CHECK(std::sqrt(sxx / (p.days() - 1)) == doctest::Approx(0.01).epsilon(0.03));
}

TEST_CASE("config validation") {
    auto cfg = SimConfig::defaults(3, 10, 1);
    cfg.vol = {0.01, -0.01, 0.01};
    CHECK_THROWS_AS(simulate_market(cfg), ConfigError);
    cfg = SimConfig::defaults(3, 10, 1);
    cfg.init_mv = {1, 0, 1};
    CHECK_THROWS_AS(simulate_market(cfg), ConfigError);
    cfg = SimConfig::defaults(3, 10, 1);
    cfg.drift = {0.0, 0.0};
    CHECK_THROWS_AS(simulate_market(cfg), ConfigError);
    cfg = SimConfig::defaults(1, 10, 1);
    CHECK_THROWS_AS(simulate_market(cfg), ConfigError);
}

TEST_CASE("diversification scenarios hit the requested sign") {
    auto cfg = SimConfig::defaults(10, 500, 21);
    auto flat = cfg;
    flat.vol.assign(10, 0.0);
    const auto pf = diversification_scenario(DiversityTrend::flat, flat);
    CHECK(compute_diagnostics(pf).e_cumulative.back() == 0.0);

    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        cfg.seed = seed;
        const auto up = diversification_scenario(DiversityTrend::increasing, cfg);
        const auto down = diversification_scenario(DiversityTrend::decreasing, cfg);
        CHECK(compute_diagnostics(up).e_cumulative.back() > 0.0);
        CHECK(compute_diagnostics(down).e_cumulative.back() < 0.0);
    }
}

TEST_CASE("scenario retry budget") {
    auto cfg = SimConfig::defaults(4, 50, 1);
    cfg.vol.assign(4, 0.0);
    cfg.init_mv.assign(4, 1.0);  // equal sizes: no pull, E stays 0
    ScenarioOptions opt;
    opt.max_attempts = 3;
    CHECK_THROWS_AS(diversification_scenario(DiversityTrend::increasing, cfg, opt), SimulationError);
    CHECK(parse_diversity_trend("decreasing") == DiversityTrend::decreasing);
    CHECK_THROWS_AS(parse_diversity_trend("sideways"), ConfigError);
    opt.strength = -0.01;
    CHECK_THROWS_AS(diversification_scenario(DiversityTrend::increasing, cfg, opt), ConfigError);
}
