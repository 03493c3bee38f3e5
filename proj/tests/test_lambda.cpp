#include <doctest.h>

#include <cmath>

#include "fungen/errors.hpp"
#include "fungen/lambda.hpp"
#include "fungen/simulate.hpp"
#include "oracles.hpp"

using namespace fungen;

namespace {

WeightVector wv(std::vector<double> v) { return WeightVector::from_values(std::move(v)); }

MarketPath sim(std::size_t d, std::size_t n, std::uint64_t seed, double vol = 0.01) {
    auto cfg = SimConfig::defaults(d, n, seed);
    cfg.vol.assign(d, vol);
    return simulate_market(cfg);
}

}  // namespace

TEST_CASE("realized QV examples") {
    const std::vector<WeightVector> b{wv({0.6, 0.4})}, e{wv({0.5, 0.5})};
    const auto one = realized_qv(b, e);
    CHECK(one.values(0, 0) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(one.values(0, 1) == doctest::Approx(0.01).epsilon(1e-14));
    const std::vector<WeightVector> b2{wv({0.6, 0.4}), wv({0.6, 0.4})}, e2{wv({0.5, 0.5}), wv({0.5, 0.5})};
    const auto two = realized_qv(b2, e2);
    CHECK(two.values(1, 0) == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(two.total(1) == doctest::Approx(0.04).epsilon(1e-14));

    const std::vector<WeightVector> flat{wv({0.3, 0.7}), wv({0.3, 0.7})};
    CHECK(realized_qv(flat, flat).total(1) == 0.0);
    CHECK_THROWS_AS(realized_qv(b2, e), InputError);
}

TEST_CASE("QV is cumulative, starts at the first increment and is permutation equivariant") {
    const auto p = sim(6, 300, 4);
    const auto qv = realized_qv(p);
    const auto ref = oracle::total_qv(p);
    for (std::size_t l = 0; l < p.days(); ++l) {
        CHECK(qv.total(l) == doctest::Approx(ref[l]).epsilon(1e-12));
        if (l > 0)
            for (std::size_t i = 0; i < 6; ++i) CHECK(qv.values(l, i) >= qv.values(l - 1, i));
    }
    CHECK(qv.total(0) == 0.0);  // day 0 has TR = 1

    MarketPath q = p;
    const std::vector<std::size_t> perm{3, 1, 5, 0, 2, 4};
    for (std::size_t l = 0; l < p.days(); ++l)
        for (std::size_t i = 0; i < 6; ++i) {
            q.mv_begin(l, i) = p.mv_begin(l, perm[i]);
            q.tr(l, i) = p.tr(l, perm[i]);
        }
    const auto qq = realized_qv(q);
    for (std::size_t i = 0; i < 6; ++i) CHECK(qq.values(299, i) == doctest::Approx(qv.values(299, perm[i])).epsilon(1e-13));
}

TEST_CASE("constant and deterministic exponential kinds") {
    const auto p = sim(3, 400, 1);
    const auto c = build_lambda(LambdaSpec::constant(1.0), p);
    CHECK(c.dim() == 1);
    CHECK(c.monotone == Monotonicity::constant);
    for (std::size_t l = 0; l < p.days(); ++l) CHECK(c.at(l)[0] == 1.0);

    const auto down = build_lambda(LambdaSpec::exp_deterministic(-1e-4), p);
    CHECK(down.monotone == Monotonicity::nonincreasing);
    for (std::size_t l = 0; l < p.days(); ++l) {
        CHECK(down.at(l)[0] == std::exp(-1e-4 * static_cast<double>(l)));
        if (l > 0) CHECK(down.at(l)[0] < down.at(l - 1)[0]);
    }
    const auto up = build_lambda(LambdaSpec::exp_deterministic(1e-4), p);
    CHECK(up.monotone == Monotonicity::nondecreasing);
    CHECK(up.total_variation() == doctest::Approx(std::exp(1e-4 * 399) - 1.0));
}

TEST_CASE("QV-driven kinds") {
    const auto p = sim(4, 500, 2);
    const auto ref = oracle::total_qv(p);
    const auto e = build_lambda(LambdaSpec::exp_qv(100.0), p);
    const auto en = build_lambda(LambdaSpec::exp_qv(-100.0), p);
    const auto lin = build_lambda(LambdaSpec::qv_linear(2.0, 0.5), p);
    CHECK(e.monotone == Monotonicity::nondecreasing);
    CHECK(en.monotone == Monotonicity::nonincreasing);
    for (std::size_t l = 0; l < p.days(); ++l) {
        CHECK(e.at(l)[0] == doctest::Approx(std::exp(100 * ref[l])).epsilon(1e-12));
        CHECK(lin.at(l)[0] == doctest::Approx(0.5 + 2 * ref[l]).epsilon(1e-12));
        if (l > 0) {
            CHECK(e.at(l)[0] >= e.at(l - 1)[0]);
            CHECK(en.at(l)[0] <= en.at(l - 1)[0]);
        }
    }
}

TEST_CASE("moving average") {
    auto cfg = SimConfig::defaults(3, 40, 1);
    cfg.vol.assign(3, 0.0);
    const auto flat = simulate_market(cfg);
    const auto w0 = begin_weights(flat, 0);
    const auto m = build_lambda(LambdaSpec::moving_average(10), flat);
    CHECK(m.dim() == 3);
    for (std::size_t l = 0; l < flat.days(); ++l)
        for (std::size_t i = 0; i < 3; ++i) CHECK(m.at(l)[i] == doctest::Approx(w0[i]).epsilon(1e-15));

    const auto p = sim(3, 60, 5, 0.03);
    const std::size_t w = 7;
    const auto ma = build_lambda(LambdaSpec::moving_average(w), p);
    for (std::size_t l = 0; l < p.days(); ++l)
        for (std::size_t i = 0; i < 3; ++i) {
            double sum = 0, lo = 1, hi = 0;
            for (long k = static_cast<long>(l) - static_cast<long>(w) + 1; k <= static_cast<long>(l); ++k) {
                const double v = begin_weights(p, k < 0 ? 0 : static_cast<std::size_t>(k))[i];
                sum += v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            CHECK(ma.at(l)[i] == doctest::Approx(sum / w).epsilon(1e-14));
            CHECK(ma.at(l)[i] >= lo - 1e-15);
            CHECK(ma.at(l)[i] <= hi + 1e-15);
        }
}

TEST_CASE("clip keeps values in the band and the inner monotonicity") {
    const auto p = sim(3, 2000, 8);
    const auto c = build_lambda(LambdaSpec::clipped(LambdaSpec::exp_deterministic(5e-4), 1.1, 1.5), p);
    CHECK(c.monotone == Monotonicity::nondecreasing);
    CHECK(c.at(0)[0] == 1.1);
    CHECK(c.at(1999)[0] == 1.5);
    for (std::size_t l = 0; l < p.days(); ++l) {
        CHECK(c.at(l)[0] >= 1.1);
        CHECK(c.at(l)[0] <= 1.5);
    }
    const auto ma = build_lambda(LambdaSpec::clipped(LambdaSpec::moving_average(20), 0.1, 0.3), p);
    for (std::size_t l = 0; l < p.days(); ++l)
        for (double v : ma.at(l)) CHECK((v >= 0.1 && v <= 0.3));
}

TEST_CASE("invalid parameters") {
    const auto p = sim(2, 10, 1);
    CHECK_THROWS_AS(build_lambda(LambdaSpec::moving_average(0), p), ConfigError);
    CHECK_THROWS_AS(build_lambda(LambdaSpec::clipped(LambdaSpec::constant(1), 0.5, 0.5), p), ConfigError);
    CHECK_THROWS_AS(build_lambda(LambdaSpec::clipped(LambdaSpec::constant(1), -1, 0.5), p), ConfigError);
    CHECK_THROWS_AS(build_lambda(LambdaSpec::exp_deterministic(NAN), p), ConfigError);
    LambdaSpec orphan;
    orphan.kind = LambdaKind::clip;
    orphan.xi_lo = 0.1;
    orphan.xi_hi = 0.2;
    CHECK_THROWS_AS(build_lambda(orphan, p), ConfigError);
    CHECK_THROWS_AS(parse_lambda_kind("brownian"), ConfigError);
    CHECK(parse_lambda_kind("exp_qv") == LambdaKind::exp_qv);
}
