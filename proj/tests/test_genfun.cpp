#include <doctest.h>

#include <cmath>
#include <random>

#include "fungen/errors.hpp"
#include "fungen/genfun.hpp"
#include "oracles.hpp"

using oracle::dirichlet;
using oracle::worst_fd_error;

using namespace fungen;

namespace {

WeightVector wv(std::vector<double> v) { return WeightVector::from_values(std::move(v)); }

}  // namespace

TEST_CASE("entropy examples") {
    auto e = entropy(1.0, wv({0.5, 0.5}));
    CHECK(e.value == doctest::Approx(0.6931472).epsilon(1e-7));
    CHECK(e.gradient[0] == doctest::Approx(-1 + std::log(2.0)));
    CHECK(e.gradient[1] == doctest::Approx(-1 + std::log(2.0)));
    CHECK(entropy(2.0, wv({0.25, 0.25, 0.25, 0.25})).value == doctest::Approx(2 * std::log(4.0)));
    CHECK(entropy(1.0, wv({0.9, 0.1})).value == doctest::Approx(oracle::entropy(1.0, {0.9, 0.1})).epsilon(1e-15));
    CHECK(entropy(1.0, wv({0.9, 0.1})).value == doctest::Approx(0.325083).epsilon(1e-6));
    CHECK_THROWS_AS(entropy(1.0, wv({1.0, 0.0})), DomainError);
    CHECK_THROWS_AS(entropy(0.0, wv({0.5, 0.5})), DomainError);
}

TEST_CASE("entropy stays inside (0, lambda log d)") {
    std::mt19937_64 rng(7);
    const EntropyFunction g;
    for (int k = 0; k < 2000; ++k) {
        const std::size_t d = 2 + k % 9;
        const auto x = dirichlet(rng, d, 1e-12);
        const double lam = 0.1 + 0.001 * k;
        const double v = g.value(std::vector<double>{lam}, x);
        CHECK(v > 0.0);
        CHECK(v < lam * std::log(static_cast<double>(d)));
    }
}

TEST_CASE("power diversity examples") {
    const std::vector<double> lam{0.5, 0.5};
    CHECK(power_diversity(lam, wv({0.5, 0.5}), 1.0, 0.5).value == doctest::Approx(2.0).epsilon(1e-14));
    // the vertex has a zero blended weight: G is defined there, DG is not
    CHECK(PowerDiversityFunction(1.0, 0.5).value(lam, std::vector<double>{1.0, 0.0}) == 1.0);
    CHECK_THROWS_AS(power_diversity(lam, wv({1.0, 0.0}), 1.0, 0.5), DomainError);
    const auto a0 = power_diversity(std::vector<double>{0.3, 0.7}, wv({0.9, 0.1}), 0.0, 0.8);
    CHECK(a0.value == doctest::Approx(oracle::power_diversity({0.3, 0.7}, {0.2, 0.8}, 0.0, 0.8)));
    CHECK(a0.gradient == std::vector<double>{0.0, 0.0});
    const std::vector<double> lam3{0.2, 0.3, 0.5};
    const auto pd = power_diversity(lam3, wv({0.6, 0.3, 0.1}), 0.6, 0.8);
    CHECK(pd.value == doctest::Approx(oracle::power_diversity(lam3, {0.6, 0.3, 0.1}, 0.6, 0.8)).epsilon(1e-14));
    CHECK_THROWS_AS(power_diversity(std::vector<double>{-1.0, -1.0}, wv({0.5, 0.5}), 0.5, 0.8), DomainError);
    CHECK_THROWS_AS(PowerDiversityFunction(1.2, 0.5), ConfigError);
    CHECK_THROWS_AS(PowerDiversityFunction(0.5, 1.0), ConfigError);
}

TEST_CASE("quadratic examples") {
    const auto q = quadratic(1.0, wv({0.5, 0.5}));
    CHECK(q.value == 0.5);
    CHECK(q.gradient == std::vector<double>{-1.0, -1.0});
    CHECK(quadratic(0.0, wv({1.0, 0.0})).value == -1.0);
    CHECK(quadratic(2.0, wv({0.25, 0.25, 0.5})).value == doctest::Approx(1.625).epsilon(1e-15));
}

TEST_CASE("rank weights") {
    const std::vector<double> x{0.2, 0.5, 0.3};
    const auto r = rank_weights(x);
    CHECK(r.sorted == std::vector<double>{0.5, 0.3, 0.2});
    CHECK(r.rank[2] == 1);
    CHECK(r.order == std::vector<std::size_t>{1, 2, 0});

    const auto t = rank_weights(std::vector<double>{0.4, 0.4, 0.2});
    CHECK(t.sorted == std::vector<double>{0.4, 0.4, 0.2});
    CHECK(t.counts == std::vector<std::size_t>{2, 2, 1});
    CHECK(t.order == std::vector<std::size_t>{0, 1, 2});

    const auto id = rank_weights(std::vector<double>{0.6, 0.3, 0.1});
    CHECK(id.order == std::vector<std::size_t>{0, 1, 2});
    CHECK(id.counts == std::vector<std::size_t>{1, 1, 1});

    std::mt19937_64 rng(3);
    for (int k = 0; k < 200; ++k) {
        const auto y = dirichlet(rng, 6, 0.0);
        const auto ry = rank_weights(y);
        auto sorted = y;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        CHECK(ry.sorted == sorted);
        CHECK(rank_weights(ry.sorted).sorted == ry.sorted);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(ry.sorted[ry.rank[i]] == y[i]);
    }
}

TEST_CASE("ranked hybrid examples") {
    const auto g = ranked_hybrid(1.0, wv({0.5, 0.3, 0.2}), 1, 2, 0.5, 2.0);
    CHECK(g.value == doctest::Approx(-0.5 * std::log(0.5) + 1 - 0.09).epsilon(1e-15));
    CHECK(g.value == doctest::Approx(oracle::ranked_hybrid(1.0, {0.5, 0.3, 0.2}, 1, 2, 0.5, 2.0)));

    const auto low = ranked_hybrid(0.01, wv({0.5, 0.3, 0.2}), 1, 2, 0.5, 2.0);
    CHECK(low.value == doctest::Approx(-0.5 * 0.5 * std::log(0.5) + 1 - 0.09).epsilon(1e-15));
    CHECK(low.gradient[0] == doctest::Approx(-0.5 * std::log(0.5) - 0.5));

    // tie between ranks 1 and 2 averages D_1G = -λ log 0.4 - λ and D_2G = -0.8
    const auto tied = ranked_hybrid(1.0, wv({0.4, 0.4, 0.2}), 1, 2, 0.5, 2.0);
    const double avg = 0.5 * ((-std::log(0.4) - 1.0) + (-0.8));
    CHECK(tied.gradient[0] == doctest::Approx(avg).epsilon(1e-15));
    CHECK(tied.gradient[1] == doctest::Approx(avg).epsilon(1e-15));
    CHECK(tied.gradient[2] == 0.0);

    CHECK_THROWS_AS(RankedHybridFunction(2, 2, 0.5, 1.0), ConfigError);
    CHECK_THROWS_AS(RankedHybridFunction(1, 2, 1.0, 0.5), ConfigError);
    CHECK_THROWS_AS(ranked_hybrid(1.0, wv({0.5, 0.5}), 1, 3, 0.5, 2.0), DomainError);
}

TEST_CASE("ranked hybrid reindexing conserves the weighted gradient sum") {
    std::mt19937_64 rng(19);
    const RankedHybridFunction g(2, 4, 0.5, 2.0);
    for (int k = 0; k < 500; ++k) {
        auto x = dirichlet(rng, 6, 1e-6);
        if (k % 5 == 0) x[1] = x[3];  // force ties
        const double s = std::accumulate(x.begin(), x.end(), 0.0);
        for (double& v : x) v /= s;
        const std::vector<double> lam{1.3};
        std::vector<double> grad(6);
        g.gradient(lam, x, grad);
        double by_asset = 0;
        for (std::size_t i = 0; i < 6; ++i) by_asset += x[i] * grad[i];
        const auto r = rank_weights(x);
        double by_rank = 0;
        for (std::size_t l = 0; l < 6; ++l) {
            double dl = 0;
            if (l < 2) dl = -1.3 * std::log(r.sorted[l]) - 1.3;
            else if (l < 4) dl = -2 * r.sorted[l];
            by_rank += r.sorted[l] * dl;
        }
        CHECK(by_asset == doctest::Approx(by_rank).epsilon(1e-13));
    }
}

TEST_CASE("gradients match central differences") {
    CHECK(worst_fd_error(EntropyFunction{}, 5, {1.3}, 1000, 1) < 1e-6);
    CHECK(worst_fd_error(QuadraticFunction{}, 5, {0.7}, 1000, 2) < 1e-6);
    CHECK(worst_fd_error(PowerDiversityFunction{0.6, 0.8}, 5, {0.1, 0.15, 0.2, 0.25, 0.3}, 1000, 3) < 1e-6);
    CHECK(worst_fd_error(PowerDiversityFunction{1.0, 0.5}, 5, {0.2}, 1000, 4) < 1e-6);
    CHECK(worst_fd_error(RankedHybridFunction{1, 3, 0.5, 2.0}, 5, {1.1}, 1000, 5) < 1e-6);
    CHECK(worst_fd_error(MarketFunction{}, 5, {1.0}, 10, 6) > 0.5);  // DG ≡ 1 is not a gradient
}

TEST_CASE("closed-form increments match oracle formulas") {
    const std::vector<double> b{0.6, 0.4}, e{0.5, 0.5};
    const EntropyFunction ent;
    const std::vector<double> one{1.0};
    CHECK(*ent.gamma_increment(one, one, b, e) == doctest::Approx(0.5 * (0.01 / 0.6 + 0.01 / 0.4)).epsilon(1e-14));
    const std::vector<double> two{2.0};
    CHECK(*ent.gamma_increment(one, two, b, e) ==
          doctest::Approx((0.6 * std::log(0.6) + 0.4 * std::log(0.4)) + 0.5 * 2 * (0.01 / 0.6 + 0.01 / 0.4)));
    const QuadraticFunction q;
    CHECK(*q.gamma_increment(one, two, b, e) == doctest::Approx(-1.0 + 0.02).epsilon(1e-14));
    CHECK_FALSE(negated(make_genfun("entropy"))->gamma_increment(one, one, b, e) ==
                ent.gamma_increment(one, one, b, e));
}

TEST_CASE("second-order term of power diversity is the quadratic form of the Hessian") {
    // -½ Σ H_ij Δ_i Δ_j with H from central second differences of G.
    const PowerDiversityFunction g(0.6, 0.8);
    const std::vector<double> lam{0.2, 0.3, 0.5};
    const std::vector<double> x{0.5, 0.3, 0.2}, dx{0.01, -0.004, -0.006};
    std::vector<double> xe(3);
    for (int i = 0; i < 3; ++i) xe[i] = x[i] + dx[i];
    const double h = 1e-4;
    double quad = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            auto pp = x, pm = x, mp = x, mm = x;
            pp[i] += h, pp[j] += h;
            pm[i] += h, pm[j] -= h;
            mp[i] -= h, mp[j] += h;
            mm[i] -= h, mm[j] -= h;
            const double hij = (g.value(lam, pp) - g.value(lam, pm) - g.value(lam, mp) + g.value(lam, mm)) / (4 * h * h);
            quad += hij * dx[i] * dx[j];
        }
    CHECK(*g.gamma_increment(lam, lam, x, xe) == doctest::Approx(-0.5 * quad).epsilon(1e-5));
}

TEST_CASE("concavity spot checks") {
    const auto ent = spot_check_conditions(EntropyFunction{}, 10000, 1);
    CHECK(ent.passed());
    CHECK(ent.lipschitz_estimate <= std::log(5.0) + 1e-12);
    const auto quad = spot_check_conditions(QuadraticFunction{}, 10000, 2);
    CHECK(quad.passed());
    CHECK(quad.lipschitz_estimate == doctest::Approx(1.0));
    const auto convex = spot_check_conditions(*negated(make_genfun("quadratic")), 2000, 3);
    CHECK_FALSE(convex.concavity_ok());
    REQUIRE(convex.witness);
    CHECK(convex.witness->g_mid < convex.witness->g_average);
    CHECK(spot_check_conditions(PowerDiversityFunction{0.6, 0.8}, 2000, 4).passed());
    CHECK(spot_check_conditions(RankedHybridFunction{1, 3, 0.5, 2.0}, 100, 5).local_time_omitted);
    CHECK_THROWS_AS(spot_check_conditions(EntropyFunction{}, 1, 1), ConfigError);
}

TEST_CASE("catalog") {
    CHECK(make_genfun("entropy")->name() == "entropy");
    CHECK(make_genfun("power_diversity", {{"alpha", 0.6}, {"p", 0.8}})->lambda_dim(7) == 7);
    CHECK(make_genfun("ranked_hybrid")->rank_based());
    CHECK(make_genfun("market")->value(std::vector<double>{1.0}, std::vector<double>{0.3, 0.7}) == 1.0);
    CHECK_THROWS_AS(make_genfun("nope"), ConfigError);
    CHECK_THROWS_AS(make_genfun("power_diversity", {{"alpha", 2.0}}), ConfigError);
    CHECK_THROWS_AS(make_genfun("entropy", {{"alpha", 1.0}}), ConfigError);

    const auto flipped = with_flipped_gradient(make_genfun("entropy"));
    const std::vector<double> lam{1.0}, x{0.3, 0.7};
    std::vector<double> a(2), b(2);
    make_genfun("entropy")->gradient(lam, x, a);
    flipped->gradient(lam, x, b);
    CHECK(b[0] == -a[0]);
    CHECK(flipped->value(lam, x) == make_genfun("entropy")->value(lam, x));
}
