#include <benchmark/benchmark.h>

#include "fungen/engine.hpp"
#include "fungen/simulate.hpp"

using namespace fungen;

namespace {

MarketPath path_for(benchmark::State& state) {
    return simulate_market(SimConfig::defaults(static_cast<std::size_t>(state.range(0)),
                                               static_cast<std::size_t>(state.range(1)), 7));
}

void BM_SimulateMarket(benchmark::State& state) {
    const auto cfg = SimConfig::defaults(static_cast<std::size_t>(state.range(0)),
                                         static_cast<std::size_t>(state.range(1)), 7);
    for (auto _ : state) benchmark::DoNotOptimize(simulate_market(cfg));
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_GammaDefect(benchmark::State& state) {
    const MarketPath p = path_for(state);
    const LambdaPath lam = build_lambda(LambdaSpec::exp_qv(100.0), p);
    const NormalizedGen g = normalize_at_start(make_genfun("entropy"), p, lam);
    for (auto _ : state) benchmark::DoNotOptimize(gamma_defect(g, p, lam));
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_GammaClosed(benchmark::State& state) {
    const MarketPath p = path_for(state);
    const LambdaPath lam = build_lambda(LambdaSpec::constant(1.0), p);
    const NormalizedGen g = normalize_at_start(make_genfun("entropy"), p, lam);
    for (auto _ : state) benchmark::DoNotOptimize(gamma_closed(g, p, lam));
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_BacktestAdditive(benchmark::State& state) {
    const MarketPath p = path_for(state);
    const LambdaPath lam = build_lambda(LambdaSpec::exp_deterministic(1e-4), p);
    const NormalizedGen g = normalize_at_start(make_genfun("entropy"), p, lam);
    for (auto _ : state) benchmark::DoNotOptimize(run_backtest(p, g, lam, StrategyMode::additive));
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_BacktestRanked(benchmark::State& state) {
    const MarketPath p = path_for(state);
    const LambdaPath lam = build_lambda(LambdaSpec::constant(1.0), p);
    const NormalizedGen g = normalize_at_start(
        make_genfun("ranked_hybrid", {{"d1", 3}, {"d2", 10}, {"xi_lo", 0.5}, {"xi_hi", 2.0}}), p, lam, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(run_backtest(p, g, lam, StrategyMode::multiplicative));
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

}  // namespace

BENCHMARK(BM_SimulateMarket)->Args({20, 2000})->Args({100, 2000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GammaDefect)->Args({20, 2000})->Args({100, 2000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GammaClosed)->Args({20, 2000})->Args({100, 2000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BacktestAdditive)->Args({20, 2000})->Args({100, 2000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BacktestRanked)->Args({20, 2000})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
