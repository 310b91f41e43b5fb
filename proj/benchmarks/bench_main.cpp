#include <benchmark/benchmark.h>

#include "scl/simulate.hpp"

using namespace scl;

namespace {

ProblemSpec reference_problem() {
    return make_problem(0.0, 0.0, 1.0, -6.0, 6.0, Expr::parse("1"),
                        Expr::parse("2+tanh(y+1)"), Expr::parse("2-tanh(y-1)"),
                        Expr::parse("y"),
                        Expr::parse("max(-(2+tanh(y+1)), min(2-tanh(y-1), y))"), 1e-8, 8.0);
}

struct SolvedFixture {
    ProblemSpec spec = reference_problem();
    Grid grid{1.0, -6.0, 6.0, 201, 201};
    CurvePair curves = compute_ab_curves(spec, grid);
    TransformedTerminal tt = terminal_transform(spec, grid);
    ValueSurface surface = solve_dynkin_game(spec, grid, terminal_values(spec, grid));
    FreeBoundaries fb = extract_free_boundaries(surface, spec, curves);
};

const SolvedFixture& fixture() {
    static SolvedFixture f;
    return f;
}

} // namespace

static void BM_ExprEval(benchmark::State& state) {
    Expr e = Expr::parse("max(-(2+tanh(y+1)), min(2-tanh(y-1), y))");
    double y = -2.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(e.eval(0.5, y));
        y += 1e-6;
    }
}
BENCHMARK(BM_ExprEval);

static void BM_ExprDerivativeEval(benchmark::State& state) {
    Expr d = Expr::parse("2+tanh(y+1)").derivative(Var::Y).derivative(Var::Y);
    double y = -2.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(d.eval(0.5, y));
        y += 1e-6;
    }
}
BENCHMARK(BM_ExprDerivativeEval);

static void BM_SolveDynkinGame(benchmark::State& state) {
    auto spec = reference_problem();
    const int n = static_cast<int>(state.range(0));
    Grid grid(1.0, -6.0, 6.0, n, n);
    auto terminal = terminal_values(spec, grid);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_dynkin_game(spec, grid, terminal));
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_SolveDynkinGame)->Arg(51)->Arg(101)->Arg(201)->Arg(401)->Complexity();

static void BM_ExtractBoundaries(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_free_boundaries(f.surface, f.spec, f.curves));
    }
}
BENCHMARK(BM_ExtractBoundaries);

static void BM_IntegrateValue(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(integrate_value(f.surface, f.spec, f.grid));
    }
}
BENCHMARK(BM_IntegrateValue);

static void BM_GameEstimatorPaths(benchmark::State& state) {
    const auto& f = fixture();
    const int paths = static_cast<int>(state.range(0));
    uint64_t seed = 1;
    for (auto _ : state) {
        auto est = saddle_game_estimate(
            f.spec, f.fb, [&](double y) { return f.tt.g_tilde_at(y); }, 0.0, 0.0, paths, 1e-3,
            seed++);
        benchmark::DoNotOptimize(est);
    }
    state.SetItemsProcessed(state.iterations() * paths);
}
BENCHMARK(BM_GameEstimatorPaths)->Arg(256)->Arg(1024);

static void BM_ReflectedPaths(benchmark::State& state) {
    const auto& f = fixture();
    static WSurface ws = integrate_value(f.surface, f.spec, f.grid);
    static HoldingCost hc = compute_holding_cost(ws, f.fb, f.spec, f.grid);
    auto bands = ReflectionBands::from(f.fb);
    const int paths = static_cast<int>(state.range(0));
    uint64_t seed = 1;
    for (auto _ : state) {
        auto est = estimate_policy_cost(f.spec, bands, hc, f.tt, 0.0, 0.0, paths, 1e-3,
                                        seed++, TerminalPolicy::None);
        benchmark::DoNotOptimize(est);
    }
    state.SetItemsProcessed(state.iterations() * paths);
}
BENCHMARK(BM_ReflectedPaths)->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
