#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fixtures.hpp"
#include "scl/simulate.hpp"

using namespace scl;

namespace {

struct McPipeline {
    ProblemSpec spec;
    Grid grid;
    CurvePair curves;
    TransformedTerminal tt;
    ValueSurface surface;
    FreeBoundaries fb;
    WSurface ws;
    HoldingCost hc;

    McPipeline(const ProblemSpec& sp, int nt, int ny, bool general_terminal = false)
        : spec(sp),
          grid(sp.horizon, sp.band_lo, sp.band_hi, nt, ny),
          curves(compute_ab_curves(sp, grid)),
          tt(terminal_transform(sp, grid)),
          surface(solve_dynkin_game(sp, grid,
                                    general_terminal ? tt.g_tilde : terminal_values(sp, grid))),
          fb(extract_free_boundaries(surface, sp, curves)),
          ws(integrate_value(surface, sp, grid)),
          hc(compute_holding_cost(ws, fb, sp, grid)) {}
};

const McPipeline& p0_pipeline() {
    static McPipeline p(fixtures::p0(), 101, 121);
    return p;
}

const McPipeline& p0_jump_pipeline() {
    static McPipeline p(fixtures::p0_jump(), 101, 121, true);
    return p;
}

} // namespace

TEST_CASE("driftless paths are martingales") {
    auto spec = fixtures::p0();
    const int n = 20000;
    std::vector<double> finals(n);
    for (int p = 0; p < n; ++p) {
        Path path = simulate_uncontrolled(spec, 0.0, 0.0, 0.01, 77, p);
        finals[p] = path.states.back();
    }
    auto est = summarize(finals);
    // zero drift: E[Y_T] = 0 within 3 sigma sqrt(T)/sqrt(N)
    CHECK(std::fabs(est.mean) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("nearly deterministic diffusion follows the drift flow") {
    // sigma tiny: dY = (c y + d) dt, closed form (y0 + d/c) e^{cT} - d/c
    auto spec = make_problem(0.5, 0.1, 1.0, -6.0, 6.0, Expr::parse("0.001"),
                             Expr::parse("2+tanh(y+1)"), Expr::parse("2-tanh(y-1)"),
                             Expr::parse("y"), Expr::parse("0*y"), 1e-8, 8.0);
    Path path = simulate_uncontrolled(spec, 0.0, 1.0, 1e-3, 5, 0);
    const double exact = (1.0 + 0.2) * std::exp(0.5) - 0.2;
    CHECK(path.stop_kind == StopKind::Maturity);
    CHECK(std::fabs(path.states.back() - exact) < 0.01);
}

TEST_CASE("fixed seed replays a bitwise-identical path") {
    auto spec = fixtures::p0();
    Path a = simulate_uncontrolled(spec, 0.0, 0.3, 1e-2, 42, 7);
    Path b = simulate_uncontrolled(spec, 0.0, 0.3, 1e-2, 42, 7);
    REQUIRE(a.states.size() == b.states.size());
    CHECK(std::memcmp(a.states.data(), b.states.data(),
                      a.states.size() * sizeof(double)) == 0);
    Path c = simulate_uncontrolled(spec, 0.0, 0.3, 1e-2, 43, 7);
    CHECK(a.states.back() != c.states.back());
}

TEST_CASE("strong outward drift records a band exit with the contact payoff side") {
    auto spec = make_problem(4.0, 0.0, 1.0, -6.0, 6.0, Expr::parse("1"),
                             Expr::parse("2+tanh(y+1)"), Expr::parse("2-tanh(y-1)"),
                             Expr::parse("y"), Expr::parse("0*y"), 1e-8, 8.0);
    Path path = simulate_uncontrolled(spec, 0.0, 3.0, 1e-3, 11, 0);
    CHECK(path.band_exit);
    CHECK(path.stop_kind == StopKind::HitUpper);
    CHECK(path.stop_time < 1.0);
    CHECK(path.states.back() >= 6.0);
}

TEST_CASE("deep contact start stops immediately with the exact obstacle payoff") {
    const auto& p = p0_pipeline();
    const double s = 0.5;
    const double x = p.fb.a_at(s) - 1.0;
    auto est = saddle_game_estimate(
        p.spec, p.fb, [&](double y) { return p.tt.g_tilde_at(y); }, s, x, 1000, 1e-3, 9);
    CHECK(est.value.mean == -p.spec.f1(s, x));
    CHECK(est.value.se == 0.0);
    CHECK(est.stopped_lower == 1000);
}

TEST_CASE("game estimate at the origin matches the PDE value") {
    const auto& p = p0_pipeline();
    auto est = saddle_game_estimate(
        p.spec, p.fb, [&](double y) { return p.tt.g_tilde_at(y); }, 0.0, 0.0, 20000, 2e-3,
        1234);
    const double ref = p.surface.interp(0.0, 0.0);
    const double budget = 3.0 * est.value.se + scheme_bias(2e-3, p.grid.dy());
    INFO("estimate " << est.value.mean << " +- " << est.value.se << " vs " << ref);
    CHECK(std::fabs(est.value.mean - ref) <= budget);
    // the PDE value itself vanishes at the origin by antisymmetry
    CHECK(std::fabs(ref) < 1e-6);
}

TEST_CASE("stopping the maximizer immediately is never better for it") {
    const auto& p = p0_pipeline();
    auto terminal = [&](double y) { return p.tt.g_tilde_at(y); };
    auto saddle = saddle_game_estimate(p.spec, p.fb, terminal, 0.0, 0.0, 5000, 2e-3, 55);
    GameEstimatorOptions imm;
    imm.p2_stops_immediately = true;
    auto quit = saddle_game_estimate(p.spec, p.fb, terminal, 0.0, 0.0, 5000, 2e-3, 55, imm);
    CHECK(quit.value.mean <= saddle.value.mean + 3.0 * saddle.value.se);
    CHECK(quit.value.mean <= p.surface.interp(0.0, 0.0) + 3.0 * saddle.value.se);
}

TEST_CASE("standard error shrinks like the square root of the path count") {
    const auto& p = p0_pipeline();
    auto terminal = [&](double y) { return p.tt.g_tilde_at(y); };
    auto e1 = saddle_game_estimate(p.spec, p.fb, terminal, 0.0, 0.0, 4000, 4e-3, 13);
    auto e2 = saddle_game_estimate(p.spec, p.fb, terminal, 0.0, 0.0, 8000, 4e-3, 13);
    const double ratio = e1.value.se / e2.value.se;
    CHECK(ratio > std::sqrt(2.0) * 0.8);
    CHECK(ratio < std::sqrt(2.0) * 1.2);
}

TEST_CASE("estimator input validation") {
    const auto& p = p0_pipeline();
    CHECK_THROWS_AS(saddle_game_estimate(
                        p.spec, p.fb, [](double) { return 0.0; }, 0.0, 0.0, 0, 1e-3, 1),
                    Error);
    CHECK_THROWS_AS(simulate_uncontrolled(p.spec, 0.0, 0.0, 0.0003, 1, 0), Error);
}

TEST_CASE("start below the band jumps onto the lower boundary") {
    const auto& p = p0_pipeline();
    auto bands = ReflectionBands::from(p.fb);
    const double x = bands.lower_at(0.0) - 0.7;
    auto path = simulate_reflected(p.spec, bands, 0.0, x, 1e-3, 3, 0, TerminalPolicy::None);
    REQUIRE(path.jumps.size() == 1);
    CHECK(path.jumps[0].side == +1);
    CHECK(path.jumps[0].delta == bands.lower_at(0.0) - x);
    CHECK(path.states.front() == bands.lower_at(0.0));
    CHECK(path.a1.front() == path.jumps[0].delta);
}

TEST_CASE("zero-noise path with constant bands never reflects") {
    auto spec = make_problem(0.0, 0.0, 1.0, -6.0, 6.0, Expr::parse("0.0000001"),
                             Expr::parse("2+tanh(y+1)"), Expr::parse("2-tanh(y-1)"),
                             Expr::parse("y"), Expr::parse("0*y"), 1e-10, 8.0);
    ReflectionBands bands;
    bands.t = {0.0, 1.0};
    bands.lower = {-1.0, -1.0};
    bands.upper = {1.0, 1.0};
    auto path = simulate_reflected(spec, bands, 0.0, 0.2, 1e-3, 21, 0, TerminalPolicy::None);
    CHECK(path.jumps.empty());
    CHECK(path.a1.back() == 0.0);
    CHECK(path.a2.back() == 0.0);
    CHECK(std::fabs(path.states.back() - 0.2) < 1e-4);
}

TEST_CASE("discrete reflection: complementarity and minimal decomposition hold exactly") {
    const auto& p = p0_pipeline();
    auto bands = ReflectionBands::from(p.fb);
    int reflections = 0;
    for (uint64_t pi = 0; pi < 20; ++pi) {
        auto path =
            simulate_reflected(p.spec, bands, 0.0, 0.0, 1e-3, 99, pi, TerminalPolicy::None);
        double comp_sum = 0.0;
        for (size_t k = 1; k + 1 < path.times.size(); ++k) {
            const double da1 = path.a1[k] - path.a1[k - 1];
            const double da2 = path.a2[k] - path.a2[k - 1];
            CHECK_FALSE((da1 > 0.0 && da2 > 0.0));
            comp_sum += (path.states[k] - bands.lower_at(path.times[k])) * da1;
            if (da1 > 0.0 || da2 > 0.0) ++reflections;
            // the path stays inside the bands before maturity
            CHECK(path.states[k] >= bands.lower_at(path.times[k]) - 1e-12);
            CHECK(path.states[k] <= bands.upper_at(path.times[k]) + 1e-12);
        }
        CHECK(comp_sum == 0.0);
    }
    CHECK(reflections > 0);
}

TEST_CASE("terminal clamp records the jump and prices it by the trapezoid rule") {
    const auto& p = p0_jump_pipeline();
    auto bands = ReflectionBands::from(p.fb);
    bool exercised = false;
    for (uint64_t pi = 0; pi < 200 && !exercised; ++pi) {
        auto path = simulate_reflected(p.spec, bands, 0.0, 0.0, 1e-3, 7, pi,
                                       TerminalPolicy::ClampAB, p.tt.A, p.tt.B);
        if (path.terminal_jump_side == 0) continue;
        exercised = true;
        auto cost = evaluate_cost(path, p.spec, p.hc, p.tt);
        if (path.terminal_jump_side < 0) {
            CHECK(path.terminal_jump == path.terminal_pre - p.tt.B);
            CHECK(path.states.back() == p.tt.B);
            // independent fine trapezoid of the jump price
            const double T = p.spec.horizon;
            const int m = 2000;
            const double h = path.terminal_jump / m;
            double ref = 0.5 * (p.spec.f2(T, p.tt.B) + p.spec.f2(T, path.terminal_pre));
            for (int i = 1; i < m; ++i) ref += p.spec.f2(T, p.tt.B + i * h);
            ref *= h * std::exp(-p.spec.c * T);
            // the path jump is priced on grid-cell panels: second-order agreement
            const double jump_part = cost.jump;
            CHECK(std::fabs(jump_part - ref) < 1e-4);
        } else {
            CHECK(path.terminal_jump == p.tt.A - path.terminal_pre);
            CHECK(path.states.back() == p.tt.A);
        }
    }
    CHECK(exercised);
}

TEST_CASE("zero-control path cost reduces to holding plus terminal") {
    auto spec = make_problem(0.0, 0.0, 1.0, -6.0, 6.0, Expr::parse("0.0000001"),
                             Expr::parse("2+tanh(y+1)"), Expr::parse("2-tanh(y-1)"),
                             Expr::parse("y"),
                             Expr::parse("max(-(2+tanh(y+1)), min(2-tanh(y-1), y))"), 1e-10,
                             8.0);
    // reuse the canonical holding cost and terminal objects: the cost rule
    // only reads H, G, f1, f2 from them
    const auto& p = p0_pipeline();
    ReflectionBands bands;
    bands.t = {0.0, 1.0};
    bands.lower = {-1.5, -1.5};
    bands.upper = {1.5, 1.5};
    auto path = simulate_reflected(spec, bands, 0.0, 0.3, 1e-3, 4, 0, TerminalPolicy::None);
    auto cost = evaluate_cost(path, spec, p.hc, p.tt);
    CHECK(cost.control_lower == 0.0);
    CHECK(cost.control_upper == 0.0);
    CHECK(cost.jump == 0.0);
    CHECK(cost.terminal == p.tt.G_at(path.states.back()));
    // X is frozen at 0.3, so the holding part is the time integral of H there
    double ref = 0.0;
    const int m = 4000;
    for (int i = 0; i < m; ++i) {
        const double t0 = i / static_cast<double>(m), t1 = (i + 1) / static_cast<double>(m);
        ref += 0.5 * (p.hc.interp(t0, 0.3) + p.hc.interp(t1, 0.3)) / m;
    }
    CHECK(std::fabs(cost.holding - ref) < 2e-3);
}

TEST_CASE("pure-jump path charges exactly the initial jump integral") {
    // small upward drift walks the path off the boundary after the jump
    auto spec = make_problem(0.0, 0.1, 1.0, -6.0, 6.0, Expr::parse("0.0000001"),
                             Expr::parse("2+tanh(y+1)"), Expr::parse("2-tanh(y-1)"),
                             Expr::parse("y"), Expr::parse("0*y"), 1e-10, 8.0);
    const auto& p = p0_pipeline();
    ReflectionBands bands;
    bands.t = {0.0, 1.0};
    bands.lower = {-1.0, -1.0};
    bands.upper = {1.0, 1.0};
    const double x0 = -2.4;
    auto path = simulate_reflected(spec, bands, 0.0, x0, 1e-3, 4, 0, TerminalPolicy::None);
    auto cost = evaluate_cost(path, spec, p.hc, p.tt);
    CHECK(cost.control_lower == 0.0);
    CHECK(cost.control_upper == 0.0);
    const int m = 4000;
    const double h = (-1.0 - x0) / m;
    double ref = 0.5 * (spec.f1(0.0, x0) + spec.f1(0.0, -1.0));
    for (int i = 1; i < m; ++i) ref += spec.f1(0.0, x0 + i * h);
    ref *= h;
    // the path prices the jump on grid-cell panels: agreement to the
    // trapezoid error (span/12) * cell^2 * max|f1''|
    const double quad_tol =
        1.4 / 12.0 * p.hc.grid.dy() * p.hc.grid.dy() * 0.8 + 1e-9;
    CHECK(std::fabs(cost.jump - ref) < quad_tol);
}

TEST_CASE("stored-path costs and the streaming estimator agree bitwise") {
    const auto& p = p0_pipeline();
    auto bands = ReflectionBands::from(p.fb);
    const int n = 64;
    std::vector<ControlledPath> paths;
    paths.reserve(n);
    for (int i = 0; i < n; ++i)
        paths.push_back(simulate_reflected(p.spec, bands, 0.0, 0.0, 2e-3, 2024,
                                           static_cast<uint64_t>(i), TerminalPolicy::None));
    auto batch = evaluate_cost(paths, p.spec, p.hc, p.tt);
    auto stream = estimate_policy_cost(p.spec, bands, p.hc, p.tt, 0.0, 0.0, n, 2e-3, 2024,
                                       TerminalPolicy::None);
    CHECK(std::memcmp(&batch.mean, &stream.mean, sizeof(double)) == 0);
    CHECK(std::memcmp(&batch.se, &stream.se, sizeof(double)) == 0);
}

TEST_CASE("optimal policy cost matches W at the origin") {
    const auto& p = p0_pipeline();
    auto bands = ReflectionBands::from(p.fb);
    auto est = estimate_policy_cost(p.spec, bands, p.hc, p.tt, 0.0, 0.0, 20000, 2e-3, 31415,
                                    TerminalPolicy::None);
    const double ref = p.ws.interp(0.0, 0.0); // zero by construction
    const double budget = 3.0 * est.se + scheme_bias(2e-3, p.grid.dy());
    INFO("cost " << est.mean << " +- " << est.se << " vs W " << ref);
    CHECK(ref == 0.0);
    CHECK(std::fabs(est.mean - ref) <= budget);
}

TEST_CASE("verification battery passes on the symmetric fixture") {
    const auto& p = p0_pipeline();
    VerifyConfig config;
    config.n_paths = 5000;
    config.dt = 2e-3;
    config.seed = 777;
    config.max_ci_halfwidth = 0.2;
    auto report = verify_optimality(p.spec, p.surface, p.ws, p.hc, p.fb, p.tt, config);
    INFO(report.text());
    CHECK(report.passed);
    for (const auto& row : report.rows) CHECK(row.status != CheckStatus::Fail);
    CHECK(report.find("game-mc-vs-value") != nullptr);
    CHECK(report.find("control-mc-vs-w") != nullptr);
    CHECK(report.find("policy-frozen") != nullptr);
    CHECK(report.find("terminal-clamp-benefit") == nullptr);
}

TEST_CASE("verification battery covers the terminal jump on the envelope fixture") {
    const auto& p = p0_jump_pipeline();
    VerifyConfig config;
    config.n_paths = 4000;
    config.dt = 2e-3;
    config.seed = 999;
    config.max_ci_halfwidth = 0.2;
    config.general_terminal = true;
    auto report = verify_optimality(p.spec, p.surface, p.ws, p.hc, p.fb, p.tt, config);
    INFO(report.text());
    CHECK(report.passed);
    const auto* clamp = report.find("terminal-clamp-benefit");
    REQUIRE(clamp != nullptr);
    CHECK(clamp->status == CheckStatus::Pass);
}

TEST_CASE("identical configuration renders a byte-identical report") {
    const auto& p = p0_pipeline();
    VerifyConfig config;
    config.n_paths = 500;
    config.dt = 4e-3;
    config.seed = 31337;
    config.max_ci_halfwidth = 1.0;
    auto a = verify_optimality(p.spec, p.surface, p.ws, p.hc, p.fb, p.tt, config);
    auto b = verify_optimality(p.spec, p.surface, p.ws, p.hc, p.fb, p.tt, config);
    CHECK(a.text() == b.text());
}

TEST_CASE("tiny path counts flag inconclusive confidence intervals, not failures") {
    const auto& p = p0_pipeline();
    VerifyConfig config;
    config.n_paths = 10;
    config.dt = 4e-3;
    config.seed = 5;
    config.max_ci_halfwidth = 0.01;
    auto report = verify_optimality(p.spec, p.surface, p.ws, p.hc, p.fb, p.tt, config);
    bool any_inconclusive = false;
    for (const auto& row : report.rows) {
        CHECK(row.status != CheckStatus::Fail);
        if (row.status == CheckStatus::Inconclusive) any_inconclusive = true;
    }
    CHECK(any_inconclusive);
    CHECK(report.passed);
}

TEST_CASE("cone probe: a degenerate cone changes nothing, a real one obeys the ordering") {
    const auto& p = p0_pipeline();
    ConeProbeConfig cfg;
    cfg.n_samples = 2;
    cfg.n_paths = 10000;
    cfg.dt = 1e-3;
    cfg.eta = 0.0;
    auto degenerate = cone_monotonicity_probe(p.spec, p.grid, p.surface, p.fb, cfg);
    CHECK(degenerate.all_hold);
    for (const auto& sample : degenerate.samples) {
        CHECK(sample.f_cone == sample.f_region);
        CHECK(sample.f_cone_se == sample.f_region_se);
    }

    cfg.eta = 1.0;
    auto probe = cone_monotonicity_probe(p.spec, p.grid, p.surface, p.fb, cfg);
    REQUIRE(probe.samples.size() == 4);
    for (const auto& sample : probe.samples) {
        INFO("side " << (sample.lower_side ? "lower" : "upper") << " s=" << sample.s
                     << " x=" << sample.x << " F_region=" << sample.f_region
                     << " F_cone=" << sample.f_cone << " +- " << sample.f_cone_se);
        if (sample.lower_side)
            CHECK(sample.f_cone >= sample.f_region - 3.0 * sample.f_cone_se);
        else
            CHECK(sample.f_cone <= sample.f_region + 3.0 * sample.f_cone_se);
    }
    CHECK(probe.all_hold);
}
