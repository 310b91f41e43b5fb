// Acceptance suite: runs every verification criterion on the canonical
// fixtures at the pinned resolutions and tolerances, printing one line per
// criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "scl/cli.hpp"
#include "scl/io.hpp"
#include "scl/simulate.hpp"

using namespace scl;
namespace fs = std::filesystem;

namespace {

struct Harness {
    int failed = 0;
    int total = 0;

    void report(int number, const std::string& name, bool pass, const std::string& detail) {
        ++total;
        if (!pass) ++failed;
        std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", number,
                    name.c_str(), detail.c_str());
        std::fflush(stdout);
    }

    int finish() {
        std::printf("acceptance: %d/%d criteria passed\n", total - failed, total);
        return failed == 0 ? 0 : 1;
    }
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const auto start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

ProblemSpec p0() {
    return make_problem(0.0, 0.0, 1.0, -6.0, 6.0, Expr::parse("1"),
                        Expr::parse("2+tanh(y+1)"), Expr::parse("2-tanh(y-1)"),
                        Expr::parse("y"),
                        Expr::parse("max(-(2+tanh(y+1)), min(2-tanh(y-1), y))"), 1e-8, 8.0);
}

ProblemSpec p0_jump() {
    return make_problem(0.0, 0.0, 1.0, -6.0, 6.0, Expr::parse("1"),
                        Expr::parse("2+tanh(y+1)"), Expr::parse("2-tanh(y-1)"),
                        Expr::parse("y"), Expr::parse("2*y"), 1e-8, 15.0);
}

struct Pipeline {
    ProblemSpec spec;
    Grid grid;
    CurvePair curves;
    TransformedTerminal tt;
    ValueSurface surface;
    FreeBoundaries fb;

    Pipeline(ProblemSpec sp, int nt, int ny, bool general)
        : spec(std::move(sp)),
          grid(spec.horizon, spec.band_lo, spec.band_hi, nt, ny),
          curves(compute_ab_curves(spec, grid)),
          tt(terminal_transform(spec, grid)),
          surface(solve_dynkin_game(spec, grid,
                                    general ? tt.g_tilde : terminal_values(spec, grid))),
          fb(extract_free_boundaries(surface, spec, curves)) {}
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// random smooth expression strings (same construction as the unit suite)
std::string gen_smooth(std::mt19937_64& rng, int depth) {
    std::uniform_real_distribution<double> lit(-1.5, 1.5);
    std::uniform_int_distribution<int> leaf_pick(0, 3);
    if (depth <= 0) {
        switch (leaf_pick(rng)) {
        case 0: return "t";
        case 1: return "y";
        default: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", lit(rng));
            return buf;
        }
        }
    }
    std::uniform_int_distribution<int> pick(0, 11);
    auto a = [&] { return gen_smooth(rng, depth - 1); };
    switch (pick(rng)) {
    case 0: return "(" + a() + " + " + a() + ")";
    case 1: return "(" + a() + " - " + a() + ")";
    case 2: return "(0.5 * " + a() + " * " + a() + ")";
    case 3: return "(" + a() + " / (1.5 + sin(" + a() + ")^2))";
    case 4: return "exp(sin(" + a() + "))";
    case 5: return "log(1.6 + sin(" + a() + "))";
    case 6: return "sqrt(1.2 + sin(" + a() + ")^2)";
    case 7: return "sin(" + a() + ")";
    case 8: return "cos(" + a() + ")";
    case 9: return "tanh(" + a() + ")";
    case 10: return "sech(" + a() + ")";
    default: return "(" + a() + ")^2";
    }
}

} // namespace

int main() {
    Harness h;

    // ---- criteria 1-3 share the reference P0 solve at 201 x 201 ----
    const double t0 = now_seconds();
    Pipeline p0ref(p0(), 201, 201, false);
    const double solve_seconds = now_seconds() - t0;
    const Grid& grid = p0ref.grid;

    {
        bool sandwich = true, complementarity = true;
        double worst = 0.0;
        for (size_t id = 0; id < grid.size(); ++id) {
            const ValueSurface& s = p0ref.surface;
            if (s.V[id] < s.lower[id] || s.V[id] > s.upper[id]) sandwich = false;
            const double gap = std::min(s.V[id] - s.lower[id], s.upper[id] - s.V[id]);
            const double m = std::min(std::fabs(s.residual[id]), gap);
            worst = std::max(worst, m);
            if (m >= 1e-6) complementarity = false;
        }
        const bool time_ok = solve_seconds < 10.0;
        h.report(1, "obstacle sandwich and complementarity",
                 sandwich && complementarity && time_ok,
                 "worst min(|residual|, gap) " + fmt(worst) + " < 1e-6, solve " +
                     fmt(solve_seconds) + " s < 10 s");
    }

    {
        bool ok = true;
        for (int n = 0; n < grid.nt() && ok; ++n) {
            const double a = p0ref.curves.a[n], b = p0ref.curves.b[n];
            for (int j = 0; j < grid.ny(); ++j) {
                const double y = grid.y(j);
                const Region r = p0ref.surface.region_at(n, j);
                if (y > a && y < b && r != Region::Continuation) ok = false;
                if (r == Region::LowerContact && !(y <= a + grid.dy())) ok = false;
                if (r == Region::UpperContact && !(y >= b - grid.dy())) ok = false;
            }
        }
        h.report(2, "region structure against the reference curves", ok,
                 std::string("strict interior continuation, contact within one cell of a, b"));
    }

    {
        double worst_v = 0.0, worst_b = 0.0;
        for (int n = 0; n < grid.nt(); ++n) {
            for (int j = 0; j < grid.ny(); ++j)
                worst_v = std::max(worst_v, std::fabs(p0ref.surface.at(n, j) +
                                                      p0ref.surface.at(n, grid.ny() - 1 - j)));
            worst_b = std::max(worst_b, std::fabs(p0ref.fb.a_tilde[n] + p0ref.fb.b_tilde[n]));
        }
        h.report(3, "antisymmetry oracle", worst_v < 1e-6 && worst_b < 2.0 * grid.dy(),
                 "max|V(t,y)+V(t,-y)| " + fmt(worst_v) + " < 1e-6, max|a~+b~| " + fmt(worst_b) +
                     " < " + fmt(2.0 * grid.dy()));
    }

    {
        double gap_a[4], gap_b[4];
        const int nys[4] = {101, 201, 401, 801};
        for (int k = 0; k < 4; ++k) {
            Pipeline p(p0(), 201, nys[k], false);
            auto rep = smooth_fit_check(p.surface, p.fb, p.spec);
            gap_a[k] = rep.gap_a_mid;
            gap_b[k] = rep.gap_b_mid;
        }
        bool ok = true;
        std::string ratios;
        for (int k = 0; k + 1 < 4; ++k) {
            const double ra = gap_a[k] / gap_a[k + 1];
            const double rb = gap_b[k] / gap_b[k + 1];
            if (!(ra >= 1.5 && ra <= 3.0 && rb >= 1.5 && rb <= 3.0)) ok = false;
            ratios += (k ? ", " : "") + fmt(ra);
        }
        h.report(4, "smooth fit decays first order under refinement", ok,
                 "Richardson ratios " + ratios + " in [1.5, 3] over three halvings");
    }

    // ---- criterion 5: game Monte Carlo cross-check ----
    {
        const double start = now_seconds();
        auto est = saddle_game_estimate(
            p0ref.spec, p0ref.fb, [&](double y) { return p0ref.tt.g_tilde_at(y); }, 0.0, 0.0,
            100000, 1e-3, 12345);
        const double elapsed = now_seconds() - start;
        const double ref = p0ref.surface.interp(0.0, 0.0);
        const double budget = 3.0 * est.value.se + scheme_bias(1e-3, grid.dy());
        const bool ok = std::fabs(est.value.mean - ref) <= budget && elapsed < 120.0;
        h.report(5, "game estimator matches the PDE value", ok,
                 "estimate " + fmt(est.value.mean) + " vs " + fmt(ref) + ", |diff| " +
                     fmt(std::fabs(est.value.mean - ref)) + " <= " + fmt(budget) + ", " +
                     fmt(elapsed) + " s < 120 s");
    }

    // ---- criterion 6: control Monte Carlo cross-check ----
    {
        WSurface ws = integrate_value(p0ref.surface, p0ref.spec, grid);
        HoldingCost hc = compute_holding_cost(ws, p0ref.fb, p0ref.spec, grid);
        auto bands = ReflectionBands::from(p0ref.fb);
        auto base = estimate_policy_cost(p0ref.spec, bands, hc, p0ref.tt, 0.0, 0.0, 100000,
                                         1e-3, 12345, TerminalPolicy::None);
        const double ref = ws.interp(0.0, 0.0);
        const double budget = 3.0 * base.se + scheme_bias(1e-3, grid.dy());
        bool ok = std::fabs(base.mean - ref) <= budget;
        std::string detail = "optimal cost " + fmt(base.mean) + " vs W " + fmt(ref) +
                             " within " + fmt(budget);

        double min_gap = 1e300;
        for (size_t i = 0; i < p0ref.fb.a_tilde.size(); ++i)
            min_gap = std::min(min_gap, p0ref.fb.b_tilde[i] - p0ref.fb.a_tilde[i]);
        const std::pair<const char*, ReflectionBands> policies[] = {
            {"shift+", bands.shifted(0.5)},
            {"shift-", bands.shifted(-0.5)},
            {"widened", bands.widened(0.5)},
            {"narrowed", bands.narrowed(std::min(0.5, 0.45 * min_gap))},
            {"frozen", bands.frozen_at_terminal()},
        };
        int ordered = 0;
        for (const auto& [name, pb] : policies) {
            auto est = estimate_policy_cost(p0ref.spec, pb, hc, p0ref.tt, 0.0, 0.0, 100000,
                                            1e-3, 12345, TerminalPolicy::None);
            if (est.mean >= base.mean - 2.0 * est.se) ++ordered;
        }
        ok = ok && ordered == 5;
        detail += ", perturbed policies ordered " + std::to_string(ordered) + "/5";
        h.report(6, "optimal control cost and policy ordering", ok, detail);
    }

    // ---- criterion 7: HJB trichotomy ----
    {
        WSurface ws = integrate_value(p0ref.surface, p0ref.spec, grid);
        HoldingCost hc = compute_holding_cost(ws, p0ref.fb, p0ref.spec, grid);
        auto rep = hjb_residual(ws, hc, p0ref.fb, p0ref.spec);
        const bool ok = rep.residual_ok && rep.outside_ok;
        h.report(7, "HJB trichotomy", ok,
                 "max|R| inside " + fmt(rep.max_abs_inside) + " < " + fmt(rep.hjb_tol) +
                     ", outside positive " + std::to_string(rep.outside_positive) + "/" +
                     std::to_string(rep.outside_nodes) + ", min outside " +
                     fmt(rep.min_outside));
    }

    // ---- criterion 8: terminal envelope fixture ----
    {
        Pipeline pj(p0_jump(), 201, 201, true);
        const Grid& jgrid = pj.grid;
        bool envelope_ok = true, equality_ok = true;
        for (int j = 0; j < jgrid.ny(); ++j) {
            const double x = jgrid.y(j);
            if (pj.tt.G_tilde[j] > pj.tt.G[j] + 1e-12) envelope_ok = false;
            if (x >= pj.tt.A + jgrid.dy() && x <= pj.tt.B - jgrid.dy() &&
                pj.tt.G_tilde[j] != pj.tt.G[j])
                equality_ok = false;
            if ((x < pj.tt.A - jgrid.dy() || x > pj.tt.B + jgrid.dy()) &&
                !(pj.tt.G_tilde[j] < pj.tt.G[j]))
                equality_ok = false;
        }
        const bool crossover_ok =
            std::fabs(pj.fb.a_tilde[jgrid.nt() - 1] - pj.tt.A) <= jgrid.dy() &&
            std::fabs(pj.fb.b_tilde[jgrid.nt() - 1] - pj.tt.B) <= jgrid.dy();

        WSurface ws = integrate_value(pj.surface, pj.spec, jgrid);
        HoldingCost hc = compute_holding_cost(ws, pj.fb, pj.spec, jgrid);
        auto bands = ReflectionBands::from(pj.fb);
        std::vector<double> none_costs, clamp_costs;
        size_t jumps = 0;
        estimate_policy_cost(pj.spec, bands, hc, pj.tt, 0.0, 0.0, 100000, 1e-3, 12345,
                             TerminalPolicy::None, pj.tt.A, pj.tt.B, &none_costs, nullptr);
        estimate_policy_cost(pj.spec, bands, hc, pj.tt, 0.0, 0.0, 100000, 1e-3, 12345,
                             TerminalPolicy::ClampAB, pj.tt.A, pj.tt.B, &clamp_costs, &jumps);
        std::vector<double> diff(none_costs.size());
        for (size_t i = 0; i < diff.size(); ++i) diff[i] = none_costs[i] - clamp_costs[i];
        auto d = summarize(diff);
        const bool clamp_ok = d.mean >= -2.0 * d.se;

        h.report(8, "terminal envelope and maturity jump",
                 envelope_ok && equality_ok && crossover_ok && clamp_ok,
                 "G~ <= G with equality on [A,B], a~(T)-A " +
                     fmt(pj.fb.a_tilde[jgrid.nt() - 1] - pj.tt.A) + ", clamp benefit " +
                     fmt(d.mean) + " +- " + fmt(d.se) + ", jump frequency " +
                     fmt(static_cast<double>(jumps) / static_cast<double>(diff.size())));
    }

    // ---- criterion 9: expression engine ----
    {
        std::mt19937_64 rng(424243);
        std::uniform_real_distribution<double> pt(-1.2, 1.2);
        std::uniform_int_distribution<int> var_pick(0, 1);
        int checked = 0, failures = 0, roundtrip_failures = 0;
        for (int i = 0; i < 1000; ++i) {
            const std::string s = gen_smooth(rng, 3);
            Expr e = Expr::parse(s);
            if (!e.same_tree(Expr::parse(Expr::parse(e.str()).str()))) ++roundtrip_failures;
            const Var v = var_pick(rng) == 0 ? Var::T : Var::Y;
            Expr dexp = e.derivative(v);
            for (int k = 0; k < 8 && checked <= i; ++k) {
                const double t = pt(rng), y = pt(rng);
                try {
                    const double sym = dexp.eval(t, y);
                    const double h_step = 1e-5;
                    const double tp = v == Var::T ? t + h_step : t;
                    const double tm = v == Var::T ? t - h_step : t;
                    const double yp = v == Var::Y ? y + h_step : y;
                    const double ym = v == Var::Y ? y - h_step : y;
                    const double fd = (e.eval(tp, yp) - e.eval(tm, ym)) / (2.0 * h_step);
                    if (!std::isfinite(sym) || !std::isfinite(fd)) continue;
                    if (std::fabs(e.eval(t, y)) > 1e3) continue;
                    if (std::fabs(sym - fd) / (1.0 + std::fabs(sym)) >= 1e-6) ++failures;
                    ++checked;
                } catch (const ExprEvalError&) {
                    continue;
                }
            }
        }
        h.report(9, "expression engine derivatives and round-trip",
                 failures == 0 && roundtrip_failures == 0 && checked >= 900,
                 std::to_string(checked) + " derivative checks, " + std::to_string(failures) +
                     " failures, " + std::to_string(roundtrip_failures) +
                     " round-trip failures");
    }

    // ---- criterion 10: byte-identical verification reports ----
    {
        const fs::path dir = fs::temp_directory_path() / "scl_acceptance_determinism";
        fs::remove_all(dir);
        fs::create_directories(dir);
        const std::string cfg_path = (dir / "p0.json").string();
        {
            std::ofstream cfg(cfg_path);
            cfg << R"json({
  "problem": {
    "c": 0.0, "d": 0.0, "T": 1.0, "band": [-6.0, 6.0],
    "sigma": "1",
    "f1": "2 + tanh(y+1)",
    "f2": "2 - tanh(y-1)",
    "h": "y",
    "g": "max(-(2+tanh(y+1)), min(2-tanh(y-1), y))",
    "bound_M": 8.0
  },
  "grid": { "nt": 201, "ny": 201 },
  "mc": { "n_paths": 20000, "dt": 0.002, "seed": 12345, "start": [0.0, 0.0],
          "perturbation": 0.5, "max_ci_halfwidth": 0.05 },
  "output": { "dir": ")json" << (dir / "out").string() << R"json(" }
})json";
        }
        auto read_report = [&] {
            std::ifstream is(dir / "out" / "verify_report.txt");
            std::ostringstream buf;
            buf << is.rdbuf();
            return buf.str();
        };
        auto quiet_verify = [&] {
            std::ostringstream sink;
            auto* old = std::cout.rdbuf(sink.rdbuf());
            const int rc = run_cli({"verify", cfg_path});
            std::cout.rdbuf(old);
            return rc;
        };
        const int rc1 = quiet_verify();
        const std::string first = read_report();
        const int rc2 = quiet_verify();
        const std::string second = read_report();
        const bool ok = rc1 == 0 && rc2 == 0 && !first.empty() && first == second;
        h.report(10, "verification runs are byte-identical", ok,
                 "exit codes " + std::to_string(rc1) + "/" + std::to_string(rc2) +
                     ", report bytes " + std::to_string(first.size()) +
                     (first == second ? " identical" : " DIFFER"));
    }

    return h.finish();
}
