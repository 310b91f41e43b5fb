#include "scl/cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "scl/config.hpp"
#include "scl/io.hpp"
#include "scl/simulate.hpp"

namespace scl {

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_override;
    bool general_terminal = false;
    bool dump_config = false;
    uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("config", flags.config_path, "run configuration (JSON)")->required();
    cmd->add_flag("--general-terminal", flags.general_terminal,
                  "relax the terminal sandwich and solve with the envelope payoff");
    cmd->add_flag("--dump-config", flags.dump_config,
                  "print the canonical configuration and exit");
    cmd->add_option("--seed", flags.seed, "override the Monte Carlo seed")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", flags.out_override, "override the output directory");
}

RunConfig load_with_flags(const CommonFlags& flags) {
    RunConfig cfg = load_config(flags.config_path);
    if (flags.general_terminal) {
        cfg.general_terminal = true;
        cfg.mc.general_terminal = true;
    }
    if (flags.seed_set) cfg.mc.seed = flags.seed;
    if (!flags.out_override.empty()) cfg.out_dir = flags.out_override;
    return cfg;
}

struct Solved {
    ProblemSpec spec;
    Grid grid;
    CurvePair curves;
    TransformedTerminal tt;
    ValueSurface surface;
    FreeBoundaries fb;
};

TransformedTerminal make_terminal(const RunConfig& cfg, const ProblemSpec& spec,
                                  const Grid& grid) {
    if (cfg.general_terminal) return terminal_transform(spec, grid, cfg.root_tol);
    // a sandwiched payoff may still touch the obstacles; the envelope is the
    // payoff either way, and the crossover search only matters for the clamp
    try {
        return terminal_transform(spec, grid, cfg.root_tol);
    } catch (const Error&) {
        return plain_terminal(spec, grid);
    }
}

int validate_or_fail(const RunConfig& cfg, const ProblemSpec& spec, const Grid& grid) {
    ValidationOptions opts;
    opts.require_terminal_sandwich = !cfg.general_terminal;
    auto report = validate_problem(spec, grid, opts);
    if (!report.passed) {
        std::cerr << "assumption validation failed:\n" << report.summary();
        return 2;
    }
    return 0;
}

Solved solve_pipeline(const RunConfig& cfg) {
    Solved out{cfg.build_problem(),
               cfg.build_grid(),
               {},
               {},
               ValueSurface{Grid(1.0, -1.0, 1.0, 2, 3), SolverParams{}, {}, {}, {}, {}, {}, {}},
               {}};
    out.curves = compute_ab_curves(out.spec, out.grid, cfg.root_tol);
    out.tt = make_terminal(cfg, out.spec, out.grid);
    const std::vector<double> terminal =
        cfg.general_terminal ? out.tt.g_tilde : terminal_values(out.spec, out.grid);
    out.surface = solve_dynkin_game(out.spec, out.grid, terminal, cfg.solver);
    out.fb = extract_free_boundaries(out.surface, out.spec, out.curves);
    return out;
}

std::string residual_summary(const ResidualField& field, const SolverParams& params) {
    std::ostringstream os;
    os << "metric,value\n";
    os << "max_continuation_abs," << format17(field.max_continuation_abs) << "\n";
    os << "max_lower_excess," << format17(field.max_lower_excess) << "\n";
    os << "max_upper_excess," << format17(field.max_upper_excess) << "\n";
    os << "misclassified," << field.misclassified << "\n";
    os << "residual_tol," << format17(params.residual_tol) << "\n";
    os << "classification_ok," << (field.classification_ok ? 1 : 0) << "\n";
    return os.str();
}

int cmd_solve(const RunConfig& cfg) {
    const ProblemSpec spec = cfg.build_problem();
    const Grid grid = cfg.build_grid();
    if (int rc = validate_or_fail(cfg, spec, grid)) return rc;

    Solved run = solve_pipeline(cfg);
    auto field = pde_residual(run.surface, run.spec);

    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string dir = cfg.out_dir + "/";
    write_surface_csv(dir + "V.csv", run.surface);
    write_boundaries_csv(dir + "boundaries.csv", run.fb);
    write_text(dir + "residuals.csv", residual_summary(field, cfg.solver));
    write_curves_csv(dir + "curves.csv", run.curves);
    write_terminal_csv(dir + "terminal.csv", run.tt, terminal_values(run.spec, run.grid));
    write_cache(dir + "cache.bin", run.surface, run.fb);

    std::cout << "solve: wrote V.csv, boundaries.csv, residuals.csv, curves.csv, "
                 "terminal.csv, cache.bin to "
              << cfg.out_dir << "\n";
    std::cout << "solve: classification "
              << (field.classification_ok ? "clean" : "VIOLATIONS PRESENT") << ", max "
              << "continuation residual " << format17(field.max_continuation_abs) << "\n";
    return 0;
}

int cmd_verify(const RunConfig& cfg) {
    const ProblemSpec spec = cfg.build_problem();
    const Grid grid = cfg.build_grid();
    if (int rc = validate_or_fail(cfg, spec, grid)) return rc;

    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string cache_path = cfg.out_dir + "/cache.bin";

    CurvePair curves = compute_ab_curves(spec, grid, cfg.root_tol);
    TransformedTerminal tt = make_terminal(cfg, spec, grid);

    ValueSurface surface{grid, cfg.solver, {}, {}, {}, {}, {}, {}};
    FreeBoundaries fb;
    bool from_cache = false;
    if (file_exists(cache_path)) {
        try {
            CachedSolve cached = read_cache(cache_path, spec, cfg.solver);
            if (cached.surface.grid.nt() == grid.nt() && cached.surface.grid.ny() == grid.ny()) {
                surface = std::move(cached.surface);
                fb = std::move(cached.fb);
                from_cache = true;
            }
        } catch (const IoError&) {
            from_cache = false; // stale or foreign cache: solve inline below
        }
    }
    if (!from_cache) {
        const std::vector<double> terminal =
            cfg.general_terminal ? tt.g_tilde : terminal_values(spec, grid);
        surface = solve_dynkin_game(spec, grid, terminal, cfg.solver);
        fb = extract_free_boundaries(surface, spec, curves);
        write_cache(cache_path, surface, fb);
    }

    WSurface ws = integrate_value(surface, spec, grid);
    HoldingCost hc = compute_holding_cost(ws, fb, spec, grid);
    HJBReport hjb = hjb_residual(ws, hc, fb, spec, cfg.hjb_tol);
    const double mismatch = holding_cost_curve_mismatch(ws, fb, spec, grid);
    SmoothFitReport fit = smooth_fit_check(surface, fb, spec);
    VerificationReport mc = verify_optimality(spec, surface, ws, hc, fb, tt, cfg.mc);

    // obstacle sandwich and complementarity, checked exactly
    bool sandwich_exact = true;
    double worst_complementarity = 0.0;
    for (int n = 0; n + 1 < grid.nt(); ++n) {
        for (int j = 1; j + 1 < grid.ny(); ++j) {
            const size_t id = grid.index(n, j);
            if (surface.V[id] < surface.lower[id] || surface.V[id] > surface.upper[id])
                sandwich_exact = false;
            const double gap =
                std::min(surface.V[id] - surface.lower[id], surface.upper[id] - surface.V[id]);
            worst_complementarity =
                std::max(worst_complementarity,
                         std::min(std::fabs(surface.residual[id]), gap));
        }
    }
    const bool complementarity_ok = worst_complementarity < 1e-6;

    std::cout << "verify: solve " << (from_cache ? "reused from cache" : "run inline") << "\n";
    std::ostringstream rep;
    rep << "== problem ==\n";
    rep << "grid: nt=" << grid.nt() << " ny=" << grid.ny() << "\n";
    rep << "general_terminal: " << (cfg.general_terminal ? 1 : 0) << "\n";
    rep << "== pde checks ==\n";
    rep << "sandwich_exact: " << (sandwich_exact ? "PASS" : "FAIL") << "\n";
    rep << "complementarity_max: " << format17(worst_complementarity)
        << (complementarity_ok ? " PASS" : " FAIL") << "\n";
    rep << "hjb_inside_max: " << format17(hjb.max_abs_inside) << " tol "
        << format17(hjb.hjb_tol) << (hjb.residual_ok ? " PASS" : " FAIL") << "\n";
    rep << "hjb_outside_positive: " << hjb.outside_positive << "/" << hjb.outside_nodes
        << (hjb.outside_ok ? " PASS" : " FAIL") << "\n";
    rep << "hjb_gradient: lower " << format17(hjb.max_grad_gap_lower) << " upper "
        << format17(hjb.max_grad_gap_upper) << (hjb.gradient_ok ? " PASS" : " FAIL") << "\n";
    rep << "holding_cost_curve_mismatch: " << format17(mismatch) << "\n";
    rep << "smooth_fit_gap_mid: a " << format17(fit.gap_a_mid) << " b "
        << format17(fit.gap_b_mid) << "\n";
    rep << "== monte carlo ==\n";
    rep << mc.text();

    const bool pde_ok = sandwich_exact && complementarity_ok && hjb.residual_ok &&
                        hjb.outside_ok && hjb.gradient_ok;
    const bool all_ok = pde_ok && mc.passed;
    rep << "verify: " << (all_ok ? "PASS" : "FAIL") << "\n";

    write_text(cfg.out_dir + "/verify_report.txt", rep.str());
    write_w_csv(cfg.out_dir + "/W.csv", ws, surface, hjb);
    write_holding_cost_csv(cfg.out_dir + "/C.csv", hc);
    {
        std::ostringstream pol;
        pol << "name,estimate,se,reference,budget,n,status\n";
        for (const auto& row : mc.rows) {
            const char* status = row.status == CheckStatus::Pass   ? "PASS"
                                 : row.status == CheckStatus::Fail ? "FAIL"
                                                                   : "INCONCLUSIVE";
            pol << row.name << ',' << format17(row.estimate) << ',' << format17(row.se) << ','
                << format17(row.reference) << ',' << format17(row.budget) << ',' << row.n
                << ',' << status << '\n';
        }
        write_text(cfg.out_dir + "/policies.csv", pol.str());
    }
    std::cout << rep.str();

    if (!all_ok) {
        if (!sandwich_exact) std::cerr << "verify failed: obstacle sandwich\n";
        else if (!complementarity_ok) std::cerr << "verify failed: complementarity\n";
        else if (!hjb.residual_ok) std::cerr << "verify failed: hjb residual\n";
        else if (!hjb.outside_ok) std::cerr << "verify failed: hjb positivity outside\n";
        else if (!hjb.gradient_ok) std::cerr << "verify failed: gradient constraints\n";
        else {
            for (const auto& row : mc.rows)
                if (row.status == CheckStatus::Fail) {
                    std::cerr << "verify failed: " << row.name << "\n";
                    break;
                }
        }
        return 1;
    }
    return 0;
}

int cmd_plotdata(const RunConfig& cfg) {
    const ProblemSpec spec = cfg.build_problem();
    const Grid grid = cfg.build_grid();
    const std::string cache_path = cfg.out_dir + "/cache.bin";
    if (!file_exists(cache_path)) {
        std::cerr << "plotdata: no solve cache at " << cache_path << " (run solve first)\n";
        return 2;
    }
    CachedSolve cached = read_cache(cache_path, spec, cfg.solver);
    CurvePair curves = compute_ab_curves(spec, grid, cfg.root_tol);

    const std::string dir = cfg.out_dir + "/";
    write_plot_curves(dir + "curves.dat", curves);
    write_plot_boundaries(dir + "free_boundaries.dat", cached.fb);
    if (cfg.general_terminal) {
        TransformedTerminal tt = terminal_transform(spec, grid, cfg.root_tol);
        write_plot_terminal_segment(dir + "terminal_segment.dat", spec.horizon, tt.A, tt.B);
    }
    std::cout << "plotdata: wrote curves.dat, free_boundaries.dat"
              << (cfg.general_terminal ? ", terminal_segment.dat" : "") << " to "
              << cfg.out_dir << "\n";
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"double-obstacle game and singular control laboratory"};
    app.require_subcommand(1);

    CommonFlags solve_flags, verify_flags, plot_flags;
    CLI::App* solve = app.add_subcommand("solve", "solve the obstacle problem and write the surfaces");
    CLI::App* verify = app.add_subcommand("verify", "run the verification battery");
    CLI::App* plot = app.add_subcommand("plotdata", "emit plot-ready curve data from a solve cache");
    add_common(solve, solve_flags);
    add_common(verify, verify_flags);
    add_common(plot, plot_flags);

    // CLI11 needs argv-style tokens in reverse
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, std::cout, std::cerr);
        return rc == 0 ? 0 : 2;
    }

    auto dispatch = [&](CLI::App* cmd, CommonFlags& flags,
                        int (*fn)(const RunConfig&)) -> int {
        flags.seed_set = cmd->count("--seed") > 0;
        RunConfig cfg = load_with_flags(flags);
        if (flags.dump_config) {
            std::cout << cfg.dump();
            return 0;
        }
        return fn(cfg);
    };

    try {
        if (solve->parsed()) return dispatch(solve, solve_flags, cmd_solve);
        if (verify->parsed()) return dispatch(verify, verify_flags, cmd_verify);
        if (plot->parsed()) return dispatch(plot, plot_flags, cmd_plotdata);
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "unexpected error: " << err.what() << "\n";
        return 2;
    }
    return 2;
}

} // namespace scl
