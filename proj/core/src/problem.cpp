#include "scl/problem.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace scl {

namespace {

// Bisection on a bracket [lo, hi] with sign(f(lo)) != sign(f(hi)) in the
// weak sense encoded by `left_nonpositive`. Shrinks to machine width, then
// among the bracket points with |f| < value_tol returns the one closest to
// zero (deterministic tie-break toward the origin).
struct RootResult {
    double x = 0.0;
    double fx = 0.0;
    bool converged = false;
};

RootResult bisect(const std::function<double(double)>& f, double lo, double hi,
                  double value_tol) {
    double flo = f(lo), fhi = f(hi);
    const double width_tol = 1e-14 * std::max({1.0, std::fabs(lo), std::fabs(hi)});
    for (int iter = 0; iter < 200 && hi - lo > width_tol; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = f(mid);
        if (fmid == 0.0) {
            lo = hi = mid;
            flo = fhi = fmid;
            break;
        }
        if ((fmid < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
            fhi = fmid;
        }
    }
    RootResult best;
    for (auto [x, fx] : {std::pair{lo, flo}, std::pair{0.5 * (lo + hi), f(0.5 * (lo + hi))},
                         std::pair{hi, fhi}}) {
        if (std::fabs(fx) < value_tol &&
            (!best.converged || std::fabs(x) < std::fabs(best.x))) {
            best = {x, fx, true};
        }
    }
    if (!best.converged) best = {0.5 * (lo + hi), f(0.5 * (lo + hi)), false};
    return best;
}

std::string node_str(double t, double y) {
    return "(t=" + format17(t) + ", y=" + format17(y) + ")";
}

} // namespace

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

ProblemSpec make_problem(double c, double d, double horizon, double band_lo, double band_hi,
                         const Expr& sigma, const Expr& f1, const Expr& f2, const Expr& h,
                         const Expr& g, double sigma_floor, double bound) {
    if (!sigma.valid() || !f1.valid() || !f2.valid() || !h.valid() || !g.valid())
        throw Error("make_problem: all coefficient expressions must be provided");
    if (sigma.depends_on(Var::T))
        throw Error("make_problem: sigma must be a function of y only");
    if (g.depends_on(Var::T))
        throw Error("make_problem: the terminal payoff g must be a function of y only");
    if (!(horizon > 0.0)) throw Error("make_problem: horizon must be positive");
    if (!(band_hi > band_lo)) throw Error("make_problem: empty band");
    if (!(bound > 0.0)) throw Error("make_problem: the uniform bound M must be positive");

    ProblemSpec spec;
    spec.c = c;
    spec.d = d;
    spec.horizon = horizon;
    spec.band_lo = band_lo;
    spec.band_hi = band_hi;
    spec.sigma_floor = sigma_floor;
    spec.bound = bound;
    spec.sigma = sigma;
    spec.f1 = f1;
    spec.f2 = f2;
    spec.h = h;
    spec.g = g;
    spec.sigma_y = sigma.derivative(Var::Y);
    spec.f1_t = f1.derivative(Var::T);
    spec.f1_y = f1.derivative(Var::Y);
    spec.f1_yy = spec.f1_y.derivative(Var::Y);
    spec.f2_t = f2.derivative(Var::T);
    spec.f2_y = f2.derivative(Var::Y);
    spec.f2_yy = spec.f2_y.derivative(Var::Y);
    return spec;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (const auto& chk : checks) {
        os << (chk.passed ? "[pass] " : "[FAIL] ") << chk.name;
        if (!chk.passed) os << ": " << chk.detail;
        os << "\n";
    }
    os << (passed ? "all assumption checks passed" : "assumption checks FAILED") << "\n";
    return os.str();
}

const AssumptionCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& chk : checks)
        if (chk.name == name) return &chk;
    return nullptr;
}

ValidationReport validate_problem(const ProblemSpec& spec, const Grid& grid,
                                  const ValidationOptions& opts) {
    ValidationReport report;
    const double T = spec.horizon;
    const double M = spec.bound;

    // Each check scans grid nodes and records the worst violation; an
    // evaluation failure anywhere fails the check and names the node.
    auto run_check = [&](const std::string& name, auto&& body) {
        AssumptionCheck chk;
        chk.name = name;
        chk.passed = true;
        try {
            body(chk);
        } catch (const ExprEvalError& err) {
            chk.passed = false;
            chk.detail = std::string("non-finite evaluation: ") + err.what();
        }
        report.checks.push_back(std::move(chk));
    };

    auto record_worst = [](AssumptionCheck& chk, bool ok, double margin, double t, double y,
                           const std::string& what) {
        // margin < 0 means violated; keep the most negative node
        if (!ok && (chk.passed || margin < chk.worst_value)) {
            chk.passed = false;
            chk.worst_t = t;
            chk.worst_y = y;
            chk.worst_value = margin;
            chk.detail = what + " at " + node_str(t, y) + ", margin " + format17(margin);
        }
    };

    run_check("sigma-positive-floor", [&](AssumptionCheck& chk) {
        for (int j = 0; j < grid.ny(); ++j) {
            const double y = grid.y(j);
            const double s = spec.sigma(0.0, y);
            record_worst(chk, s >= spec.sigma_floor, s - spec.sigma_floor, 0.0, y,
                         "sigma(y) < sigma_floor (sigma=" + format17(s) + ")");
        }
    });

    run_check("sigma-derivative-finite", [&](AssumptionCheck& chk) {
        for (int j = 0; j < grid.ny(); ++j) {
            const double y = grid.y(j);
            const double sp = spec.sigma_y(0.0, y);
            record_worst(chk, std::isfinite(sp), -1.0, 0.0, y, "sigma'(y) is not finite");
        }
    });

    run_check("obstacle-signs", [&](AssumptionCheck& chk) {
        for (int n = 0; n < grid.nt(); ++n) {
            const double t = grid.t(n);
            for (int j = 0; j < grid.ny(); ++j) {
                const double y = grid.y(j);
                const double v1 = spec.f1(t, y);
                const double v2 = spec.f2(t, y);
                const double margin = std::min({v1, v2, M - v1, M - v2});
                record_worst(chk, margin > 0.0, margin, t, y,
                             "need 0 < f1 < M and 0 < f2 < M (f1=" + format17(v1) +
                                 ", f2=" + format17(v2) + ")");
            }
        }
    });

    run_check("bounded-by-M", [&](AssumptionCheck& chk) {
        for (int n = 0; n < grid.nt(); ++n) {
            const double t = grid.t(n);
            for (int j = 0; j < grid.ny(); ++j) {
                const double y = grid.y(j);
                const double margin =
                    std::min(M - std::fabs(spec.h(t, y)), M - std::fabs(spec.g(0.0, y)));
                record_worst(chk, margin >= 0.0, margin, t, y, "|h| or |g| exceeds M");
            }
        }
    });

    if (opts.require_terminal_sandwich) {
        run_check("terminal-sandwich", [&](AssumptionCheck& chk) {
            for (int j = 0; j < grid.ny(); ++j) {
                const double y = grid.y(j);
                const double gv = spec.g(0.0, y);
                const double margin = std::min(spec.f2(T, y) - gv, gv + spec.f1(T, y));
                record_worst(chk, margin >= 0.0, margin, T, y,
                             "need f2(T,y) >= g(y) >= -f1(T,y) (g=" + format17(gv) + ")");
            }
        });
    }

    run_check("h-strictly-increasing", [&](AssumptionCheck& chk) {
        for (int n = 0; n < grid.nt(); ++n) {
            const double t = grid.t(n);
            for (int j = 0; j + 1 < grid.ny(); ++j) {
                const double diff = spec.h(t, grid.y(j + 1)) - spec.h(t, grid.y(j));
                record_worst(chk, diff > 0.0, diff, t, grid.y(j),
                             "h(t,.) not strictly increasing between adjacent nodes");
            }
        }
    });

    run_check("f1-nondecreasing", [&](AssumptionCheck& chk) {
        for (int n = 0; n < grid.nt(); ++n) {
            const double t = grid.t(n);
            for (int j = 0; j + 1 < grid.ny(); ++j) {
                const double diff = spec.f1(t, grid.y(j + 1)) - spec.f1(t, grid.y(j));
                record_worst(chk, diff >= 0.0, diff, t, grid.y(j),
                             "f1(t,.) decreases between adjacent nodes");
            }
        }
    });

    run_check("f2-nonincreasing", [&](AssumptionCheck& chk) {
        for (int n = 0; n < grid.nt(); ++n) {
            const double t = grid.t(n);
            for (int j = 0; j + 1 < grid.ny(); ++j) {
                const double diff = spec.f2(t, grid.y(j)) - spec.f2(t, grid.y(j + 1));
                record_worst(chk, diff >= 0.0, diff, t, grid.y(j),
                             "f2(t,.) increases between adjacent nodes");
            }
        }
    });

    run_check("h-zero-at-origin", [&](AssumptionCheck& chk) {
        const double tol = 1e-12 * std::max(1.0, M);
        for (int n = 0; n < grid.nt(); ++n) {
            const double t = grid.t(n);
            const double v = spec.h(t, 0.0);
            record_worst(chk, std::fabs(v) <= tol, tol - std::fabs(v), t, 0.0,
                         "h(t,0) != 0 (value " + format17(v) + ")");
        }
    });

    run_check("g-zero-at-origin", [&](AssumptionCheck& chk) {
        const double tol = 1e-12 * std::max(1.0, M);
        const double v = spec.g(0.0, 0.0);
        record_worst(chk, std::fabs(v) <= tol, tol - std::fabs(v), T, 0.0,
                     "g(0) != 0 (value " + format17(v) + ")");
    });

    report.passed = std::all_of(report.checks.begin(), report.checks.end(),
                                [](const AssumptionCheck& c) { return c.passed; });
    return report;
}

// ---------------------------------------------------------------------------
// Reference curves
// ---------------------------------------------------------------------------

double CurvePair::a_at(double time) const {
    if (t.size() < 2 || time <= t.front()) return a.front();
    if (time >= t.back()) return a.back();
    const double dt = t[1] - t[0];
    const size_t n = std::min(a.size() - 2, static_cast<size_t>((time - t.front()) / dt));
    const double w = (time - t[n]) / dt;
    return a[n] * (1.0 - w) + a[n + 1] * w;
}

double CurvePair::b_at(double time) const {
    if (t.size() < 2 || time <= t.front()) return b.front();
    if (time >= t.back()) return b.back();
    const double dt = t[1] - t[0];
    const size_t n = std::min(b.size() - 2, static_cast<size_t>((time - t.front()) / dt));
    const double w = (time - t[n]) / dt;
    return b[n] * (1.0 - w) + b[n + 1] * w;
}

CurvePair compute_ab_curves(const ProblemSpec& spec, const Grid& grid, double root_tol) {
    CurvePair out;
    out.t.reserve(grid.nt());

    const double lo = grid.band_lo();
    const double hi = grid.band_hi();
    const double margin = 0.1 * (hi - lo);

    for (int n = 0; n < grid.nt(); ++n) {
        const double t = grid.t(n);
        out.t.push_back(t);

        for (int which = 0; which < 2; ++which) {
            const char* name = which == 0 ? "a" : "b";
            auto f = [&](double y) {
                return which == 0 ? spec.lower_curve_function(t, y)
                                  : spec.upper_curve_function(t, y);
            };

            // monotonicity of the defining function, sampled on the grid
            double prev = f(grid.y(0));
            for (int j = 1; j < grid.ny(); ++j) {
                const double cur = f(grid.y(j));
                if (!(cur > prev))
                    throw CurveError(std::string("curve ") + name + ": defining function is "
                                     "not strictly increasing in y at t=" + format17(t) +
                                     " between y=" + format17(grid.y(j - 1)) + " and y=" +
                                     format17(grid.y(j)));
                prev = cur;
            }

            if (!(f(lo) < 0.0) || !(f(hi) > 0.0))
                throw CurveError(std::string("curve ") + name +
                                 ": no sign change on the band at t=" + format17(t));

            RootResult root = bisect(f, lo, hi, root_tol);
            if (!root.converged)
                throw CurveError(std::string("curve ") + name +
                                 ": bisection did not reach the residual tolerance at t=" +
                                 format17(t) + " (residual " + format17(root.fx) + ")");

            // local monotone increase at the returned root
            const double probe = std::max(1e-7, 1e-7 * std::fabs(root.x));
            if (!(f(root.x - probe) < f(root.x + probe)))
                throw CurveError(std::string("curve ") + name +
                                 ": defining function not increasing across the root at t=" +
                                 format17(t));

            if (which == 0) {
                if (!(root.x < 0.0))
                    throw CurveError("curve a: expected a(t) < 0, got " + format17(root.x) +
                                     " at t=" + format17(t));
                if (root.x - lo < margin)
                    throw CurveError("band too tight: a(t)=" + format17(root.x) +
                                     " is within 10% of the lower band edge at t=" +
                                     format17(t));
                out.a.push_back(root.x);
                out.residual_a.push_back(root.fx);
            } else {
                if (!(root.x > 0.0))
                    throw CurveError("curve b: expected b(t) > 0, got " + format17(root.x) +
                                     " at t=" + format17(t));
                if (hi - root.x < margin)
                    throw CurveError("band too tight: b(t)=" + format17(root.x) +
                                     " is within 10% of the upper band edge at t=" +
                                     format17(t));
                out.b.push_back(root.x);
                out.residual_b.push_back(root.fx);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Terminal envelope
// ---------------------------------------------------------------------------

namespace {

double interp_nodes(const std::vector<double>& ys, const std::vector<double>& vals, double x) {
    if (x <= ys.front()) return vals.front();
    if (x >= ys.back()) return vals.back();
    const double dy = ys[1] - ys[0];
    size_t j = std::min(ys.size() - 2, static_cast<size_t>((x - ys.front()) / dy));
    const double w = (x - ys[j]) / dy;
    return vals[j] * (1.0 - w) + vals[j + 1] * w;
}

} // namespace

double TransformedTerminal::g_tilde_at(double x) const { return interp_nodes(y, g_tilde, x); }
double TransformedTerminal::G_at(double x) const { return interp_nodes(y, G, x); }
double TransformedTerminal::G_tilde_at(double x) const { return interp_nodes(y, G_tilde, x); }

std::vector<double> terminal_values(const ProblemSpec& spec, const Grid& grid) {
    std::vector<double> out(grid.ny());
    for (int j = 0; j < grid.ny(); ++j) out[j] = spec.g(0.0, grid.y(j));
    return out;
}

TransformedTerminal plain_terminal(const ProblemSpec& spec, const Grid& grid) {
    TransformedTerminal out;
    out.A = grid.band_lo();
    out.B = grid.band_hi();
    out.y.resize(grid.ny());
    for (int j = 0; j < grid.ny(); ++j) out.y[j] = grid.y(j);
    out.g_tilde = terminal_values(spec, grid);

    std::vector<double> G(grid.ny(), 0.0);
    const int j0 = grid.zero_index();
    const double w = 0.5 * grid.dy() * std::exp(-spec.c * spec.horizon);
    for (int j = j0 + 1; j < grid.ny(); ++j)
        G[j] = G[j - 1] + w * (out.g_tilde[j - 1] + out.g_tilde[j]);
    for (int j = j0 - 1; j >= 0; --j)
        G[j] = G[j + 1] - w * (out.g_tilde[j] + out.g_tilde[j + 1]);
    out.G = G;
    out.G_tilde = std::move(G);
    return out;
}

TransformedTerminal terminal_transform(const ProblemSpec& spec, const Grid& grid,
                                       double root_tol) {
    const double T = spec.horizon;
    const double lo = grid.band_lo();
    const double hi = grid.band_hi();

    // crossover of g with the lower obstacle -f1(T,.)
    auto phiA = [&](double x) { return spec.g(0.0, x) + spec.f1(T, x); };
    // crossover of g with the upper obstacle f2(T,.)
    auto phiB = [&](double x) { return spec.g(0.0, x) - spec.f2(T, x); };

    if (phiA(lo) > 0.0)
        throw Error("terminal envelope: no lower crossover on the band "
                    "(g stays above -f1 at the left edge)");
    if (phiB(hi) < 0.0)
        throw Error("terminal envelope: no upper crossover on the band "
                    "(g stays below f2 at the right edge)");
    if (!(phiA(0.0) > 0.0) || !(phiB(0.0) < 0.0))
        throw Error("terminal envelope: g(0)=0 must lie strictly inside the obstacles");

    // A = boundary of {g <= -f1}: keep phiA(left end) <= 0 < phiA(right end)
    double alo = lo, ahi = 0.0;
    while (ahi - alo > std::max(root_tol, 1e-14 * (hi - lo))) {
        const double mid = 0.5 * (alo + ahi);
        (phiA(mid) <= 0.0 ? alo : ahi) = mid;
    }
    const double A = 0.5 * (alo + ahi);

    // B = boundary of {g >= f2}: keep phiB(left end) < 0 <= phiB(right end)
    double blo = 0.0, bhi = hi;
    while (bhi - blo > std::max(root_tol, 1e-14 * (hi - lo))) {
        const double mid = 0.5 * (blo + bhi);
        (phiB(mid) < 0.0 ? blo : bhi) = mid;
    }
    const double B = 0.5 * (blo + bhi);

    TransformedTerminal out;
    out.A = A;
    out.B = B;
    out.y.resize(grid.ny());
    out.g_tilde.resize(grid.ny());
    const double slack = 1e-9 * std::max(1.0, spec.bound);

    for (int j = 0; j < grid.ny(); ++j) {
        const double x = grid.y(j);
        out.y[j] = x;
        if (x < A) {
            out.g_tilde[j] = -spec.f1(T, x);
        } else if (x > B) {
            out.g_tilde[j] = spec.f2(T, x);
        } else {
            const double gv = spec.g(0.0, x);
            if (gv < -spec.f1(T, x) - slack || gv > spec.f2(T, x) + slack)
                throw Error("terminal envelope: obstacle sandwich violated inside [A,B] at y=" +
                            format17(x) + " (A=" + format17(A) + ", B=" + format17(B) + ")");
            out.g_tilde[j] = gv;
        }
    }

    // pattern check outside [A,B]: g must not re-enter the sandwich
    for (int j = 0; j < grid.ny(); ++j) {
        const double x = grid.y(j);
        if (x < A - grid.dy() && phiA(x) > slack)
            throw Error("terminal envelope: g re-enters the sandwich left of A at y=" +
                        format17(x));
        if (x > B + grid.dy() && phiB(x) < -slack)
            throw Error("terminal envelope: g re-enters the sandwich right of B at y=" +
                        format17(x));
    }

    // cumulative trapezoid from the origin node outward in both directions
    auto integrate_from_zero = [&](auto&& f) {
        std::vector<double> F(grid.ny(), 0.0);
        const int j0 = grid.zero_index();
        const double w = 0.5 * grid.dy() * std::exp(-spec.c * T);
        for (int j = j0 + 1; j < grid.ny(); ++j)
            F[j] = F[j - 1] + w * (f(j - 1) + f(j));
        for (int j = j0 - 1; j >= 0; --j)
            F[j] = F[j + 1] - w * (f(j) + f(j + 1));
        return F;
    };

    out.G = integrate_from_zero([&](int j) { return spec.g(0.0, grid.y(j)); });
    out.G_tilde = integrate_from_zero([&](int j) { return out.g_tilde[j]; });
    return out;
}

} // namespace scl
