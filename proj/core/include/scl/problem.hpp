#pragma once

#include <string>
#include <vector>

#include "scl/expr.hpp"
#include "scl/grid.hpp"

namespace scl {

/// One instance of the control/game problem: linear drift mu(y) = c*y + d
/// (c doubles as the discount rate), diffusion sigma(y), control costs
/// f1(t,y) and f2(t,y), running payoff density h(t,y), terminal payoff g(y),
/// horizon T and the computational band. Symbolic partials of sigma, f1 and
/// f2 are derived once at construction so the parabolic operator and the
/// boundary diagnostics never fall back to finite differencing.
struct ProblemSpec {
    double c = 0.0;
    double d = 0.0;
    double horizon = 1.0;
    double band_lo = -1.0;
    double band_hi = 1.0;
    double sigma_floor = 1e-8; // required uniform lower bound on sigma
    double bound = 1.0;        // uniform bound M on f1, f2, h, g

    Expr sigma, f1, f2, h, g;
    Expr sigma_y;
    Expr f1_t, f1_y, f1_yy;
    Expr f2_t, f2_y, f2_yy;

    double mu(double y) const { return c * y + d; }

    /// Drift of the auxiliary diffusion: sigma*sigma' + mu.
    double drift_aux(double y) const {
        return sigma(0.0, y) * sigma_y(0.0, y) + mu(y);
    }

    /// Parabolic operator applied to a field given its partials:
    /// L phi = (1/2) sigma^2 phi_yy + (sigma sigma' + mu) phi_y + phi_t.
    double generator(double y, double phi_t, double phi_y, double phi_yy) const {
        const double s = sigma(0.0, y);
        return 0.5 * s * s * phi_yy + drift_aux(y) * phi_y + phi_t;
    }

    /// L(-f1)(t,y) + e^{ct} h(t,y): the lower reference curve a(t) is its root in y.
    double lower_curve_function(double t, double y) const {
        const double lf = generator(y, -f1_t(t, y), -f1_y(t, y), -f1_yy(t, y));
        return lf + std::exp(c * t) * h(t, y);
    }

    /// L(f2)(t,y) + e^{ct} h(t,y): the upper reference curve b(t) is its root in y.
    double upper_curve_function(double t, double y) const {
        const double lf = generator(y, f2_t(t, y), f2_y(t, y), f2_yy(t, y));
        return lf + std::exp(c * t) * h(t, y);
    }
};

/// Builds a ProblemSpec and derives all symbolic partials. Throws if sigma
/// depends on t or any expression is empty.
ProblemSpec make_problem(double c, double d, double horizon, double band_lo, double band_hi,
                         const Expr& sigma, const Expr& f1, const Expr& f2, const Expr& h,
                         const Expr& g, double sigma_floor, double bound);

// ---------------------------------------------------------------------------
// Assumption validation
// ---------------------------------------------------------------------------

struct AssumptionCheck {
    std::string name;
    bool passed = false;
    double worst_t = 0.0;
    double worst_y = 0.0;
    double worst_value = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    bool passed = false;
    std::string summary() const;
    const AssumptionCheck* find(const std::string& name) const;
};

struct ValidationOptions {
    /// Check f2(T,.) >= g >= -f1(T,.) on the band. Disabled when the run
    /// goes through the terminal envelope transform instead.
    bool require_terminal_sandwich = true;
};

/// Samples every standing assumption on the grid and reports each with
/// pass/fail and the worst violating node. A non-finite evaluation anywhere
/// fails the corresponding check and names the node and function.
ValidationReport validate_problem(const ProblemSpec& spec, const Grid& grid,
                                  const ValidationOptions& opts = {});

// ---------------------------------------------------------------------------
// Reference curves a(t), b(t)
// ---------------------------------------------------------------------------

class CurveError : public Error {
public:
    using Error::Error;
};

struct CurvePair {
    std::vector<double> t;
    std::vector<double> a, b;
    std::vector<double> residual_a, residual_b;

    double a_at(double time) const;
    double b_at(double time) const;
};

/// Locates a(t) < 0 < b(t) as bisection roots of the two defining functions
/// at every time level. Preconditions (sign change on the band, strict
/// monotonicity of the defining functions in y, band margin) are checked by
/// sampling; violations throw CurveError naming the curve and time level.
CurvePair compute_ab_curves(const ProblemSpec& spec, const Grid& grid, double root_tol = 1e-10);

// ---------------------------------------------------------------------------
// Terminal envelope (relaxed terminal cost)
// ---------------------------------------------------------------------------

struct TransformedTerminal {
    double A = 0.0;
    double B = 0.0;
    std::vector<double> y;       // grid nodes
    std::vector<double> g_tilde; // envelope slope: -f1(T,.) | g | f2(T,.)
    std::vector<double> G;       // int_0^x e^{-cT} g
    std::vector<double> G_tilde; // int_0^x e^{-cT} g_tilde

    double g_tilde_at(double x) const;
    double G_at(double x) const;
    double G_tilde_at(double x) const;
};

/// Locates the crossover points A < 0 < B where g leaves the obstacle
/// sandwich, assembles the envelope slope g_tilde piecewise and integrates
/// both G and G_tilde from the origin by trapezoid. For a terminal payoff
/// already inside the sandwich this returns g_tilde == g and G_tilde == G.
TransformedTerminal terminal_transform(const ProblemSpec& spec, const Grid& grid,
                                       double root_tol = 1e-10);

/// Samples of the plain terminal payoff g on the grid's y nodes.
std::vector<double> terminal_values(const ProblemSpec& spec, const Grid& grid);

/// Terminal data for a payoff that already respects the obstacle sandwich:
/// the envelope is the payoff itself and no crossover search is attempted.
/// The crossover points are pinned to the band edges so a terminal clamp
/// against them is a no-op.
TransformedTerminal plain_terminal(const ProblemSpec& spec, const Grid& grid);

} // namespace scl
