#pragma once

#include <vector>

#include "scl/game_solver.hpp"
#include "scl/grid.hpp"
#include "scl/problem.hpp"

namespace scl {

/// Integrated singular-control value W(s,x) = int_0^x e^{-cs} V(s,y) dy on
/// the solve grid, with its discrete partials.
///
/// Wx is stored as e^{-cs} V itself: that identity is exact for the
/// cumulative trapezoid, and it makes the gradient sandwich
/// -e^{-cs} f1 <= Wx <= e^{-cs} f2 inherit the obstacle sandwich exactly.
/// The agreement between Wx and the centered difference of W is reported in
/// fd_gradient_gap (O(dy^2)) instead of being the stored field.
struct WSurface {
    Grid grid;
    double discount_rate = 0.0;
    double theta = 0.5; // time weighting inherited from the solve
    std::vector<double> W;
    std::vector<double> Wx;
    std::vector<double> Wxx; // centered second difference of W
    std::vector<double> Ws;  // time partial; second-order one-sided at the ends
    // Running trapezoid of the solver's complementarity residual from the
    // origin, per level. The discrete time quotient of W obeys the scheme
    // identity only up to this integral; subtracting it from Ws at nodes
    // inside the continuation region removes the slack that leaks in when a
    // node changes region between adjacent levels.
    std::vector<double> residual_integral;
    double fd_gradient_gap = 0.0;

    double at(int n, int j) const { return W[grid.index(n, j)]; }
    double interp_row(int n, double x) const;
    double interp(double t, double x) const;

    /// Ws with the complementarity-slack correction; valid where the row
    /// segment between the origin and node j stays in the continuation
    /// region at the stencil's levels.
    double Ws_continuation(int n, int j) const;
};

/// Per-level trapezoid integration of e^{-cs} V outward from the origin
/// node, plus discrete partials. `grid` must be the surface's own grid.
WSurface integrate_value(const ValueSurface& surface, const ProblemSpec& spec,
                         const Grid& grid);

enum class CurveSide { Lower, Upper };

/// Diagnostics that depend on the time derivative of W exclude the last
/// fraction of the horizon. A terminal payoff with derivative kinks (the
/// envelope crossovers) leaves W_s unbounded as t -> T; the value-function
/// regularity holds on [0,T) only, so inside that layer the discrete
/// residual measures the payoff kink rather than the scheme.
inline constexpr double kTerminalLayerFraction = 0.15;

/// Holding cost construction: C(s) evaluated along the lower boundary (the
/// canonical choice; CurveSide::Upper recomputes it along the upper one as a
/// consistency diagnostic) and H(s,x) = int_0^x h(s,y) dy + C(s).
///
/// The fields entering C are taken from continuation-side nodes whose
/// stencils do not straddle the free boundary and are extrapolated linearly
/// to the boundary point; inside the continuation region the combination is
/// constant up to discretization error, so this evaluates the boundary
/// formula without touching the kink cell.
struct HoldingCost {
    Grid grid;
    std::vector<double> C; // per time level; terminal copies the last interior level
    std::vector<double> H; // nt*ny

    double H_at(int n, int j) const { return H[grid.index(n, j)]; }
    double C_at(double t) const;
    double interp(double t, double x) const; // bilinear in (t, x)
};
HoldingCost compute_holding_cost(const WSurface& ws, const FreeBoundaries& fb,
                                 const ProblemSpec& spec, const Grid& grid,
                                 CurveSide side = CurveSide::Lower);

/// Residual of the singular-control HJB equation on the W fields:
/// R = 1/2 sigma^2 Wxx + mu Wx + Ws + H. Zero inside (a~, b~), strictly
/// positive outside, with the gradient constraints at and beyond the
/// boundaries. The terminal level is excluded throughout.
struct HJBReport {
    std::vector<double> values; // slack-corrected inside, raw outside
    double hjb_tol = 0.0;
    double max_abs_inside = 0.0;
    double min_outside = 0.0;        // over nodes >= outside_margin_cells outside
    size_t outside_nodes = 0;
    size_t outside_positive = 0;
    double max_grad_gap_lower = 0.0; // |Wx + e^{-cs} f1| at nodes left of a~
    double max_grad_gap_upper = 0.0; // |Wx - e^{-cs} f2| at nodes right of b~
    size_t inside_gradient_violations = 0;
    int outside_margin_cells = 2;
    bool residual_ok = false;
    bool outside_ok = false;
    bool gradient_ok = false;
};
HJBReport hjb_residual(const WSurface& ws, const HoldingCost& hc, const FreeBoundaries& fb,
                       const ProblemSpec& spec, double hjb_tol = 0.0);

/// Default HJB tolerance: 1e-4 at the reference resolution (dy + dt = 0.065),
/// scaled linearly with dy + dt on coarser grids and floored at 1e-4.
double default_hjb_tol(const Grid& grid);

/// Max over time levels of |C(s)| mismatch between the lower- and
/// upper-curve evaluations; measures total discretization error.
double holding_cost_curve_mismatch(const WSurface& ws, const FreeBoundaries& fb,
                                   const ProblemSpec& spec, const Grid& grid);

} // namespace scl
