#include "scl/singular_value.hpp"

#include <algorithm>
#include <cmath>

namespace scl {

namespace {

double row_interp(const Grid& grid, const std::vector<double>& field, int n, double x) {
    const int ny = grid.ny();
    if (x <= grid.band_lo()) return field[grid.index(n, 0)];
    if (x >= grid.band_hi()) return field[grid.index(n, ny - 1)];
    const double rel = (x - grid.band_lo()) / grid.dy();
    const int j = std::min(ny - 2, static_cast<int>(rel));
    const double w = rel - j;
    return field[grid.index(n, j)] * (1.0 - w) + field[grid.index(n, j + 1)] * w;
}

double bilinear(const Grid& grid, const std::vector<double>& field, double t, double x) {
    const int nt = grid.nt();
    if (t <= 0.0) return row_interp(grid, field, 0, x);
    if (t >= grid.horizon()) return row_interp(grid, field, nt - 1, x);
    const double rel = t / grid.dt();
    const int n = std::min(nt - 2, static_cast<int>(rel));
    const double w = rel - n;
    return row_interp(grid, field, n, x) * (1.0 - w) + row_interp(grid, field, n + 1, x) * w;
}

} // namespace

double WSurface::interp_row(int n, double x) const { return row_interp(grid, W, n, x); }
double WSurface::interp(double t, double x) const { return bilinear(grid, W, t, x); }

double WSurface::Ws_continuation(int n, int j) const {
    const int nt = grid.nt();
    const size_t id = grid.index(n, j);
    double slack;
    if (n == 0) {
        slack = 0.5 * (3.0 * residual_integral[grid.index(0, j)] -
                       residual_integral[grid.index(1, j)]);
    } else if (n == nt - 1) {
        slack = 0.5 * (3.0 * residual_integral[grid.index(nt - 2, j)] -
                       residual_integral[grid.index(nt - 3, j)]);
    } else {
        slack = 0.5 * (residual_integral[grid.index(n - 1, j)] +
                       residual_integral[grid.index(n, j)]);
    }
    return Ws[id] - slack;
}

double HoldingCost::C_at(double t) const {
    std::vector<double> ts(C.size());
    for (size_t n = 0; n < C.size(); ++n) ts[n] = grid.t(static_cast<int>(n));
    return lerp_series(ts, C, t);
}

double HoldingCost::interp(double t, double x) const { return bilinear(grid, H, t, x); }

// ---------------------------------------------------------------------------
// W integration
// ---------------------------------------------------------------------------

WSurface integrate_value(const ValueSurface& surface, const ProblemSpec& spec,
                         const Grid& grid) {
    if (grid.nt() != surface.grid.nt() || grid.ny() != surface.grid.ny())
        throw Error("integrate_value: grid does not match the solved surface");
    const int nt = grid.nt(), ny = grid.ny();
    const int j0 = grid.zero_index();
    const double dy = grid.dy(), dt = grid.dt();

    WSurface ws{grid, spec.c, surface.params.theta, {}, {}, {}, {}, {}, 0.0};
    ws.W.assign(grid.size(), 0.0);
    ws.Wx.assign(grid.size(), 0.0);
    ws.Wxx.assign(grid.size(), 0.0);
    ws.Ws.assign(grid.size(), 0.0);
    ws.residual_integral.assign(grid.size(), 0.0);

    for (int n = 0; n < nt; ++n) {
        const double* res = surface.residual.data() + grid.index(n, 0);
        double* ri = ws.residual_integral.data() + grid.index(n, 0);
        ri[j0] = 0.0;
        for (int j = j0 + 1; j < ny; ++j) ri[j] = ri[j - 1] + 0.5 * dy * (res[j - 1] + res[j]);
        for (int j = j0 - 1; j >= 0; --j) ri[j] = ri[j + 1] - 0.5 * dy * (res[j] + res[j + 1]);
    }

    for (int n = 0; n < nt; ++n) {
        const double damp = std::exp(-spec.c * grid.t(n));
        double* w = ws.W.data() + grid.index(n, 0);
        double* wx = ws.Wx.data() + grid.index(n, 0);
        const double* v = surface.V.data() + grid.index(n, 0);
        for (int j = 0; j < ny; ++j) wx[j] = damp * v[j];
        w[j0] = 0.0;
        for (int j = j0 + 1; j < ny; ++j) w[j] = w[j - 1] + 0.5 * dy * (wx[j - 1] + wx[j]);
        for (int j = j0 - 1; j >= 0; --j) w[j] = w[j + 1] - 0.5 * dy * (wx[j] + wx[j + 1]);
    }

    for (int n = 0; n < nt; ++n) {
        const double* w = ws.W.data() + grid.index(n, 0);
        const double* wx = ws.Wx.data() + grid.index(n, 0);
        double* wxx = ws.Wxx.data() + grid.index(n, 0);
        for (int j = 1; j + 1 < ny; ++j) {
            wxx[j] = (w[j + 1] - 2.0 * w[j] + w[j - 1]) / (dy * dy);
            // consistency diagnostic on interior time levels; the terminal row
            // carries the raw payoff kink and is only first-order there
            if (n + 1 < nt) {
                const double fd = (w[j + 1] - w[j - 1]) / (2.0 * dy);
                ws.fd_gradient_gap = std::max(ws.fd_gradient_gap, std::fabs(fd - wx[j]));
            }
        }
        wxx[0] = wxx[1];
        wxx[ny - 1] = wxx[ny - 2];
    }

    for (int j = 0; j < ny; ++j) {
        for (int n = 1; n + 1 < nt; ++n)
            ws.Ws[grid.index(n, j)] =
                (ws.W[grid.index(n + 1, j)] - ws.W[grid.index(n - 1, j)]) / (2.0 * dt);
        ws.Ws[grid.index(0, j)] = (-3.0 * ws.W[grid.index(0, j)] +
                                   4.0 * ws.W[grid.index(1, j)] - ws.W[grid.index(2, j)]) /
                                  (2.0 * dt);
        ws.Ws[grid.index(nt - 1, j)] =
            (3.0 * ws.W[grid.index(nt - 1, j)] - 4.0 * ws.W[grid.index(nt - 2, j)] +
             ws.W[grid.index(nt - 3, j)]) /
            (2.0 * dt);
    }
    return ws;
}

// ---------------------------------------------------------------------------
// Holding cost
// ---------------------------------------------------------------------------

namespace {

// trapezoid of h(s_n, .) from the origin to every node
struct RunningIntegral {
    std::vector<double> nodes;
    const Grid* grid;
    const ProblemSpec* spec;
    double t;
};

RunningIntegral h_integral_row(const ProblemSpec& spec, const Grid& grid, int n) {
    RunningIntegral ri;
    ri.grid = &grid;
    ri.spec = &spec;
    ri.t = grid.t(n);
    ri.nodes.assign(grid.ny(), 0.0);
    const int j0 = grid.zero_index();
    const double dy = grid.dy();
    for (int j = j0 + 1; j < grid.ny(); ++j)
        ri.nodes[j] = ri.nodes[j - 1] + 0.5 * dy * (spec.h(ri.t, grid.y(j - 1)) + spec.h(ri.t, grid.y(j)));
    for (int j = j0 - 1; j >= 0; --j)
        ri.nodes[j] = ri.nodes[j + 1] - 0.5 * dy * (spec.h(ri.t, grid.y(j)) + spec.h(ri.t, grid.y(j + 1)));
    return ri;
}

// C(s) from the boundary formula, evaluated with continuation-side nodes
// whose stencils stay clear of the free-boundary cell
double boundary_C(const WSurface& ws, const ProblemSpec& spec, const Grid& grid, int n,
                  double a_tilde, double b_tilde, CurveSide side,
                  const RunningIntegral& hint) {
    const int ny = grid.ny();
    const double dy = grid.dy();
    const double lo = grid.band_lo();

    // Base node pair: three cells clear of the boundary, so neither the
    // spatial stencils nor the centered time stencil see the cells the
    // boundary occupied at the neighbouring levels.
    double xs;
    int m;
    if (side == CurveSide::Lower) {
        xs = a_tilde;
        const int ja = static_cast<int>(std::floor((a_tilde - lo) / dy));
        m = ja + 3;
    } else {
        xs = b_tilde;
        const int jb = static_cast<int>(std::ceil((b_tilde - lo) / dy));
        m = jb - 4;
    }
    m = std::clamp(m, 1, ny - 3);

    // The whole combination (including the running h-integral) is constant
    // across the continuation region in the discrete scheme, so carrying it
    // from the clean nodes to the boundary point is exact up to the scheme's
    // own consistency error; extrapolating the W-fields alone would pick up
    // the curvature of int_0^x h over the extrapolation distance.
    auto combination_at = [&](int j) {
        const size_t id = grid.index(n, j);
        const double x = grid.y(j);
        const double s = spec.sigma(0.0, x);
        return 0.5 * s * s * ws.Wxx[id] + spec.mu(x) * ws.Wx[id] + ws.Ws_continuation(n, j) +
               hint.nodes[static_cast<size_t>(j)];
    };
    // The combination is constant across the continuation region, so the
    // weight is clamped: extrapolating beyond the node pair would only
    // amplify the per-node noise.
    const double w = std::clamp((xs - grid.y(m)) / dy, 0.0, 1.0);
    return -(combination_at(m) * (1.0 - w) + combination_at(m + 1) * w);
}

} // namespace

HoldingCost compute_holding_cost(const WSurface& ws, const FreeBoundaries& fb,
                                 const ProblemSpec& spec, const Grid& grid, CurveSide side) {
    const int nt = grid.nt(), ny = grid.ny();
    HoldingCost hc{grid, {}, {}};
    hc.C.assign(nt, 0.0);
    hc.H.assign(grid.size(), 0.0);

    for (int n = 0; n < nt; ++n) {
        const double a = fb.a_tilde[n];
        const double b = fb.b_tilde[n];
        if (a < grid.band_lo() || b > grid.band_hi())
            throw Error("compute_holding_cost: boundary outside the band at level " +
                        std::to_string(n));
        RunningIntegral hint = h_integral_row(spec, grid, n);
        // The boundary formula needs the time partial of W, which does not
        // exist on the terminal row. There W(.,0) = 0 for all times makes the
        // time term vanish on the origin line, leaving an exact expression.
        if (n == nt - 1) {
            const int j0 = grid.zero_index();
            const double s0 = spec.sigma(0.0, 0.0);
            hc.C[n] = -0.5 * s0 * s0 * ws.Wxx[grid.index(n, j0)] -
                      spec.mu(0.0) * ws.Wx[grid.index(n, j0)];
        } else {
            hc.C[n] = boundary_C(ws, spec, grid, n, a, b, side, hint);
        }
        for (int j = 0; j < ny; ++j)
            hc.H[grid.index(n, j)] = hint.nodes[static_cast<size_t>(j)] + hc.C[n];
    }
    return hc;
}

double holding_cost_curve_mismatch(const WSurface& ws, const FreeBoundaries& fb,
                                   const ProblemSpec& spec, const Grid& grid) {
    auto lower = compute_holding_cost(ws, fb, spec, grid, CurveSide::Lower);
    auto upper = compute_holding_cost(ws, fb, spec, grid, CurveSide::Upper);
    double worst = 0.0;
    const double cutoff = (1.0 - kTerminalLayerFraction) * grid.horizon();
    for (int n = 0; n + 1 < grid.nt(); ++n) {
        if (grid.t(n) > cutoff) continue;
        worst = std::max(worst, std::fabs(lower.C[n] - upper.C[n]));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// HJB residual
// ---------------------------------------------------------------------------

double default_hjb_tol(const Grid& grid) {
    const double ref = 0.065; // dy + dt of the 201x201 reference resolution
    return 1e-4 * std::max(1.0, (grid.dy() + grid.dt()) / ref);
}

HJBReport hjb_residual(const WSurface& ws, const HoldingCost& hc, const FreeBoundaries& fb,
                       const ProblemSpec& spec, double hjb_tol) {
    const Grid& grid = ws.grid;
    const int nt = grid.nt(), ny = grid.ny();
    const double dy = grid.dy();
    HJBReport rep;
    rep.values.assign(grid.size(), 0.0);
    rep.hjb_tol = hjb_tol > 0.0 ? hjb_tol : default_hjb_tol(grid);
    rep.min_outside = 1e300;
    // a boundary that lands exactly on a node must not flip that node's side
    const double guard = 1e-9 * (grid.band_hi() - grid.band_lo());
    const double inside_cutoff = (1.0 - kTerminalLayerFraction) * grid.horizon();

    const double theta = ws.theta;
    const double dt = grid.dt();
    for (int n = 0; n + 1 < nt; ++n) {
        const double t = grid.t(n);
        const double damp = std::exp(-spec.c * t);
        const double a = fb.a_tilde[n];
        const double b = fb.b_tilde[n];
        for (int j = 1; j + 1 < ny; ++j) {
            const double x = grid.y(j);
            const size_t id = grid.index(n, j);
            const size_t id1 = grid.index(n + 1, j);
            const double s = spec.sigma(0.0, x);
            if (x > a + guard && x < b - guard) {
                // Inside nodes use the solve's own two-level weighting: the
                // forward quotient of W (with the complementarity integral
                // removed) plus the theta-average of the spatial terms. This
                // measures the scheme's consistency without the centered
                // stencil's remainder, which spikes when the boundary
                // crosses a grid cell between levels.
                const double quot =
                    (ws.W[id1] - ws.W[id]) / dt - ws.residual_integral[id];
                const double g0 = 0.5 * s * s * ws.Wxx[id] + spec.mu(x) * ws.Wx[id] + hc.H[id];
                const double g1 =
                    0.5 * s * s * ws.Wxx[id1] + spec.mu(x) * ws.Wx[id1] + hc.H[id1];
                const double r = quot + theta * g0 + (1.0 - theta) * g1;
                rep.values[id] = r;
                if (t <= inside_cutoff)
                    rep.max_abs_inside = std::max(rep.max_abs_inside, std::fabs(r));
                const double wx = ws.Wx[id];
                if (wx < -damp * spec.f1(t, x) || wx > damp * spec.f2(t, x))
                    ++rep.inside_gradient_violations;
            } else {
                const double r =
                    0.5 * s * s * ws.Wxx[id] + spec.mu(x) * ws.Wx[id] + hc.H[id] + ws.Ws[id];
                rep.values[id] = r;
                if (x < a - rep.outside_margin_cells * dy ||
                    x > b + rep.outside_margin_cells * dy) {
                    ++rep.outside_nodes;
                    if (r > 0.0) ++rep.outside_positive;
                    rep.min_outside = std::min(rep.min_outside, r);
                }
            }
            if (x < a - guard) {
                rep.max_grad_gap_lower =
                    std::max(rep.max_grad_gap_lower, std::fabs(ws.Wx[id] + damp * spec.f1(t, x)));
            } else if (x > b + guard) {
                rep.max_grad_gap_upper =
                    std::max(rep.max_grad_gap_upper, std::fabs(ws.Wx[id] - damp * spec.f2(t, x)));
            }
        }
    }
    rep.residual_ok = rep.max_abs_inside < rep.hjb_tol;
    rep.outside_ok = rep.outside_nodes > 0 && rep.outside_positive == rep.outside_nodes;
    rep.gradient_ok = rep.inside_gradient_violations == 0 &&
                      rep.max_grad_gap_lower < 1e-12 && rep.max_grad_gap_upper < 1e-12;
    return rep;
}

} // namespace scl
