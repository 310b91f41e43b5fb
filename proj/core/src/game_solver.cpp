#include "scl/game_solver.hpp"

#include <algorithm>
#include <cmath>

namespace scl {

double ValueSurface::interp_row(int n, double x) const {
    const int ny = grid.ny();
    if (x <= grid.band_lo()) return at(n, 0);
    if (x >= grid.band_hi()) return at(n, ny - 1);
    const double rel = (x - grid.band_lo()) / grid.dy();
    const int j = std::min(ny - 2, static_cast<int>(rel));
    const double w = rel - j;
    return at(n, j) * (1.0 - w) + at(n, j + 1) * w;
}

double ValueSurface::interp(double t, double x) const {
    const int nt = grid.nt();
    if (t <= 0.0) return interp_row(0, x);
    if (t >= grid.horizon()) return interp_row(nt - 1, x);
    const double rel = t / grid.dt();
    const int n = std::min(nt - 2, static_cast<int>(rel));
    const double w = rel - n;
    return interp_row(n, x) * (1.0 - w) + interp_row(n + 1, x) * w;
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

ValueSurface solve_dynkin_game(const ProblemSpec& spec, const Grid& grid,
                               const std::vector<double>& terminal_samples,
                               const SolverParams& params) {
    const int nt = grid.nt();
    const int ny = grid.ny();
    if (terminal_samples.size() != static_cast<size_t>(ny))
        throw Error("solve_dynkin_game: terminal sample count does not match the grid");
    if (!(params.theta >= 0.5 && params.theta <= 1.0))
        throw Error("solve_dynkin_game: theta must lie in [1/2, 1]");
    if (!(params.omega > 0.0 && params.omega < 2.0))
        throw Error("solve_dynkin_game: relaxation factor must lie in (0, 2)");

    ValueSurface out{grid, params, {}, {}, {}, {}, {}, {}};
    out.V.assign(grid.size(), 0.0);
    out.region.assign(grid.size(), Region::Continuation);
    out.residual.assign(grid.size(), 0.0);
    out.lower.resize(grid.size());
    out.upper.resize(grid.size());
    out.terminal = terminal_samples;

    // obstacle and source tables
    std::vector<double> source(grid.size());
    for (int n = 0; n < nt; ++n) {
        const double t = grid.t(n);
        const double growth = std::exp(spec.c * t);
        for (int j = 0; j < ny; ++j) {
            const double y = grid.y(j);
            const size_t id = grid.index(n, j);
            out.lower[id] = -spec.f1(t, y);
            out.upper[id] = spec.f2(t, y);
            if (!(out.lower[id] <= out.upper[id]))
                throw Error("solve_dynkin_game: obstacles cross (-f1 > f2) at t=" +
                            format17(t) + ", y=" + format17(y));
            source[id] = growth * spec.h(t, y);
        }
    }

    // terminal row must respect the sandwich; it is assigned exactly
    {
        const size_t row = grid.index(nt - 1, 0);
        const double slack = 1e-12 * std::max(1.0, spec.bound);
        for (int j = 0; j < ny; ++j) {
            const double v = terminal_samples[static_cast<size_t>(j)];
            if (v < out.lower[row + j] - slack || v > out.upper[row + j] + slack)
                throw Error("solve_dynkin_game: terminal condition leaves the obstacle "
                            "sandwich at y=" + format17(grid.y(j)));
        }
    }

    // spatial operator coefficients (time-independent)
    const double dy = grid.dy();
    const double dt = grid.dt();
    std::vector<double> cl(ny, 0.0), cd(ny, 0.0), cu(ny, 0.0);
    for (int j = 1; j + 1 < ny; ++j) {
        const double y = grid.y(j);
        const double s = spec.sigma(0.0, y);
        const double diff = 0.5 * s * s;
        const double drift = spec.drift_aux(y);
        cl[j] = diff / (dy * dy) - drift / (2.0 * dy);
        cd[j] = -2.0 * diff / (dy * dy);
        cu[j] = diff / (dy * dy) + drift / (2.0 * dy);
    }

    const double theta = params.theta;
    const double omega = params.omega;

    // terminal assignment and classification
    for (int j = 0; j < ny; ++j) {
        const size_t id = grid.index(nt - 1, j);
        out.V[id] = terminal_samples[static_cast<size_t>(j)];
        out.region[id] = out.V[id] == out.lower[id]   ? Region::LowerContact
                         : out.V[id] == out.upper[id] ? Region::UpperContact
                                                      : Region::Continuation;
    }

    std::vector<double> rhs(ny), v(ny);
    for (int n = nt - 2; n >= 0; --n) {
        const double* vnext = out.V.data() + grid.index(n + 1, 0);
        const double* lo = out.lower.data() + grid.index(n, 0);
        const double* hi = out.upper.data() + grid.index(n, 0);
        const double* srcn = source.data() + grid.index(n, 0);
        const double* srcn1 = source.data() + grid.index(n + 1, 0);

        for (int j = 1; j + 1 < ny; ++j) {
            const double lyn1 = cl[j] * vnext[j - 1] + cd[j] * vnext[j] + cu[j] * vnext[j + 1];
            rhs[j] = vnext[j] + (1.0 - theta) * dt * lyn1 +
                     dt * (theta * srcn[j] + (1.0 - theta) * srcn1[j]);
        }

        // warm start from the next level, clamped into this level's sandwich
        for (int j = 0; j < ny; ++j) v[j] = std::clamp(vnext[j], lo[j], hi[j]);
        v[0] = lo[0];
        v[ny - 1] = hi[ny - 1];

        double max_update = 0.0;
        int sweep = 0;
        for (; sweep < params.max_sweeps; ++sweep) {
            max_update = 0.0;
            for (int j = 1; j + 1 < ny; ++j) {
                const double diag = 1.0 - theta * dt * cd[j];
                const double gs =
                    (rhs[j] + theta * dt * (cl[j] * v[j - 1] + cu[j] * v[j + 1])) / diag;
                double cand = v[j] + omega * (gs - v[j]);
                cand = std::clamp(cand, lo[j], hi[j]);
                const double delta = std::fabs(cand - v[j]);
                if (delta > max_update) max_update = delta;
                v[j] = cand;
            }
            if (max_update < params.sweep_tol) break;
        }
        if (sweep == params.max_sweeps)
            throw GameSolverError("solve_dynkin_game: projected relaxation did not converge "
                                  "at time level " + std::to_string(n) + " (last update " +
                                      format17(max_update) + ")",
                                  n, max_update);

        double* vn = out.V.data() + grid.index(n, 0);
        Region* rn = out.region.data() + grid.index(n, 0);
        for (int j = 0; j < ny; ++j) {
            vn[j] = v[j];
            rn[j] = v[j] == lo[j] ? Region::LowerContact
                    : v[j] == hi[j] ? Region::UpperContact
                                    : Region::Continuation;
        }
    }

    // theta-stencil residual at interior nodes (terminal row and edges stay 0)
    for (int n = 0; n + 1 < nt; ++n) {
        const double* vn = out.V.data() + grid.index(n, 0);
        const double* vnext = out.V.data() + grid.index(n + 1, 0);
        const double* srcn = source.data() + grid.index(n, 0);
        const double* srcn1 = source.data() + grid.index(n + 1, 0);
        double* res = out.residual.data() + grid.index(n, 0);
        for (int j = 1; j + 1 < ny; ++j) {
            const double lyn = cl[j] * vn[j - 1] + cd[j] * vn[j] + cu[j] * vn[j + 1];
            const double lyn1 = cl[j] * vnext[j - 1] + cd[j] * vnext[j] + cu[j] * vnext[j + 1];
            res[j] = (vnext[j] - vn[j]) / dt + theta * (lyn + srcn[j]) +
                     (1.0 - theta) * (lyn1 + srcn1[j]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Residual report
// ---------------------------------------------------------------------------

ResidualField pde_residual(const ValueSurface& surface, const ProblemSpec& spec) {
    (void)spec; // the stencil residual is carried by the surface itself
    const Grid& grid = surface.grid;
    ResidualField out;
    out.values = surface.residual;
    const double tol = surface.params.residual_tol;
    for (int n = 0; n + 1 < grid.nt(); ++n) {
        for (int j = 1; j + 1 < grid.ny(); ++j) {
            const size_t id = grid.index(n, j);
            const double r = surface.residual[id];
            switch (surface.region[id]) {
            case Region::Continuation:
                out.max_continuation_abs = std::max(out.max_continuation_abs, std::fabs(r));
                if (std::fabs(r) > tol) ++out.misclassified;
                break;
            case Region::LowerContact:
                out.max_lower_excess = std::max(out.max_lower_excess, r);
                if (r > tol) ++out.misclassified;
                break;
            case Region::UpperContact:
                out.max_upper_excess = std::min(out.max_upper_excess, r);
                if (r < -tol) ++out.misclassified;
                break;
            }
        }
    }
    out.classification_ok = out.misclassified == 0;
    return out;
}

// ---------------------------------------------------------------------------
// Free boundaries
// ---------------------------------------------------------------------------

FreeBoundaries extract_free_boundaries(const ValueSurface& surface, const ProblemSpec& spec,
                                       const CurvePair& curves) {
    (void)spec;
    (void)curves; // reference curves are compared against in the verification layer
    const Grid& grid = surface.grid;
    const int nt = grid.nt();
    const int ny = grid.ny();
    FreeBoundaries fb;
    fb.t.resize(nt);
    fb.a_tilde.resize(nt);
    fb.b_tilde.resize(nt);
    fb.da_dt.assign(nt, 0.0);
    fb.db_dt.assign(nt, 0.0);

    for (int n = 0; n < nt; ++n) {
        fb.t[n] = grid.t(n);
        int ja = -1;
        while (ja + 1 < ny && surface.region_at(n, ja + 1) == Region::LowerContact) ++ja;
        int jb = ny;
        while (jb - 1 >= 0 && surface.region_at(n, jb - 1) == Region::UpperContact) --jb;
        if (ja < 0 || jb >= ny || ja + 1 > jb - 1)
            throw Error("extract_free_boundaries: no continuation nodes at time level " +
                        std::to_string(n) + " (grid too coarse or assumptions violated)");

        // Sub-cell edge from the first two continuation-side obstacle gaps.
        // With smooth fit the gap off the obstacle grows quadratically in the
        // distance to the contact edge, so the gap ratio locates the edge
        // inside the cell. (The stencil residual is useless here: it is
        // already at solver tolerance on the first continuation node.)
        auto subcell = [&](int cont, int step, const std::vector<double>& obstacle,
                           double sign) -> double {
            if (n == nt - 1) return 0.5; // terminal row: midpoint, within half a cell
            const int cont2 = cont + step;
            if (cont2 <= 0 || cont2 >= ny - 1) return 0.5;
            const double g1 =
                sign * (surface.V[grid.index(n, cont)] - obstacle[grid.index(n, cont)]);
            const double g2 =
                sign * (surface.V[grid.index(n, cont2)] - obstacle[grid.index(n, cont2)]);
            if (!(g1 > 0.0) || !(g2 > g1)) return 0.5;
            const double r = std::sqrt(g2 / g1);
            const double dist = grid.dy() / (r - 1.0); // distance from cont to the edge
            return 1.0 - std::clamp(dist / grid.dy(), 0.0, 1.0);
        };

        fb.a_tilde[n] = grid.y(ja) + subcell(ja + 1, +1, surface.lower, +1.0) * grid.dy();
        fb.b_tilde[n] = grid.y(jb) - subcell(jb - 1, -1, surface.upper, -1.0) * grid.dy();
    }

    const double dt = grid.dt();
    for (int n = 0; n < nt; ++n) {
        const int nm = std::max(0, n - 1);
        const int np = std::min(nt - 1, n + 1);
        fb.da_dt[n] = (fb.a_tilde[np] - fb.a_tilde[nm]) / ((np - nm) * dt);
        fb.db_dt[n] = (fb.b_tilde[np] - fb.b_tilde[nm]) / ((np - nm) * dt);
    }
    for (int n = 1; n + 1 < nt; ++n) {
        const double d2a = fb.a_tilde[n + 1] - 2.0 * fb.a_tilde[n] + fb.a_tilde[n - 1];
        const double d2b = fb.b_tilde[n + 1] - 2.0 * fb.b_tilde[n] + fb.b_tilde[n - 1];
        // second difference quotient measured against kink_tol / dt
        if (std::fabs(d2a) / dt > surface.params.kink_tol ||
            std::fabs(d2b) / dt > surface.params.kink_tol)
            fb.kink_levels.push_back(n);
    }
    return fb;
}

// ---------------------------------------------------------------------------
// Smooth fit
// ---------------------------------------------------------------------------

SmoothFitReport smooth_fit_check(const ValueSurface& surface, const FreeBoundaries& fb,
                                 const ProblemSpec& spec) {
    const Grid& grid = surface.grid;
    const int nt = grid.nt();
    const double dy = grid.dy();
    SmoothFitReport rep;
    rep.gap_a.resize(nt - 1);
    rep.gap_b.resize(nt - 1);

    // quadratic interpolation through three continuation-side nodes, so the
    // probe value carries no sub-cell placement noise
    auto probe = [&](int n, double x, int j_first, int dir) {
        const int j0 = dir > 0 ? std::clamp(j_first, 1, grid.ny() - 3)
                               : std::clamp(j_first, 2, grid.ny() - 2);
        const double y0 = grid.y(j0);
        const double v0 = surface.at(n, j0);
        const double v1 = surface.at(n, j0 + dir);
        const double v2 = surface.at(n, j0 + 2 * dir);
        const double h = dir * dy;
        const double u = (x - y0) / h;
        return v0 + u * (v1 - v0) + 0.5 * u * (u - 1.0) * (v2 - 2.0 * v1 + v0);
    };

    for (int n = 0; n + 1 < nt; ++n) {
        const double t = grid.t(n);
        const double a = fb.a_tilde[n];
        const double b = fb.b_tilde[n];
        // one-sided derivative anchored at the boundary point, where V equals
        // the obstacle exactly by continuity
        const int ja_first = static_cast<int>(std::floor((a - grid.band_lo()) / dy)) + 1;
        const int jb_first = static_cast<int>(std::ceil((b - grid.band_lo()) / dy)) - 1;
        const double da = (probe(n, a + dy, ja_first, +1) - (-spec.f1(t, a))) / dy;
        const double db = (spec.f2(t, b) - probe(n, b - dy, jb_first, -1)) / dy;
        rep.gap_a[n] = std::fabs(da + spec.f1_y(t, a));
        rep.gap_b[n] = std::fabs(db - spec.f2_y(t, b));
        rep.max_gap_a = std::max(rep.max_gap_a, rep.gap_a[n]);
        rep.max_gap_b = std::max(rep.max_gap_b, rep.gap_b[n]);
    }
    rep.gap_a_mid = rep.gap_a[(nt - 1) / 2];
    rep.gap_b_mid = rep.gap_b[(nt - 1) / 2];
    return rep;
}

// ---------------------------------------------------------------------------
// Boundary time-derivative bounds
// ---------------------------------------------------------------------------

BoundaryTimeDerivativeReport boundary_time_derivative_check(const ValueSurface& surface,
                                                            const FreeBoundaries& fb,
                                                            const ProblemSpec& spec,
                                                            double tol) {
    const Grid& grid = surface.grid;
    const int nt = grid.nt();
    const double dt = grid.dt();
    BoundaryTimeDerivativeReport rep;
    if (tol <= 0.0) tol = 10.0 * (grid.dy() + dt);
    rep.tol = tol;
    rep.min_forward_margin_a = rep.min_backward_margin_b = 1e300;
    rep.max_backward_margin_a = rep.max_forward_margin_b = -1e300;

    for (int n = 1; n + 2 < nt; ++n) {
        const double t = grid.t(n);
        {
            const double x = fb.a_tilde[n];
            const double qf = (surface.interp_row(n + 1, x) - surface.interp_row(n, x)) / dt;
            const double qb = (surface.interp_row(n, x) - surface.interp_row(n - 1, x)) / dt;
            const double obd = -spec.f1_t(t, x);
            rep.min_forward_margin_a = std::min(rep.min_forward_margin_a, qf - obd);
            rep.max_backward_margin_a = std::max(rep.max_backward_margin_a, qb - obd);
            rep.k_hat = std::max({rep.k_hat, std::fabs(qf), std::fabs(qb)});
        }
        {
            const double x = fb.b_tilde[n];
            const double qf = (surface.interp_row(n + 1, x) - surface.interp_row(n, x)) / dt;
            const double qb = (surface.interp_row(n, x) - surface.interp_row(n - 1, x)) / dt;
            const double obd = spec.f2_t(t, x);
            rep.max_forward_margin_b = std::max(rep.max_forward_margin_b, qf - obd);
            rep.min_backward_margin_b = std::min(rep.min_backward_margin_b, qb - obd);
            rep.k_hat = std::max({rep.k_hat, std::fabs(qf), std::fabs(qb)});
        }
    }
    rep.bounds_hold = rep.min_forward_margin_a > -tol && rep.max_backward_margin_a < tol &&
                      rep.max_forward_margin_b < tol && rep.min_backward_margin_b > -tol &&
                      std::isfinite(rep.k_hat);
    return rep;
}

} // namespace scl
