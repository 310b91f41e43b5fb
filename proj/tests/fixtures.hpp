#pragma once

// Canonical test problems. The symmetric fixture has zero drift, unit
// diffusion, h(t,y) = y and obstacle costs that are mirror images of each
// other under y -> -y, so V(t,y) = -V(t,-y) and a(t) = -b(t) hold exactly
// and serve as oracles. The jump fixture replaces the terminal payoff with
// g(y) = 2y, which leaves the obstacle sandwich outside a computable [A,B].

#include "scl/grid.hpp"
#include "scl/problem.hpp"

namespace fixtures {

inline scl::ProblemSpec p0(double horizon = 1.0) {
    using scl::Expr;
    return scl::make_problem(
        0.0, 0.0, horizon, -6.0, 6.0, Expr::parse("1"), Expr::parse("2+tanh(y+1)"),
        Expr::parse("2-tanh(y-1)"), Expr::parse("y"),
        Expr::parse("max(-(2+tanh(y+1)), min(2-tanh(y-1), y))"), 1e-8, 8.0);
}

inline scl::ProblemSpec p0_jump(double horizon = 1.0) {
    using scl::Expr;
    return scl::make_problem(0.0, 0.0, horizon, -6.0, 6.0, Expr::parse("1"),
                             Expr::parse("2+tanh(y+1)"), Expr::parse("2-tanh(y-1)"),
                             Expr::parse("y"), Expr::parse("2*y"), 1e-8, 15.0);
}

inline scl::Grid p0_grid(const scl::ProblemSpec& spec, int nt = 101, int ny = 101) {
    return scl::Grid(spec.horizon, spec.band_lo, spec.band_hi, nt, ny);
}

} // namespace fixtures
