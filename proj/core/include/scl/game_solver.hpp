#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scl/grid.hpp"
#include "scl/problem.hpp"

namespace scl {

enum class Region : uint8_t { LowerContact = 0, Continuation = 1, UpperContact = 2 };

struct SolverParams {
    double theta = 0.5;         // time weighting; 1.0 is the robust fallback
    double omega = 1.5;         // projected-relaxation factor
    double sweep_tol = 1e-10;   // max node update that declares a level converged
    int max_sweeps = 20000;
    double residual_tol = 1e-6; // stencil-residual slack for classification checks
    double kink_tol = 10.0;     // boundary kink flag threshold
};

class GameSolverError : public Error {
public:
    GameSolverError(const std::string& msg, int level, double last_residual)
        : Error(msg), level(level), last_residual(last_residual) {}
    int level;
    double last_residual;
};

/// Discrete solution of the double-obstacle problem: V, per-node region
/// labels and the theta-stencil residual. Obstacle samples are kept so the
/// sandwich can be verified exactly downstream. Rows are time levels; the
/// last row is the terminal condition.
struct ValueSurface {
    Grid grid;
    SolverParams params;
    std::vector<double> V;
    std::vector<Region> region;
    std::vector<double> residual; // zero on the terminal row and lateral edges
    std::vector<double> lower;    // -f1(t,y) samples
    std::vector<double> upper;    // f2(t,y) samples
    std::vector<double> terminal; // supplied terminal samples (g or its envelope)

    double at(int n, int j) const { return V[grid.index(n, j)]; }
    Region region_at(int n, int j) const { return region[grid.index(n, j)]; }

    /// Linear interpolation along a time row.
    double interp_row(int n, double x) const;
    /// Bilinear interpolation in (t, y).
    double interp(double t, double x) const;
};

/// Backward theta-scheme for the double-obstacle parabolic problem. Each
/// time level solves the linear complementarity problem with obstacles
/// [-f1, f2] by projected successive relaxation in a fixed node order;
/// lateral sides are clamped to the obstacles. Throws GameSolverError with
/// the level index and last sweep residual on non-convergence, and Error on
/// input defects (obstacle crossing, terminal outside the sandwich).
ValueSurface solve_dynkin_game(const ProblemSpec& spec, const Grid& grid,
                               const std::vector<double>& terminal_samples,
                               const SolverParams& params = {});

/// Stencil residual of the solved surface plus the trichotomy bookkeeping:
/// residual ~ 0 on continuation nodes, <= tol on lower contact, >= -tol on
/// upper contact.
struct ResidualField {
    std::vector<double> values;
    double max_continuation_abs = 0.0;
    double max_lower_excess = 0.0; // most positive residual seen on lower contact
    double max_upper_excess = 0.0; // most negative residual seen on upper contact
    int misclassified = 0;
    bool classification_ok = false;
};
ResidualField pde_residual(const ValueSurface& surface, const ProblemSpec& spec);

/// Free boundaries per time level, interpolated to sub-cell accuracy from
/// the complementarity residual, with slope estimates and kink flags.
struct FreeBoundaries {
    std::vector<double> t;
    std::vector<double> a_tilde, b_tilde;
    std::vector<double> da_dt, db_dt;
    std::vector<int> kink_levels;

    double a_at(double time) const { return lerp_series(t, a_tilde, time); }
    double b_at(double time) const { return lerp_series(t, b_tilde, time); }
};
FreeBoundaries extract_free_boundaries(const ValueSurface& surface, const ProblemSpec& spec,
                                       const CurvePair& curves);

/// One-sided d V/d y from the continuation side at each boundary, compared
/// against the obstacle derivative there. The derivative estimate anchors at
/// the interpolated boundary point itself (where V equals the obstacle), so
/// the gap decays linearly in the cell width.
struct SmoothFitReport {
    std::vector<double> gap_a, gap_b; // per interior time level
    double max_gap_a = 0.0;
    double max_gap_b = 0.0;
    double gap_a_mid = 0.0; // at the mid-horizon level
    double gap_b_mid = 0.0;
};
SmoothFitReport smooth_fit_check(const ValueSurface& surface, const FreeBoundaries& fb,
                                 const ProblemSpec& spec);

/// One-sided time difference quotients of V along the boundaries, checked
/// against the obstacle time-derivative bounds. k_hat is the largest
/// quotient magnitude observed (always finite on a finite grid).
struct BoundaryTimeDerivativeReport {
    double min_forward_margin_a = 0.0;  // min of (forward quotient + f1_t); want > -tol
    double max_backward_margin_a = 0.0; // max of (backward quotient + f1_t); want < tol
    double max_forward_margin_b = 0.0;  // max of (forward quotient - f2_t); want < tol
    double min_backward_margin_b = 0.0; // min of (backward quotient - f2_t); want > -tol
    double k_hat = 0.0;
    double tol = 0.0;
    bool bounds_hold = false;
};
BoundaryTimeDerivativeReport boundary_time_derivative_check(const ValueSurface& surface,
                                                            const FreeBoundaries& fb,
                                                            const ProblemSpec& spec,
                                                            double tol = 0.0);

/// Monte Carlo probe of the cone-monotonicity conditions: at sampled contact
/// points, extending the continuation region by a cone must not lower the
/// exit-functional on the lower side (mirrored above). A diagnostic, not a
/// proof; failures are reported, never thrown.
struct ConeProbeConfig {
    int n_samples = 3;
    double eta = 1.0;    // cone aperture; 0 degenerates the cone to a point
    double offset = 0.5; // sampled contact depth below/above the boundary
    int n_paths = 10000;
    double dt = 1e-3;
    uint64_t seed = 321;
};
struct ConeProbeSample {
    double s = 0.0, x = 0.0;
    bool lower_side = true;
    double f_region = 0.0, f_region_se = 0.0;
    double f_cone = 0.0, f_cone_se = 0.0;
    bool holds_within_3se = false;
};
struct ConeProbeReport {
    std::vector<ConeProbeSample> samples;
    bool all_hold = false;
};
ConeProbeReport cone_monotonicity_probe(const ProblemSpec& spec, const Grid& grid,
                                        const ValueSurface& surface, const FreeBoundaries& fb,
                                        const ConeProbeConfig& cfg = {});

} // namespace scl
