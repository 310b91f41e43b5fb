#include <algorithm>
#include <cmath>

#include "scl/game_solver.hpp"
#include "scl/rng.hpp"

namespace scl {

namespace {

double terminal_payoff(const ValueSurface& surface, double y) {
    const Grid& grid = surface.grid;
    if (y <= grid.band_lo()) return surface.terminal.front();
    if (y >= grid.band_hi()) return surface.terminal.back();
    const double rel = (y - grid.band_lo()) / grid.dy();
    const int j = std::min(grid.ny() - 2, static_cast<int>(rel));
    const double w = rel - j;
    return surface.terminal[static_cast<size_t>(j)] * (1.0 - w) +
           surface.terminal[static_cast<size_t>(j) + 1] * w;
}

// root of the curve-defining function at one time, for placing the samples
// between the free boundary and the reference curve
double reference_curve(const ProblemSpec& spec, double t, bool lower) {
    double lo = lower ? spec.band_lo : 0.0;
    double hi = lower ? 0.0 : spec.band_hi;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double v = lower ? spec.lower_curve_function(t, mid)
                               : spec.upper_curve_function(t, mid);
        (v < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Exit functional from (s,x): barriers are the free boundaries, extended on
// one side by the cone's rising (falling) edge when eta > 0. Per-path
// payoffs are returned so region and cone runs pair up path by path.
void exit_payoffs(const ProblemSpec& spec, const ValueSurface& surface,
                  const FreeBoundaries& fb, bool lower_side, double s, double x, double eta,
                  int n_paths, double dt, uint64_t seed, std::vector<double>& out) {
    const double T = spec.horizon;
    const int steps = std::max(1, static_cast<int>(std::lround((T - s) / dt)));
    const double step_dt = (T - s) / steps;
    const double sqdt = std::sqrt(step_dt);

    out.assign(static_cast<size_t>(n_paths), 0.0);
    for (int p = 0; p < n_paths; ++p) {
        PathRng rng(seed, static_cast<uint64_t>(p));
        double y = x;
        double dividend = 0.0;
        double payoff = 0.0;
        bool stopped = false;
        for (int k = 0; k < steps && !stopped; ++k) {
            const double t0 = s + k * step_dt;
            const double t1 = s + (k + 1) * step_dt;
            dividend += std::exp(spec.c * t0) * spec.h(t0, y) * step_dt;
            y += spec.drift_aux(y) * step_dt +
                 spec.sigma(0.0, y) * sqdt * rng.gaussian(static_cast<uint64_t>(k));
            double lo = fb.a_at(t1);
            double hi = fb.b_at(t1);
            if (eta > 0.0) {
                if (lower_side)
                    lo = std::min(lo, x + (t1 - s) / eta);
                else
                    hi = std::max(hi, x - (t1 - s) / eta);
            }
            if (y <= lo || y <= spec.band_lo) {
                payoff = dividend - spec.f1(t1, y);
                stopped = true;
            } else if (y >= hi || y >= spec.band_hi) {
                payoff = dividend + spec.f2(t1, y);
                stopped = true;
            }
        }
        if (!stopped) payoff = dividend + terminal_payoff(surface, y);
        out[static_cast<size_t>(p)] = payoff;
    }
}

} // namespace

ConeProbeReport cone_monotonicity_probe(const ProblemSpec& spec, const Grid& /*grid*/,
                                        const ValueSurface& surface, const FreeBoundaries& fb,
                                        const ConeProbeConfig& cfg) {
    ConeProbeReport report;
    report.all_hold = true;
    const double T = spec.horizon;

    std::vector<double> base_payoffs, cone_payoffs, diffs;
    for (int k = 0; k < cfg.n_samples; ++k) {
        const double frac =
            cfg.n_samples > 1 ? static_cast<double>(k) / (cfg.n_samples - 1) : 0.0;
        const double s = T * (0.9 - 0.25 * frac);
        for (int side = 0; side < 2; ++side) {
            const bool lower = side == 0;
            ConeProbeSample sample;
            sample.s = s;
            sample.lower_side = lower;
            // the monotonicity conditions concern points of the continuation
            // closure lying beyond the reference curve: sample between the
            // free boundary and a(t) (resp. b(t))
            if (lower) {
                const double a_ref = reference_curve(spec, s, true);
                const double a_free = fb.a_at(s);
                sample.x = std::max(a_ref - cfg.offset, a_free + 0.25 * (a_ref - a_free));
            } else {
                const double b_ref = reference_curve(spec, s, false);
                const double b_free = fb.b_at(s);
                sample.x = std::min(b_ref + cfg.offset, b_free - 0.25 * (b_free - b_ref));
            }

            const uint64_t row_seed =
                cfg.seed + 1000003ULL * static_cast<uint64_t>(k * 2 + side);
            exit_payoffs(spec, surface, fb, lower, s, sample.x, 0.0, cfg.n_paths, cfg.dt,
                         row_seed, base_payoffs);
            MCEstimate base = summarize(base_payoffs);
            sample.f_region = base.mean;
            sample.f_region_se = base.se;

            if (cfg.eta <= 0.0) {
                // degenerate cone: the regions coincide
                sample.f_cone = sample.f_region;
                sample.f_cone_se = sample.f_region_se;
                sample.holds_within_3se = true;
            } else {
                exit_payoffs(spec, surface, fb, lower, s, sample.x, cfg.eta, cfg.n_paths,
                             cfg.dt, row_seed, cone_payoffs);
                MCEstimate cone = summarize(cone_payoffs);
                sample.f_cone = cone.mean;
                sample.f_cone_se = cone.se;
                // paired by construction: same path index, same increments
                diffs.assign(base_payoffs.size(), 0.0);
                for (size_t i = 0; i < diffs.size(); ++i)
                    diffs[i] = cone_payoffs[i] - base_payoffs[i];
                MCEstimate d = summarize(diffs);
                sample.holds_within_3se =
                    lower ? d.mean >= -3.0 * d.se : d.mean <= 3.0 * d.se;
            }
            report.all_hold = report.all_hold && sample.holds_within_3se;
            report.samples.push_back(sample);
        }
    }
    return report;
}

} // namespace scl
