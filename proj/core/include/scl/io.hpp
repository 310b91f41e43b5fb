#pragma once

#include <string>
#include <vector>

#include "scl/game_solver.hpp"
#include "scl/problem.hpp"
#include "scl/simulate.hpp"
#include "scl/singular_value.hpp"

namespace scl {

class IoError : public Error {
public:
    using Error::Error;
};

// CSV emission, 17 significant digits throughout so doubles round-trip.

void write_curves_csv(const std::string& path, const CurvePair& curves);
void write_terminal_csv(const std::string& path, const TransformedTerminal& tt,
                        const std::vector<double>& g_samples);
void write_surface_csv(const std::string& path, const ValueSurface& surface);
void write_boundaries_csv(const std::string& path, const FreeBoundaries& fb);
void write_w_csv(const std::string& path, const WSurface& ws, const ValueSurface& surface,
                 const HJBReport& hjb);
void write_holding_cost_csv(const std::string& path, const HoldingCost& hc);
void write_text(const std::string& path, const std::string& content);

// gnuplot-friendly whitespace-separated data

void write_plot_curves(const std::string& path, const CurvePair& curves);
void write_plot_boundaries(const std::string& path, const FreeBoundaries& fb);
void write_plot_terminal_segment(const std::string& path, double horizon, double A, double B);

// Binary solve cache: magic "SCL1", little-endian, header (nt, ny as u32;
// T, band as f64), then row-major doubles for V, residual, terminal, the
// region bytes and the boundary curves.

void write_cache(const std::string& path, const ValueSurface& surface,
                 const FreeBoundaries& fb);

struct CachedSolve {
    ValueSurface surface;
    FreeBoundaries fb;
};

/// Reads a cache written by write_cache. The obstacle tables are rebuilt
/// from the problem definition; a mismatch between the cached values and the
/// rebuilt obstacles (wrong problem for this cache) is an error.
CachedSolve read_cache(const std::string& path, const ProblemSpec& spec,
                       const SolverParams& params);

bool file_exists(const std::string& path);

} // namespace scl
