#pragma once

#include <map>
#include <string>

#include "scl/game_solver.hpp"
#include "scl/problem.hpp"
#include "scl/simulate.hpp"

namespace scl {

class ConfigError : public Error {
public:
    using Error::Error;
};

/// One run's configuration, parsed from a single JSON document. Coefficient
/// functions are expression strings; entries of the constants table are
/// substituted textually into them before parsing, so the expression
/// language itself knows only t and y.
struct RunConfig {
    std::map<std::string, double> constants;

    double c = 0.0;
    double d = 0.0;
    double horizon = 1.0;
    double band_lo = -1.0;
    double band_hi = 1.0;
    double sigma_floor = 1e-8;
    double bound = 1.0;
    std::string sigma_text, f1_text, f2_text, h_text, g_text;

    int nt = 201;
    int ny = 201;

    SolverParams solver;
    double root_tol = 1e-10;
    double hjb_tol = 0.0; // 0: derive from the grid

    VerifyConfig mc;

    std::string out_dir = "out";
    bool general_terminal = false;

    /// Substitutes constants, parses the expressions and assembles the
    /// problem definition.
    ProblemSpec build_problem() const;
    Grid build_grid() const;

    /// Canonical JSON rendering; parsing it back yields an identical config.
    std::string dump() const;

    bool operator==(const RunConfig& other) const;
};

/// Substitutes identifiers found in the constants table by their
/// parenthesized 17-digit values; everything else passes through untouched.
std::string substitute_constants(const std::string& text,
                                 const std::map<std::string, double>& constants);

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

} // namespace scl
