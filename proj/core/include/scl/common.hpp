#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace scl {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Format a double with 17 significant digits (round-trips bit-exactly).
inline std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Linear interpolation on a uniformly spaced abscissa series; clamps to the
/// end values outside the range.
inline double lerp_series(const std::vector<double>& xs, const std::vector<double>& vals,
                          double x) {
    if (xs.size() < 2 || x <= xs.front()) return vals.front();
    if (x >= xs.back()) return vals.back();
    const double dx = xs[1] - xs[0];
    const size_t i = std::min(vals.size() - 2, static_cast<size_t>((x - xs.front()) / dx));
    const double w = (x - xs[i]) / dx;
    return vals[i] * (1.0 - w) + vals[i + 1] * w;
}

} // namespace scl
