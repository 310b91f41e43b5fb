#pragma once

#include <cmath>
#include <cstddef>

#include "scl/common.hpp"

namespace scl {

/// Uniform tensor grid on [0,T] x [band_lo, band_hi]. The state origin y = 0
/// must land on a node; the singular-control integration is anchored there.
/// Node coordinates use the symmetric linspace formula so that a band that is
/// symmetric about zero yields bitwise mirror-symmetric nodes.
class Grid {
public:
    Grid(double horizon, double band_lo, double band_hi, int nt, int ny)
        : T_(horizon), lo_(band_lo), hi_(band_hi), nt_(nt), ny_(ny) {
        if (!(horizon > 0.0)) throw Error("grid: horizon must be positive");
        if (!(band_hi > band_lo)) throw Error("grid: empty band");
        if (nt < 2) throw Error("grid: need at least two time levels");
        if (ny < 3) throw Error("grid: need at least three space nodes");
        dt_ = T_ / (nt_ - 1);
        dy_ = (hi_ - lo_) / (ny_ - 1);
        const double j0 = -lo_ / dy_;
        j0_ = static_cast<int>(std::lround(j0));
        if (j0_ < 0 || j0_ >= ny_ || std::fabs(y(j0_)) > 1e-9 * (hi_ - lo_))
            throw Error("grid: y = 0 must be a grid node");
    }

    int nt() const { return nt_; }
    int ny() const { return ny_; }
    double dt() const { return dt_; }
    double dy() const { return dy_; }
    double horizon() const { return T_; }
    double band_lo() const { return lo_; }
    double band_hi() const { return hi_; }
    int zero_index() const { return j0_; }

    double t(int n) const { return T_ * n / (nt_ - 1); }
    double y(int j) const {
        return (lo_ * (ny_ - 1 - j) + hi_ * j) / (ny_ - 1);
    }

    size_t index(int n, int j) const {
        return static_cast<size_t>(n) * static_cast<size_t>(ny_) + static_cast<size_t>(j);
    }
    size_t size() const { return static_cast<size_t>(nt_) * static_cast<size_t>(ny_); }

private:
    double T_, lo_, hi_;
    int nt_, ny_;
    double dt_, dy_;
    int j0_;
};

} // namespace scl
