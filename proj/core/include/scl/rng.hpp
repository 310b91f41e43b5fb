#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace scl {

// Counter-based random source: every normal increment is a pure function of
// (seed, path index, step index), so results are independent of evaluation
// order and identical across any partitioning of the path work. The stream
// is the splitmix64 sequence keyed per path.

namespace rng_detail {

inline uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

} // namespace rng_detail

/// Inverse of the standard normal CDF (Acklam's rational approximation,
/// relative error below 1.2e-9). Deterministic and branch-stable.
inline double normal_quantile(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;

    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

/// Per-path view of the counter-based source.
class PathRng {
public:
    PathRng(uint64_t seed, uint64_t path_index)
        : base_(rng_detail::mix64(rng_detail::mix64(seed + rng_detail::kGolden) ^
                                  rng_detail::mix64(path_index + 0x5851f42d4c957f2dULL))) {}

    /// Uniform draw in the open interval (0,1) for the given step counter.
    double uniform(uint64_t step) const {
        const uint64_t bits = rng_detail::mix64(base_ + step * rng_detail::kGolden);
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal draw for the given step counter (inverse CDF).
    double gaussian(uint64_t step) const { return normal_quantile(uniform(step)); }

private:
    uint64_t base_;
};

/// Pairwise (tree) summation over path results in index order: the reduction
/// is deterministic regardless of how the path work was distributed, and more
/// accurate than serial accumulation.
double pairwise_sum(const double* data, size_t count);
inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v.data(), v.size());
}

struct MCEstimate {
    double mean = 0.0;
    double se = 0.0;
    size_t n = 0;
};

/// Mean and standard error with deterministic pairwise reductions.
MCEstimate summarize(const std::vector<double>& samples);

} // namespace scl
