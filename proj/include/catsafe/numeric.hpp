#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace catsafe {

// Resampled statistics that agree with the observed one up to summation-order
// noise count as ties.
inline bool at_least(double value, double reference) noexcept {
    return value >= reference - 1e-12 * std::max(1.0, std::abs(reference));
}

inline bool at_most(double value, double reference) noexcept {
    return value <= reference + 1e-12 * std::max(1.0, std::abs(reference));
}

/// Pairwise (cascade) summation; reduction order depends only on the length.
inline double pairwise_sum(std::span<const double> v) noexcept {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

} // namespace catsafe
