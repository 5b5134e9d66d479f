#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rankfuse/error.hpp"

namespace rankfuse {

// ---------------------------------------------------------------------------
// Normal tail probabilities
// ---------------------------------------------------------------------------

// Phi(x), via erfc. glibc's erfc is sub-ulp accurate, well inside the
// 1e-15 absolute budget on [-8, 8].
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440084436210485);
}

// P(Z > x) = 1 - Phi(x), computed without cancellation. Beyond |x| = 38
// the value is pinned to exactly 0/1.
inline double normal_sf(double x) {
    if (x > 38.0) return 0.0;
    if (x < -38.0) return 1.0;
    return 0.5 * std::erfc(x * 0.70710678118654752440084436210485);
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

inline double mean(std::span<const double> xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

// Unbiased sample variance (two-pass). Requires n >= 2.
inline double sample_variance(std::span<const double> xs) {
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - m;
        ss += d * d;
    }
    return ss / static_cast<double>(xs.size() - 1);
}

inline double sample_sd(std::span<const double> xs) {
    return std::sqrt(sample_variance(xs));
}

// ---------------------------------------------------------------------------
// Order statistics
// ---------------------------------------------------------------------------

// Type-2 median: midpoint of the two central order statistics on even n.
inline double median(std::vector<double> xs) {
    if (xs.empty()) {
        throw Error(ErrorCode::DomainError, "median of empty set is undefined");
    }
    const std::size_t n = xs.size();
    const std::size_t hi = n / 2;
    std::nth_element(xs.begin(), xs.begin() + hi, xs.end());
    if (n % 2 == 1) return xs[hi];
    const double upper = xs[hi];
    const double lower = *std::max_element(xs.begin(), xs.begin() + hi);
    return lower + (upper - lower) / 2.0;
}

// Median absolute deviation about `center`, scaled by the 1.4826
// normal-consistency factor.
inline double scaled_mad(std::span<const double> xs, double center) {
    std::vector<double> dev(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = std::fabs(xs[i] - center);
    return 1.4826 * median(std::move(dev));
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

// Pearson coefficient; nullopt when either column is constant (zero sum of
// squared deviations), which has no defined correlation.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

}  // namespace rankfuse
