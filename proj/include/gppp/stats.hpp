#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "gppp/error.hpp"

namespace gppp::stats {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw DomainError("mean of empty series");
    const double x0 = xs.front();
    double acc = 0.0;
    for (double x : xs) acc += x - x0;
    return x0 + acc / static_cast<double>(xs.size());
}

/// Sample variance with the N-1 divisor.
inline double variance(std::span<const double> xs) {
    if (xs.size() < 2) throw DomainError("variance needs at least two observations");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

inline double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

/// Quantile of already-sorted data by linear interpolation between order
/// statistics (position p*(n-1)).
inline double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DomainError("quantile of empty series");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::span<const double> xs, double p) {
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    return quantile_sorted(sorted, p);
}

inline double median(std::span<const double> xs) { return quantile(xs, 0.5); }

/// The five reporting levels used throughout: 2.5, 25, 50, 75, 97.5 percent.
inline constexpr double kReportLevels[5] = {0.025, 0.25, 0.5, 0.75, 0.975};

}  // namespace gppp::stats
