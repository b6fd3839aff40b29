#pragma once

#include <cstdint>
#include <span>

namespace q4s {

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    /// Sum of the h smallest squared residuals.
    double objective = 0.0;
    std::size_t coverage = 0;  // h
};

/// Ordinary least squares for y = a + b x. Needs two distinct x values.
LineFit ols_fit(std::span<const double> x, std::span<const double> y);

/// Least trimmed squares fit of y = a + b x keeping the h smallest squared
/// residuals. Concentration steps from elemental (two-point) starts; every
/// pair is tried when n is small, a seeded sample of pairs otherwise, and
/// large inputs select starts on a subsample before refining on all points.
/// Deterministic for a given input.
LineFit lts_fit(std::span<const double> x, std::span<const double> y, std::size_t h);

/// h = ceil((1 - trim_fraction) * n), clamped to [2, n].
std::size_t lts_coverage(std::size_t n, double trim_fraction);

} // namespace q4s
