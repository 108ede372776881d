/// Small statistics toolkit: moments, bootstrap intervals, binomial
/// intervals and least-squares lines.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sdiff {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

double mean(std::span<const double> x);
/// Unbiased sample variance (0 for fewer than two entries).
double sample_variance(std::span<const double> x);
/// Standard error of the mean.
double standard_error(std::span<const double> x);

/// Percentile bootstrap interval for the mean of `x`, reproducible via `seed`.
Interval bootstrap_mean_ci(std::span<const double> x, std::uint64_t seed, int resamples = 2000,
                           double level = 0.95);

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_se = 0.0;
};

/// Ordinary least squares y ~ a + b x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace sdiff
