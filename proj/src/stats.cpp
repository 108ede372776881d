#include "superdiff/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "superdiff/philox.hpp"

namespace sdiff {

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double standard_error(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    return std::sqrt(sample_variance(x) / static_cast<double>(x.size()));
}

Interval bootstrap_mean_ci(std::span<const double> x, std::uint64_t seed, int resamples, double level) {
    if (x.size() < 2) throw std::invalid_argument("bootstrap needs at least two samples");
    const PhiloxKey key = derive_key({seed, 0xB00757ull});
    const std::size_t n = x.size();
    std::vector<double> means(static_cast<std::size_t>(resamples));
    for (int b = 0; b < resamples; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const PhiloxCounter c = philox4x32_10(
                {static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(i), 0u, 0u}, key);
            s += x[static_cast<std::size_t>(uniform_open(c[0], c[1]) * static_cast<double>(n)) % n];
        }
        means[static_cast<std::size_t>(b)] = s / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    const double alpha = 0.5 * (1.0 - level);
    auto pick = [&](double q) {
        const double pos = q * static_cast<double>(resamples - 1);
        const auto i = static_cast<std::size_t>(pos);
        const std::size_t j = std::min(i + 1, means.size() - 1);
        const double w = pos - static_cast<double>(i);
        return means[i] * (1.0 - w) + means[j] * w;
    };
    return {pick(alpha), pick(1.0 - alpha)};
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {successes == 0 ? 0.0 : std::max(0.0, centre - half), successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs matching series of length >= 2");
    const double n = static_cast<double>(x.size());
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: abscissae are all equal");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    if (x.size() > 2) {
        const double rss = std::max(0.0, syy - fit.slope * sxy);
        fit.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return fit;
}

}  // namespace sdiff
