/// Estimator of the per-scale energy injection constant c* from band
/// fields, plus the log-covariance probe of k.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "superdiff/field.hpp"
#include "superdiff/stats.hpp"

namespace sdiff {

/// Supplies node values of band n, component c, for ensemble member s.
using BandValueFn = std::function<std::vector<double>(int sample, int n, int component)>;

struct CstarOptions {
    /// Upper bound on evaluation points per sample (nodes of the coarsest
    /// band grid, sub-sampled with a uniform stride).
    std::size_t max_points = 4096;
    std::uint64_t bootstrap_seed = 7;
};

struct CstarEstimate {
    double value = 0.0;
    /// Per-sample spatial means of |grad chi|^2 / ((log 3)(m - l)).
    std::vector<double> per_sample;
    double standard_error = 0.0;
    std::optional<Interval> ci;
    int samples = 0;
    bool meets_sample_minimum = false;  // at least 16 samples
};

/// chi = Delta^{-1} div(sum_{n=l+1}^{m} j_n e) by Fourier division (zero
/// mode removed), then E|grad chi|^2 / ((log 3)(m - l)).
/// `grid(n)` gives the grid of band n; every band's grid must contain the
/// evaluation nodes of band m.
CstarEstimate estimate_cstar(int dim, int samples, int l, int m, const std::vector<double>& e,
                             const std::function<BandGrid(int)>& grid, const BandValueFn& values,
                             const CstarOptions& options = {});

/// Convenience: estimator over an ensemble of already synthesized fields.
CstarEstimate estimate_cstar(const std::vector<const StreamField*>& fields, int l, int m,
                             const std::vector<double>& e, const CstarOptions& options = {});

/// Convenience: synthesizes replicas 0..samples-1 band by band under
/// `params` (memory stays at one band at a time).
CstarEstimate estimate_cstar(const FieldParams& params, const RadialSpectrum& spec, int samples, int l, int m,
                             const std::vector<double>& e, const CstarOptions& options = {});

struct CovarianceRow {
    double lag = 0.0;
    double covariance = 0.0;
    double standard_error = 0.0;
    /// (per-band variance) * (L - log3 |lag|).
    double log_prediction = 0.0;
    bool in_window = false;  // 3 <= |lag| <= 3^(L-2)
};

struct CovarianceOptions {
    std::size_t base_points = 256;
    std::uint64_t seed = 11;
    /// Per-band variance used in the logarithmic prediction.
    double band_variance = 0.0;
};

/// Empirical per-component covariance of k at each lag along the
/// coordinate axes, pooled over fields, components and base points.
/// k has mean zero by construction, so products are not centred.
std::vector<CovarianceRow> probe_covariance(const std::vector<const StreamField*>& fields,
                                            const std::vector<double>& lags, const CovarianceOptions& options);

/// Exact per-component covariance of the mollified cumulative field k_L at
/// separation |lag|, by radial quadrature of its total spectrum
/// C |xi|^-d F(3^L |xi|) eta_hat^2 (the bands telescope).
double exact_cumulative_covariance(const RadialSpectrum& spec, int L, double lag);

}  // namespace sdiff
