#include "superdiff/cstar.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "superdiff/fft.hpp"
#include "superdiff/parallel.hpp"

namespace sdiff {
namespace {

// Leaves the unnormalised DFT of the node values of (sample, band, component)
// in fft.spectral().
using BandSpectralFn = std::function<void(int, int, int, RealFFT&)>;

struct EvalNodes {
    std::vector<double> x;  // points, dim-strided
    std::size_t count = 0;
};

EvalNodes coarse_nodes(const BandGrid& g, std::size_t max_points) {
    const double per_axis = std::floor(std::pow(static_cast<double>(max_points), 1.0 / g.dim) + 1e-9);
    const std::size_t side = std::max<std::size_t>(1, std::min<std::size_t>(g.cells, static_cast<std::size_t>(per_axis)));
    const std::size_t stride = std::max<std::size_t>(1, g.cells / side);
    EvalNodes nodes;
    const std::size_t count = g.dim == 2 ? side * side : side * side * side;
    nodes.count = count;
    nodes.x.resize(count * static_cast<std::size_t>(g.dim));
    for (std::size_t p = 0; p < count; ++p) {
        std::size_t rem = p;
        for (int a = g.dim - 1; a >= 0; --a) {
            nodes.x[p * g.dim + a] = static_cast<double>((rem % side) * stride) * g.spacing;
            rem /= side;
        }
    }
    return nodes;
}

std::size_t node_index(const BandGrid& g, const double* x) {
    std::size_t idx = 0;
    for (int a = 0; a < g.dim; ++a) {
        const double s = x[a] / g.spacing;
        const double r = std::round(s);
        if (std::fabs(s - r) > 1e-6) throw std::invalid_argument("evaluation point is not a node of every band grid");
        auto i = static_cast<long long>(r) % static_cast<long long>(g.cells);
        if (i < 0) i += static_cast<long long>(g.cells);
        idx = idx * g.cells + static_cast<std::size_t>(i);
    }
    return idx;
}

CstarEstimate estimate_core(int dim, int samples, int l, int m, const std::vector<double>& e,
                            const std::function<BandGrid(int)>& grid, const BandSpectralFn& spectral,
                            const CstarOptions& opt) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("c* estimator supports d = 2 or 3");
    if (m <= l) throw std::invalid_argument("degenerate band range: need m > l");
    if (samples < 1) throw std::invalid_argument("c* estimator needs at least one sample");
    if (static_cast<int>(e.size()) != dim) throw std::invalid_argument("direction has wrong dimension");
    const double enorm = std::sqrt([&] { double s = 0; for (double v : e) s += v * v; return s; }());
    if (enorm == 0.0) throw std::invalid_argument("direction must be nonzero");
    std::vector<double> u(e);
    for (double& v : u) v /= enorm;

    const EvalNodes nodes = coarse_nodes(grid(m), opt.max_points);
    const int ncomp = component_count(dim);
    std::vector<double> per_sample(static_cast<std::size_t>(samples));

    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
        std::vector<double> acc(nodes.count * static_cast<std::size_t>(dim), 0.0);
        for (int n = l + 1; n <= m; ++n) {
            const BandGrid g = grid(n);
            RealFFT fft(dim, g.cells);
            const std::size_t nc = fft.complex_size(), N = g.cells, h = fft.half();
            std::vector<std::complex<double>> div(nc, 0.0);
            // div_hat = sum_c h_c * i (xi_a e_b - xi_b e_a); the factor i is folded
            // into the final multiplication.
            const double ks = 2.0 * std::numbers::pi / g.period();
            auto xi_of = [&](std::size_t flat, double* xi) {
                if (dim == 2) {
                    xi[0] = ks * static_cast<double>(fft.signed_index(flat / h));
                    xi[1] = ks * static_cast<double>(flat % h);
                } else {
                    xi[0] = ks * static_cast<double>(fft.signed_index(flat / (N * h)));
                    xi[1] = ks * static_cast<double>(fft.signed_index((flat / h) % N));
                    xi[2] = ks * static_cast<double>(flat % h);
                }
            };
            for (int c = 0; c < ncomp; ++c) {
                spectral(static_cast<int>(s), n, c, fft);
                const auto [a, b] = component_pair(dim, c);
                const auto* sp = fft.spectral();
                double xi[3];
                for (std::size_t k = 0; k < nc; ++k) {
                    xi_of(k, xi);
                    div[k] += sp[k] * (xi[a] * u[b] - xi[b] * u[a]);
                }
            }
            const double inv_total = 1.0 / static_cast<double>(g.size());
            for (int lcomp = 0; lcomp < dim; ++lcomp) {
                auto* sp = fft.spectral();
                double xi[3];
                for (std::size_t k = 0; k < nc; ++k) {
                    xi_of(k, xi);
                    const double k2 = xi[0] * xi[0] + xi[1] * xi[1] + (dim == 3 ? xi[2] * xi[2] : 0.0);
                    sp[k] = k2 == 0.0 ? std::complex<double>(0.0) : div[k] * (xi[lcomp] / k2 * inv_total);
                }
                fft.backward();
                const double* gv = fft.real();
                for (std::size_t p = 0; p < nodes.count; ++p)
                    acc[p * dim + lcomp] += gv[node_index(g, &nodes.x[p * dim])];
            }
        }
        double sum = 0.0;
        for (double v : acc) sum += v * v;
        per_sample[s] = sum / static_cast<double>(nodes.count) / (std::log(3.0) * (m - l));
    });

    CstarEstimate est;
    est.per_sample = per_sample;
    est.samples = samples;
    est.value = mean(per_sample);
    est.standard_error = standard_error(per_sample);
    est.meets_sample_minimum = samples >= 16;
    if (samples >= 2) est.ci = bootstrap_mean_ci(per_sample, opt.bootstrap_seed);
    return est;
}

}  // namespace

CstarEstimate estimate_cstar(int dim, int samples, int l, int m, const std::vector<double>& e,
                             const std::function<BandGrid(int)>& grid, const BandValueFn& values,
                             const CstarOptions& options) {
    auto spectral = [&](int s, int n, int c, RealFFT& fft) {
        const std::vector<double> v = values(s, n, c);
        if (v.size() != fft.real_size()) throw std::invalid_argument("band values do not match the band grid");
        std::copy(v.begin(), v.end(), fft.real());
        fft.forward();
    };
    return estimate_core(dim, samples, l, m, e, grid, spectral, options);
}

CstarEstimate estimate_cstar(const std::vector<const StreamField*>& fields, int l, int m,
                             const std::vector<double>& e, const CstarOptions& options) {
    if (fields.empty()) throw std::invalid_argument("c* estimator needs at least one field");
    const StreamField& f0 = *fields.front();
    if (l + 1 < f0.n_min() || m > f0.L()) throw std::invalid_argument("band range outside the fields' bands");
    auto grid = [&](int n) { return f0.level(n).grid; };
    auto values = [&](int s, int n, int c) {
        return fields[static_cast<std::size_t>(s)]->level(n).values[static_cast<std::size_t>(c)];
    };
    return estimate_cstar(f0.dim(), static_cast<int>(fields.size()), l, m, e, grid, values, options);
}

CstarEstimate estimate_cstar(const FieldParams& params, const RadialSpectrum& spec, int samples, int l, int m,
                             const std::vector<double>& e, const CstarOptions& options) {
    validate(params);
    if (l + 1 < params.n_min) throw std::invalid_argument("band range starts below n_min");
    auto grid = [&](int n) { return band_grid(params, n); };
    auto spectral = [&](int s, int n, int c, RealFFT& fft) {
        const BandGrid g = band_grid(params, n);
        synth_band_spectral(g, band_spectrum_fn(spec, params, n), band_key(params.seed, c, n, static_cast<std::uint64_t>(s)), fft);
        const double scale = static_cast<double>(g.size());
        auto* sp = fft.spectral();
        for (std::size_t k = 0; k < fft.complex_size(); ++k) sp[k] *= scale;
    };
    return estimate_core(params.dim, samples, l, m, e, grid, spectral, options);
}

std::vector<CovarianceRow> probe_covariance(const std::vector<const StreamField*>& fields,
                                            const std::vector<double>& lags, const CovarianceOptions& options) {
    if (fields.empty()) throw std::invalid_argument("covariance probe needs at least one field");
    const int d = fields.front()->dim();
    const int L = fields.front()->L();
    const int ncomp = component_count(d);
    const double box = fields.front()->levels().back().grid.period();
    const std::size_t nf = fields.size(), np = options.base_points;
    // per[lag][field]
    std::vector<std::vector<double>> per(lags.size(), std::vector<double>(nf, 0.0));
    parallel_for(nf, [&](std::size_t f) {
        const FieldView view(*fields[f]);
        const PhiloxKey key = derive_key({options.seed, 0xC0FFull, f});
        for (std::size_t p = 0; p < np; ++p) {
            double x0[3];
            for (int a = 0; a < d; a += 2) {
                const PhiloxCounter blk = philox4x32_10({static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(a), 0u, 0u}, key);
                x0[a] = box * uniform_open(blk[0], blk[1]);
                if (a + 1 < d) x0[a + 1] = box * uniform_open(blk[2], blk[3]);
            }
            StreamSample s0;
            view.sample(x0, 0, s0);
            for (std::size_t li = 0; li < lags.size(); ++li) {
                double acc = 0.0;
                for (int axis = 0; axis < d; ++axis) {
                    double x1[3] = {x0[0], x0[1], d == 3 ? x0[2] : 0.0};
                    x1[axis] += lags[li];
                    StreamSample s1;
                    view.sample(x1, 0, s1);
                    for (int c = 0; c < ncomp; ++c) acc += s0.comp[c].value * s1.comp[c].value;
                }
                per[li][f] += acc / static_cast<double>(d * ncomp);
            }
        }
        for (auto& row : per) row[f] /= static_cast<double>(np);
    });
    std::vector<CovarianceRow> out;
    for (std::size_t li = 0; li < lags.size(); ++li) {
        CovarianceRow r;
        r.lag = lags[li];
        r.covariance = mean(per[li]);
        r.standard_error = standard_error(per[li]);
        const double al = std::fabs(lags[li]);
        r.in_window = al >= 3.0 && al <= std::pow(3.0, L - 2) * (1.0 + 1e-12);
        r.log_prediction = al > 0.0 ? options.band_variance * (L - std::log(al) / std::log(3.0)) : 0.0;
        out.push_back(r);
    }
    return out;
}

double exact_cumulative_covariance(const RadialSpectrum& spec, int L, double lag) {
    const int d = spec.dim();
    const double x = std::fabs(lag);
    const double top = std::pow(3.0, L);
    const double sphere = d * unit_ball_volume(d);
    const double pref = sphere * spec.prefactor() / std::pow(2.0 * std::numbers::pi, d);
    auto kernel = [&](double z) {
        if (d == 2) return ::j0(z);
        return z < 1e-8 ? 1.0 : std::sin(z) / z;
    };
    // integrand in d(rho)/rho
    auto f = [&](double rho) { return spec.cumulative(top * rho) * spec.mollifier(rho) * kernel(rho * x); };
    // Cut where the mollifier is negligible.
    double rho_hi = 1.0;
    while (rho_hi < 399.0 && spec.cumulative_limit() * spec.mollifier(rho_hi) > 1e-14 * spec.cumulative_limit()) rho_hi *= 1.25;
    rho_hi = std::min(rho_hi, 399.0);
    const double rho_a = 0.1 / std::max(x, 1.0) / std::max(1.0, top / 1e6);
    const double rho_lo = 1e-6 / top;
    std::vector<double> gx, gw;
    double total = 0.0;
    // Log-spaced part.
    gauss_legendre(4000, std::log(rho_lo), std::log(std::min(rho_a, rho_hi)), gx, gw);
    for (std::size_t i = 0; i < gx.size(); ++i) total += gw[i] * f(std::exp(gx[i]));
    // Geometric blocks with oscillation-aware order.
    for (double b = std::min(rho_a, rho_hi); b < rho_hi; b *= 2.0) {
        const double e = std::min(2.0 * b, rho_hi);
        const int order = 32 + static_cast<int>(std::ceil(8.0 * (e - b) * x / (2.0 * std::numbers::pi)));
        gauss_legendre(order, b, e, gx, gw);
        for (std::size_t i = 0; i < gx.size(); ++i) total += gw[i] * f(gx[i]) / gx[i];
    }
    return pref * total;
}

}  // namespace sdiff
