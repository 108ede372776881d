#include "superdiff/field.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "superdiff/parallel.hpp"

namespace sdiff {
namespace {

double pow3(int n) { return std::pow(3.0, n); }

bool is_near_integer(double x) { return std::fabs(x - std::round(x)) < 1e-9 * std::max(1.0, std::fabs(x)); }

// Divides the spectral array by the cubic B-spline symbol so a backward
// transform yields interpolation coefficients instead of node values.
void apply_bspline_symbol(const BandGrid& grid, RealFFT& fft) {
    const std::size_t n = grid.cells, h = fft.half();
    std::vector<double> inv(n);
    for (std::size_t i = 0; i < n; ++i)
        inv[i] = 6.0 / (4.0 + 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n));
    auto* c = fft.spectral();
    if (grid.dim == 2) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < h; ++j) c[i * h + j] *= inv[i] * inv[j];
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < h; ++k) c[(i * n + j) * h + k] *= inv[i] * inv[j] * inv[k];
    }
}

void check_band_resolution(int n, const BandGrid& grid) {
    const double wavelength = pow3(n);
    if (grid.spacing > wavelength / 8.0 * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "band " << n << " under-resolved: spacing " << grid.spacing << " exceeds 3^n/8 = " << wavelength / 8.0;
        throw std::invalid_argument(msg.str());
    }
    if (grid.period() < 4.0 * wavelength * (1.0 - 1e-12)) {
        std::ostringstream msg;
        msg << "band " << n << " torus too small: period " << grid.period() << " < 4*3^n = " << 4.0 * wavelength;
        throw std::invalid_argument(msg.str());
    }
    if (grid.cells % 2 != 0) throw std::invalid_argument("band grids need an even number of cells per axis");
}

}  // namespace

std::size_t effective_band_period(const FieldParams& p) {
    if (p.band_period != 0) return p.band_period;
    const double target = 4.0 * pow3(p.K - p.L);
    std::size_t t = 4;
    while (static_cast<double>(t) < target) t *= 2;
    return t;
}

std::size_t cells_per_band_scale(const FieldParams& p) {
    return static_cast<std::size_t>(std::llround(p.cells_per_unit * pow3(p.n_min)));
}

void validate(const FieldParams& p) {
    auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
    if (p.dim != 2 && p.dim != 3) fail("dimension must be 2 or 3");
    if (!(p.nu > 0.0 && p.nu <= 1.0)) fail("nu must satisfy 0 < nu <= 1");
    if (p.L < p.n_min) fail("cutoff must satisfy L >= n_min");
    if (p.K < p.L + 2) fail("torus exponent must satisfy K >= L+2");
    if (p.cells_per_unit < 8.0 * pow3(-p.n_min) * (1.0 - 1e-12)) fail("cells per unit must satisfy cells_per_unit >= 8*3^(-n_min)");
    const double c = p.cells_per_unit * pow3(p.n_min);
    if (!is_near_integer(c)) fail("cells_per_unit * 3^n_min must be an integer");
    const std::size_t period = effective_band_period(p);
    if (period < 4) fail("band period must satisfy band_period >= 4");
    if ((period * cells_per_band_scale(p)) % 2 != 0) fail("band grids need an even number of cells per axis");
}

BandGrid band_grid(const FieldParams& p, int n) {
    const std::size_t c = cells_per_band_scale(p);
    BandGrid g;
    g.dim = p.dim;
    g.cells = effective_band_period(p) * c;
    g.spacing = pow3(n) / static_cast<double>(c);
    return g;
}

PhiloxKey band_key(std::uint64_t seed, int component, int band, std::uint64_t replica) {
    return derive_key({seed, 0x5EEDu, static_cast<std::uint64_t>(component),
                       static_cast<std::uint64_t>(static_cast<std::int64_t>(band)), replica});
}

void synth_band_spectral(const BandGrid& grid, const SpectrumFn& spectrum, PhiloxKey key, RealFFT& fft) {
    if (fft.dim() != grid.dim || fft.n() != grid.cells) throw std::invalid_argument("FFT does not match band grid");
    const std::size_t total = grid.size();
    double* r = fft.real();
    for (std::size_t j = 0; j < total; j += 2) {
        const auto z = normal_pair_at(key, j / 2, 0);
        r[j] = z[0];
        if (j + 1 < total) r[j + 1] = z[1];
    }
    fft.forward();
    const std::size_t n = grid.cells, h = fft.half();
    const double T = grid.period();
    const double kscale = 2.0 * std::numbers::pi / T;
    const double norm = 1.0 / (std::pow(T, grid.dim) * static_cast<double>(total));
    // Amplitudes depend only on |xi|; cache per squared integer radius.
    std::vector<double> k2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double k = static_cast<double>(fft.signed_index(i));
        k2[i] = k * k;
    }
    auto amplitude = [&](double kk) {
        const double s = spectrum(kscale * std::sqrt(kk));
        return std::sqrt(std::max(0.0, s) * norm);
    };
    auto* c = fft.spectral();
    if (grid.dim == 2) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < h; ++j) c[i * h + j] *= amplitude(k2[i] + k2[j]);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < h; ++k) c[(i * n + j) * h + k] *= amplitude(k2[i] + k2[j] + k2[k]);
    }
}

ScaleBand synth_band(int n, const BandGrid& grid, const SpectrumFn& spectrum, PhiloxKey key) {
    check_band_resolution(n, grid);
    RealFFT fft(grid.dim, grid.cells);
    synth_band_spectral(grid, spectrum, key, fft);
    fft.backward();
    ScaleBand b;
    b.n = n;
    b.grid = grid;
    b.key = key;
    b.values.assign(fft.real(), fft.real() + grid.size());
    return b;
}

SpectrumFn band_spectrum_fn(const RadialSpectrum& spec, const FieldParams& p, int n) {
    const int n_min = p.n_min;
    const double width = pow3(n_min);
    if (p.mollify)
        return [&spec, n, n_min, width](double xi) { return spec.band(n, n_min, xi) * spec.mollifier(width * xi); };
    return [&spec, n, n_min](double xi) { return spec.band(n, n_min, xi); };
}

StreamField::StreamField(int dim, double nu, std::uint64_t seed, std::vector<Level> levels)
    : dim_(dim), nu_(nu), seed_(seed), levels_(std::move(levels)) {
    if (levels_.empty()) throw std::invalid_argument("a stream field needs at least one band");
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        auto& lv = levels_[i];
        if (i > 0 && lv.n != levels_[i - 1].n + 1) throw std::invalid_argument("band indices must be contiguous");
        if (lv.grid.dim != dim) throw std::invalid_argument("band grid dimension mismatch");
        if (static_cast<int>(lv.values.size()) != component_count(dim))
            throw std::invalid_argument("component count must be d(d-1)/2");
        if (lv.coef.empty()) {
            for (const auto& v : lv.values) lv.coef.push_back(bspline_coefficients(lv.grid, v));
        }
        for (std::size_t c = 0; c < lv.values.size(); ++c) {
            if (lv.values[c].size() != lv.grid.size() || lv.coef[c].size() != lv.grid.size())
                throw std::invalid_argument("band array size does not match its grid");
        }
    }
}

StreamField StreamField::synthesize(const FieldParams& p, const RadialSpectrum& spec, std::uint64_t replica) {
    validate(p);
    if (spec.dim() != p.dim) throw std::invalid_argument("spectrum dimension does not match field");
    const int ncomp = component_count(p.dim);
    const int nbands = p.L - p.n_min + 1;
    std::vector<Level> levels(static_cast<std::size_t>(nbands));
    for (int b = 0; b < nbands; ++b) {
        auto& lv = levels[static_cast<std::size_t>(b)];
        lv.n = p.n_min + b;
        lv.grid = band_grid(p, lv.n);
        check_band_resolution(lv.n, lv.grid);
        lv.values.resize(static_cast<std::size_t>(ncomp));
        lv.coef.resize(static_cast<std::size_t>(ncomp));
    }
    parallel_for(static_cast<std::size_t>(nbands * ncomp), [&](std::size_t task) {
        const int b = static_cast<int>(task) / ncomp, c = static_cast<int>(task) % ncomp;
        auto& lv = levels[static_cast<std::size_t>(b)];
        RealFFT fft(p.dim, lv.grid.cells);
        synth_band_spectral(lv.grid, band_spectrum_fn(spec, p, lv.n), band_key(p.seed, c, lv.n, replica), fft);
        const std::size_t nc = fft.complex_size();
        std::vector<std::complex<double>> keep(fft.spectral(), fft.spectral() + nc);
        fft.backward();
        lv.values[static_cast<std::size_t>(c)].assign(fft.real(), fft.real() + lv.grid.size());
        std::copy(keep.begin(), keep.end(), fft.spectral());
        apply_bspline_symbol(lv.grid, fft);
        fft.backward();
        lv.coef[static_cast<std::size_t>(c)].assign(fft.real(), fft.real() + lv.grid.size());
    });
    return StreamField(p.dim, p.nu, p.seed, std::move(levels));
}

const StreamField::Level& StreamField::level(int n) const {
    if (n < n_min() || n > L()) throw std::out_of_range("band index outside the field's range");
    return levels_[static_cast<std::size_t>(n - n_min())];
}

void StreamField::sample(const double* x, int lo, int hi, int order, StreamSample& out) const {
    const int ncomp = components();
    for (const auto& lv : levels_) {
        if (lv.n < lo || lv.n > hi) continue;
        for (int c = 0; c < ncomp; ++c)
            bspline_accumulate(lv.grid, lv.coef[static_cast<std::size_t>(c)].data(), x, order, 1.0, out.comp[c]);
    }
}

StreamField assemble_stream(int dim, double nu, std::uint64_t seed, std::vector<std::vector<ScaleBand>> bands, int L) {
    const int ncomp = component_count(dim);
    if (static_cast<int>(bands.size()) != ncomp) throw std::invalid_argument("component count must be d(d-1)/2");
    const std::size_t nb = bands.front().size();
    if (nb == 0) throw std::invalid_argument("no bands supplied");
    for (const auto& comp : bands) {
        if (comp.size() != nb) throw std::invalid_argument("mismatched grids: components carry different band counts");
    }
    std::vector<StreamField::Level> levels(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        auto& lv = levels[b];
        lv.n = bands[0][b].n;
        lv.grid = bands[0][b].grid;
        for (int c = 0; c < ncomp; ++c) {
            auto& band = bands[static_cast<std::size_t>(c)][b];
            if (band.n != lv.n || !(band.grid == lv.grid))
                throw std::invalid_argument("mismatched grids between components of band " + std::to_string(lv.n));
            lv.values.push_back(std::move(band.values));
        }
    }
    if (levels.back().n != L) throw std::invalid_argument("top band index does not equal the cutoff L");
    return StreamField(dim, nu, seed, std::move(levels));
}

}  // namespace sdiff
