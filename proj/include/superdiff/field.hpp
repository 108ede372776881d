/// Scale-decomposed log-correlated stream-matrix fields: per-band
/// Gaussian synthesis, assembly into k_L, and interpolated evaluation.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "superdiff/fft.hpp"
#include "superdiff/philox.hpp"
#include "superdiff/profile.hpp"
#include "superdiff/spectrum.hpp"
#include "superdiff/spline.hpp"
#include "superdiff/stream.hpp"

namespace sdiff {

/// Geometry and randomness parameters of a synthesized field.
struct FieldParams {
    int dim = 2;
    double nu = 1.0;
    int n_min = 0;
    int L = 3;
    /// Torus exponent; band periods are derived from 3^(K-L) (see band_period).
    int K = 5;
    /// Grid cells per unit length for the lowest band; every band gets
    /// cells_per_unit * 3^n_min cells per 3^n.
    double cells_per_unit = 8.0;
    /// Period of band n in units of 3^n. 0 selects the smallest power of
    /// two >= 4 * 3^(K-L).
    std::size_t band_period = 0;
    bool mollify = true;
    std::uint64_t seed = 1;
    RadialProfile profile = make_bump_profile(ProfileKind::SmoothstepExp, 1.0);
};

/// Checks FieldParams invariants; throws std::invalid_argument naming the
/// violated inequality.
void validate(const FieldParams& p);

/// Effective period factor (see FieldParams::band_period).
std::size_t effective_band_period(const FieldParams& p);

/// Cells per 3^n used for every band.
std::size_t cells_per_band_scale(const FieldParams& p);

/// Grid on which band n is synthesized.
BandGrid band_grid(const FieldParams& p, int n);

/// RNG key of the white noise behind (component, band, replica).
PhiloxKey band_key(std::uint64_t seed, int component, int band, std::uint64_t replica);

/// One scalar Gaussian band H_n on its periodic grid.
struct ScaleBand {
    int n = 0;
    BandGrid grid;
    PhiloxKey key{};
    std::vector<double> values;
};

/// Spectrum as a function of |xi|, in the convention
/// Cov(x) = T^-d sum_k S(|xi_k|) e^{i xi_k x}.
using SpectrumFn = std::function<double(double)>;

/// Fourier-space white noise of `grid` keyed by `key`, multiplied by the
/// amplitude sqrt(S / (T^d N)); leaves the result in `fft.spectral()`.
void synth_band_spectral(const BandGrid& grid, const SpectrumFn& spectrum, PhiloxKey key, RealFFT& fft);

/// Synthesizes H_n. Rejects grids with fewer than 8 cells per 3^n or a
/// period shorter than 4 * 3^n (the band would overlap its own image).
ScaleBand synth_band(int n, const BandGrid& grid, const SpectrumFn& spectrum, PhiloxKey key);

/// Spectrum used for band n under `p`. When enabled, the mollifier acts at
/// the finest synthesized scale 3^n_min.
SpectrumFn band_spectrum_fn(const RadialSpectrum& spec, const FieldParams& p, int n);

/// Multi-scale antisymmetric field k_L = sum_{n_min <= n <= L} j_n.
class StreamField {
public:
    struct Level {
        int n = 0;
        BandGrid grid;
        std::vector<std::vector<double>> values;  // per component, node values
        std::vector<std::vector<double>> coef;    // per component, spline coefficients
    };

    StreamField(int dim, double nu, std::uint64_t seed, std::vector<Level> levels);

    /// Synthesizes every band and component of replica `replica`.
    static StreamField synthesize(const FieldParams& p, const RadialSpectrum& spec, std::uint64_t replica = 0);

    int dim() const { return dim_; }
    int components() const { return component_count(dim_); }
    double nu() const { return nu_; }
    int n_min() const { return levels_.front().n; }
    int L() const { return levels_.back().n; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<Level>& levels() const { return levels_; }
    const Level& level(int n) const;

    /// Accumulates bands n in [lo, hi] at x.
    void sample(const double* x, int lo, int hi, int order, StreamSample& out) const;

private:
    int dim_;
    double nu_;
    std::uint64_t seed_;
    std::vector<Level> levels_;
};

/// Builds a StreamField from explicitly synthesized bands.
/// bands[c] lists the bands of component c; every component must cover the
/// same contiguous index range ending at L and share grids band by band.
StreamField assemble_stream(int dim, double nu, std::uint64_t seed, std::vector<std::vector<ScaleBand>> bands, int L);

/// A StreamSource restricted to bands n in [lo, hi] of a field (the
/// infrared cutoff k_m when lo = n_min, hi = m).
class FieldView final : public StreamSource {
public:
    explicit FieldView(const StreamField& f) : f_(f), lo_(f.n_min()), hi_(f.L()) {}
    FieldView(const StreamField& f, int lo, int hi) : f_(f), lo_(lo), hi_(hi) {}
    int dim() const override { return f_.dim(); }
    void sample(const double* x, int order, StreamSample& out) const override {
        out = StreamSample{};
        f_.sample(x, lo_, hi_, order, out);
    }
    const StreamField& field() const { return f_; }

private:
    const StreamField& f_;
    int lo_, hi_;
};

}  // namespace sdiff
