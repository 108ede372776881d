#include "superdiff/spline.hpp"

#include <numbers>
#include <stdexcept>

#include "superdiff/fft.hpp"

namespace sdiff {

std::vector<double> bspline_coefficients(const BandGrid& grid, std::span<const double> values) {
    if (values.size() != grid.size()) throw std::invalid_argument("spline prefilter: size mismatch");
    RealFFT fft(grid.dim, grid.cells);
    std::copy(values.begin(), values.end(), fft.real());
    fft.forward();
    const std::size_t n = grid.cells, h = fft.half();
    std::vector<double> factor(n);
    for (std::size_t i = 0; i < n; ++i)
        factor[i] = (4.0 + 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n)) / 6.0;
    auto* c = fft.spectral();
    const double norm = 1.0 / static_cast<double>(grid.size());
    if (grid.dim == 2) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < h; ++j) c[i * h + j] *= norm / (factor[i] * factor[j]);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < h; ++k) c[(i * n + j) * h + k] *= norm / (factor[i] * factor[j] * factor[k]);
    }
    fft.backward();
    return std::vector<double>(fft.real(), fft.real() + grid.size());
}

std::vector<double> bspline_node_values(const BandGrid& grid, std::span<const double> coef) {
    if (coef.size() != grid.size()) throw std::invalid_argument("spline node values: size mismatch");
    const std::size_t n = grid.cells;
    std::vector<double> a(coef.begin(), coef.end()), b(coef.size());
    // Separable (1, 4, 1) / 6 filter along each axis.
    std::size_t stride = 1;
    for (int axis = grid.dim - 1; axis >= 0; --axis) {
        for (std::size_t idx = 0; idx < a.size(); ++idx) {
            const std::size_t pos = (idx / stride) % n;
            const std::size_t base = idx - pos * stride;
            const std::size_t prev = base + ((pos + n - 1) % n) * stride;
            const std::size_t next = base + ((pos + 1) % n) * stride;
            b[idx] = (a[prev] + 4.0 * a[idx] + a[next]) / 6.0;
        }
        std::swap(a, b);
        stride *= n;
    }
    return a;
}

namespace {

struct AxisStencil {
    std::size_t idx[4];
    double w[4], dw[4], ddw[4];
};

inline void axis_stencil(double x, const BandGrid& g, AxisStencil& s) {
    const double n = static_cast<double>(g.cells);
    double p = x / g.spacing;
    p -= n * std::floor(p / n);
    double fi = std::floor(p);
    double t = p - fi;
    auto i = static_cast<long>(fi);
    const auto cells = static_cast<long>(g.cells);
    if (i >= cells) i -= cells;
    bspline_basis(t, s.w, s.dw, s.ddw);
    const double inv = 1.0 / g.spacing;
    for (int q = 0; q < 4; ++q) {
        long j = i - 1 + q;
        if (j < 0) j += cells;
        if (j >= cells) j -= cells;
        s.idx[q] = static_cast<std::size_t>(j);
        s.dw[q] *= inv;
        s.ddw[q] *= inv * inv;
    }
}

}  // namespace

void bspline_accumulate(const BandGrid& grid, const double* coef, const double* x, int order, double scale,
                        SplineSample& out) {
    const std::size_t n = grid.cells;
    if (grid.dim == 2) {
        AxisStencil sx, sy;
        axis_stencil(x[0], grid, sx);
        axis_stencil(x[1], grid, sy);
        double v = 0, gx = 0, gy = 0, hxx = 0, hxy = 0, hyy = 0;
        for (int p = 0; p < 4; ++p) {
            const double* row = coef + sx.idx[p] * n;
            double r0 = 0, r1 = 0, r2 = 0;
            for (int q = 0; q < 4; ++q) {
                const double c = row[sy.idx[q]];
                r0 += c * sy.w[q];
                if (order >= 1) r1 += c * sy.dw[q];
                if (order >= 2) r2 += c * sy.ddw[q];
            }
            v += sx.w[p] * r0;
            if (order >= 1) {
                gx += sx.dw[p] * r0;
                gy += sx.w[p] * r1;
            }
            if (order >= 2) {
                hxx += sx.ddw[p] * r0;
                hxy += sx.dw[p] * r1;
                hyy += sx.w[p] * r2;
            }
        }
        out.value += scale * v;
        out.grad[0] += scale * gx;
        out.grad[1] += scale * gy;
        out.hess[0] += scale * hxx;
        out.hess[1] += scale * hxy;
        out.hess[2] += scale * hyy;
        return;
    }
    if (grid.dim != 3) throw std::invalid_argument("spline evaluation supports d = 2 or 3");
    AxisStencil s[3];
    for (int a = 0; a < 3; ++a) axis_stencil(x[a], grid, s[a]);
    double acc[10] = {};
    for (int p = 0; p < 4; ++p) {
        for (int q = 0; q < 4; ++q) {
            const double* line = coef + (s[0].idx[p] * n + s[1].idx[q]) * n;
            double z0 = 0, z1 = 0, z2 = 0;
            for (int r = 0; r < 4; ++r) {
                const double c = line[s[2].idx[r]];
                z0 += c * s[2].w[r];
                z1 += c * s[2].dw[r];
                z2 += c * s[2].ddw[r];
            }
            const double wx = s[0].w[p], dx = s[0].dw[p], ddx = s[0].ddw[p];
            const double wy = s[1].w[q], dy = s[1].dw[q], ddy = s[1].ddw[q];
            acc[0] += wx * wy * z0;
            acc[1] += dx * wy * z0;
            acc[2] += wx * dy * z0;
            acc[3] += wx * wy * z1;
            acc[4] += ddx * wy * z0;
            acc[5] += dx * dy * z0;
            acc[6] += dx * wy * z1;
            acc[7] += wx * ddy * z0;
            acc[8] += wx * dy * z1;
            acc[9] += wx * wy * z2;
        }
    }
    out.value += scale * acc[0];
    for (int a = 0; a < 3; ++a) out.grad[a] += scale * acc[1 + a];
    for (int a = 0; a < 6; ++a) out.hess[a] += scale * acc[4 + a];
    (void)order;
}

}  // namespace sdiff
