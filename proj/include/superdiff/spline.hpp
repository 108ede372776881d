/// Periodic grids and tensor-product cubic B-spline interpolation on them.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace sdiff {

/// A periodic cube [0, cells * spacing)^dim with nodes at j * spacing.
struct BandGrid {
    int dim = 2;
    std::size_t cells = 0;
    double spacing = 1.0;

    double period() const { return static_cast<double>(cells) * spacing; }
    std::size_t size() const {
        std::size_t s = 1;
        for (int a = 0; a < dim; ++a) s *= cells;
        return s;
    }
    bool operator==(const BandGrid& o) const {
        return dim == o.dim && cells == o.cells && spacing == o.spacing;
    }
};

/// Value, gradient and packed Hessian (xx, xy, yy) in 2D or
/// (xx, xy, xz, yy, yz, zz) in 3D of a scalar interpolant.
struct SplineSample {
    double value = 0.0;
    std::array<double, 3> grad{};
    std::array<double, 6> hess{};
};

/// Interpolation coefficients reproducing `values` at the nodes.
std::vector<double> bspline_coefficients(const BandGrid& grid, std::span<const double> values);

/// Node values of the interpolant with the given coefficients.
std::vector<double> bspline_node_values(const BandGrid& grid, std::span<const double> coef);

/// Cubic B-spline basis on the four nodes i-1..i+2 at fractional offset t.
inline void bspline_basis(double t, double* w, double* dw, double* ddw) {
    const double t2 = t * t, t3 = t2 * t, u = 1.0 - t;
    w[0] = u * u * u / 6.0;
    w[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
    w[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
    w[3] = t3 / 6.0;
    dw[0] = -0.5 * u * u;
    dw[1] = 0.5 * (3.0 * t2 - 4.0 * t);
    dw[2] = 0.5 * (-3.0 * t2 + 2.0 * t + 1.0);
    dw[3] = 0.5 * t2;
    ddw[0] = u;
    ddw[1] = 3.0 * t - 2.0;
    ddw[2] = 1.0 - 3.0 * t;
    ddw[3] = t;
}

/// Accumulates scale * interpolant (up to derivative `order` in {0,1,2})
/// at the unwrapped point x into `out`.
void bspline_accumulate(const BandGrid& grid, const double* coef, const double* x, int order, double scale,
                        SplineSample& out);

}  // namespace sdiff
