/// Read-only sources of an antisymmetric stream matrix k(x) and the
/// divergence-free drift f_j = sum_i d_i k_ij derived from them.
#pragma once

#include <array>
#include <functional>
#include <memory>

#include "superdiff/spline.hpp"

namespace sdiff {

/// Number of independent entries k_ab (a < b).
inline int component_count(int d) { return d * (d - 1) / 2; }

/// Index pair (a, b) of component c, ordered (0,1), (0,2), (1,2).
inline std::array<int, 2> component_pair(int d, int c) {
    if (d == 2) return {0, 1};
    static constexpr int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    return {pairs[c][0], pairs[c][1]};
}

/// Independent components of k and their derivatives at one point.
struct StreamSample {
    std::array<SplineSample, 3> comp{};
};

class StreamSource {
public:
    virtual ~StreamSource() = default;
    virtual int dim() const = 0;
    /// Fills `out` with component values (order 0), gradients (order >= 1)
    /// and Hessians (order 2). Must be safe for concurrent calls.
    virtual void sample(const double* x, int order, StreamSample& out) const = 0;
};

/// Full d x d matrix k(x) (row-major) from a sample; exactly antisymmetric.
void stream_matrix(int d, const StreamSample& s, double* k);

/// Drift f(x) from the first derivatives of a sample.
void drift_from_sample(int d, const StreamSample& s, double* f);

/// Drift Jacobian J[j * d + l] = d_l f_j from the second derivatives.
void drift_jacobian_from_sample(int d, const StreamSample& s, double* jac);

/// Constant stream matrix with given independent components.
class ConstantStream final : public StreamSource {
public:
    ConstantStream(int d, std::array<double, 3> values) : d_(d), v_(values) {}
    int dim() const override { return d_; }
    void sample(const double* x, int order, StreamSample& out) const override;

private:
    int d_;
    std::array<double, 3> v_;
};

/// 2D field with k_12 = b(x_1) given by value/derivative callables.
class LayeredStream final : public StreamSource {
public:
    using Fn = std::function<double(double)>;
    LayeredStream(Fn b, Fn db, Fn ddb) : b_(std::move(b)), db_(std::move(db)), ddb_(std::move(ddb)) {}
    /// b(x) = amplitude * sin(2 pi x / wavelength).
    static LayeredStream sine(double amplitude, double wavelength);
    int dim() const override { return 2; }
    void sample(const double* x, int order, StreamSample& out) const override;

private:
    Fn b_, db_, ddb_;
};

/// Wraps a source, adding a constant matrix and/or flipping the sign
/// (the latter realises the transposed coefficient field a^T = nu I - k).
class ShiftedStream final : public StreamSource {
public:
    ShiftedStream(const StreamSource& base, std::array<double, 3> shift, double sign = 1.0)
        : base_(base), shift_(shift), sign_(sign) {}
    int dim() const override { return base_.dim(); }
    void sample(const double* x, int order, StreamSample& out) const override;

private:
    const StreamSource& base_;
    std::array<double, 3> shift_;
    double sign_;
};

/// Difference of two sources (a - b), used by localization diagnostics.
class DifferenceStream final : public StreamSource {
public:
    DifferenceStream(const StreamSource& a, const StreamSource& b) : a_(a), b_(b) {}
    int dim() const override { return a_.dim(); }
    void sample(const double* x, int order, StreamSample& out) const override;

private:
    const StreamSource& a_;
    const StreamSource& b_;
};

}  // namespace sdiff
