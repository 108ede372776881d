#include "superdiff/stream.hpp"

#include <cmath>
#include <numbers>

namespace sdiff {

void stream_matrix(int d, const StreamSample& s, double* k) {
    for (int i = 0; i < d * d; ++i) k[i] = 0.0;
    for (int c = 0; c < component_count(d); ++c) {
        const auto [a, b] = component_pair(d, c);
        k[a * d + b] = s.comp[c].value;
        k[b * d + a] = -s.comp[c].value;
    }
}

void drift_from_sample(int d, const StreamSample& s, double* f) {
    for (int j = 0; j < d; ++j) f[j] = 0.0;
    for (int c = 0; c < component_count(d); ++c) {
        const auto [a, b] = component_pair(d, c);
        f[b] += s.comp[c].grad[a];
        f[a] -= s.comp[c].grad[b];
    }
}

namespace {
inline int hess_index(int d, int i, int j) {
    if (i > j) std::swap(i, j);
    if (d == 2) return i == 0 ? j : 2;
    static constexpr int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return table[i][j];
}
}  // namespace

void drift_jacobian_from_sample(int d, const StreamSample& s, double* jac) {
    for (int i = 0; i < d * d; ++i) jac[i] = 0.0;
    for (int c = 0; c < component_count(d); ++c) {
        const auto [a, b] = component_pair(d, c);
        for (int l = 0; l < d; ++l) {
            jac[b * d + l] += s.comp[c].hess[hess_index(d, a, l)];
            jac[a * d + l] -= s.comp[c].hess[hess_index(d, b, l)];
        }
    }
}

void ConstantStream::sample(const double*, int, StreamSample& out) const {
    out = StreamSample{};
    for (int c = 0; c < component_count(d_); ++c) out.comp[c].value = v_[c];
}

LayeredStream LayeredStream::sine(double amplitude, double wavelength) {
    const double w = 2.0 * std::numbers::pi / wavelength;
    return LayeredStream([=](double x) { return amplitude * std::sin(w * x); },
                         [=](double x) { return amplitude * w * std::cos(w * x); },
                         [=](double x) { return -amplitude * w * w * std::sin(w * x); });
}

void LayeredStream::sample(const double* x, int order, StreamSample& out) const {
    out = StreamSample{};
    out.comp[0].value = b_(x[0]);
    if (order >= 1) out.comp[0].grad[0] = db_(x[0]);
    if (order >= 2) out.comp[0].hess[0] = ddb_(x[0]);
}

void ShiftedStream::sample(const double* x, int order, StreamSample& out) const {
    base_.sample(x, order, out);
    for (int c = 0; c < component_count(base_.dim()); ++c) {
        auto& s = out.comp[c];
        s.value = sign_ * s.value + shift_[c];
        for (double& g : s.grad) g *= sign_;
        for (double& h : s.hess) h *= sign_;
    }
}

void DifferenceStream::sample(const double* x, int order, StreamSample& out) const {
    StreamSample sb;
    a_.sample(x, order, out);
    b_.sample(x, order, sb);
    for (int c = 0; c < component_count(a_.dim()); ++c) {
        out.comp[c].value -= sb.comp[c].value;
        for (int i = 0; i < 3; ++i) out.comp[c].grad[i] -= sb.comp[c].grad[i];
        for (int i = 0; i < 6; ++i) out.comp[c].hess[i] -= sb.comp[c].hess[i];
    }
}

}  // namespace sdiff
