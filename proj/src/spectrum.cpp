#include "superdiff/spectrum.hpp"

#include <math.h>  // POSIX j0 / j1

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sdiff {

void gauss_legendre(int order, double a, double b, std::vector<double>& nodes, std::vector<double>& weights) {
    if (order < 1) throw std::invalid_argument("Gauss-Legendre order must be positive");
    nodes.assign(static_cast<std::size_t>(order), 0.0);
    weights.assign(static_cast<std::size_t>(order), 0.0);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < (order + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) p0 = 1.0;
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) p0 = 1.0;
            dp = order * (x * p1 - p0) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i), hi = static_cast<std::size_t>(order - 1 - i);
        nodes[lo] = mid - half * x;
        nodes[hi] = mid + half * x;
        weights[lo] = weights[hi] = half * w;
    }
}

double unit_ball_volume(int d) {
    if (d < 1) throw std::invalid_argument("dimension must be positive");
    return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double cstar_closed_form(int d) {
    if (d < 2) throw std::invalid_argument("c* closed form needs d >= 2");
    return (d - 1) * std::pow(2.0, 1.0 - d) / (std::pow(std::numbers::pi, 0.5 * d) * std::tgamma(0.5 * d));
}

double band_variance_closed_form(int d) {
    return d * unit_ball_volume(d) / std::pow(2.0 * std::numbers::pi, d) * std::log(3.0);
}

namespace {

// Kernel K(z) with zeta_hat(u) = |S^{d-1}|-type constant * int zeta(r) K(u r) r^{d-1} dr,
// and its derivative K'(z).
inline void radial_kernel(int d, double z, double& k, double& dk) {
    if (d == 2) {
        k = ::j0(z);
        dk = -::j1(z);
        return;
    }
    if (z < 1e-4) {
        const double z2 = z * z;
        k = 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
        dk = -z / 3.0 + z * z2 / 30.0;
        return;
    }
    const double s = std::sin(z), c = std::cos(z);
    k = s / z;
    dk = (z * c - s) / (z * z);
}

// 5-point Gauss-Legendre on [-1, 1].
constexpr double kGL5x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
constexpr double kGL5w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                             0.2369268850561891};

inline double hermite(double y0, double y1, double d0, double d1, double h, double s) {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
}

}  // namespace

RadialSpectrum::RadialSpectrum(const RadialProfile& profile, int d, SpectrumOptions options)
    : profile_(profile), d_(d), opt_(options) {
    if (d != 2 && d != 3) throw std::invalid_argument("RadialSpectrum supports d = 2 or 3");
    if (opt_.quadrature_order < 8) throw std::invalid_argument("quadrature order must be at least 8");
    if (opt_.table_intervals < 16 || !(opt_.u_max > 0.0)) throw std::invalid_argument("invalid spectrum table");
    du_ = opt_.u_max / opt_.table_intervals;

    std::vector<double> x, w, x2, w2;
    gauss_legendre(opt_.quadrature_order, 0.0, 0.5, x, w);
    gauss_legendre(opt_.quadrature_order, 0.5, 1.0, x2, w2);
    double m0 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        m0 += w[i] * std::pow(profile_(x[i]), 2) * std::pow(x[i], d - 1);
        m0 += w2[i] * std::pow(profile_(x2[i]), 2) * std::pow(x2[i], d - 1);
    }
    m0_ = m0 * d * unit_ball_volume(d);
    prefactor_ = d * unit_ball_volume(d) / (m0_ * std::pow(2.0 * std::numbers::pi, d));

    build_table(opt_.quadrature_order, zh_, dzh_);
    zeta_hat0_ = zh_[0];
    if (opt_.check_refinement) {
        std::vector<double> zr, dzr;
        build_table(2 * opt_.quadrature_order, zr, dzr);
        double change = 0.0;
        for (std::size_t i = 0; i < zh_.size(); ++i)
            change = std::max(change, std::fabs(zr[i] - zh_[i]) / std::fabs(zeta_hat0_));
        refinement_change_ = change;
        if (change > opt_.refinement_tolerance)
            throw std::runtime_error("radial transform not converged: relative change " + std::to_string(change) +
                                     " under doubled quadrature order");
    }

    cum_.assign(zh_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < zh_.size(); ++i) {
        double acc = 0.0;
        for (int g = 0; g < 5; ++g) {
            const double s = 0.5 * (kGL5x[g] + 1.0);
            const double u = (static_cast<double>(i) + s) * du_;
            const double z = hermite(zh_[i], zh_[i + 1], dzh_[i], dzh_[i + 1], du_, s);
            acc += 0.5 * kGL5w[g] * std::pow(u, d - 1) * z * z;
        }
        cum_[i + 1] = cum_[i] + acc * du_;
    }
}

void RadialSpectrum::build_table(int order, std::vector<double>& zh, std::vector<double>& dzh) const {
    std::vector<double> xa, wa, xb, wb;
    gauss_legendre(order, 0.0, 0.5, xa, wa);
    gauss_legendre(order, 0.5, 1.0, xb, wb);
    std::vector<double> r(xa), wt;
    r.insert(r.end(), xb.begin(), xb.end());
    const double sphere = d_ * unit_ball_volume(d_);
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double wi = i < wa.size() ? wa[i] : wb[i - wa.size()];
        wt.push_back(sphere * wi * profile_(r[i]) * std::pow(r[i], d_ - 1));
    }
    const std::size_t m = static_cast<std::size_t>(opt_.table_intervals) + 1;
    zh.assign(m, 0.0);
    dzh.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double u = static_cast<double>(i) * du_;
        double s = 0.0, ds = 0.0;
        for (std::size_t q = 0; q < r.size(); ++q) {
            double k, dk;
            radial_kernel(d_, u * r[q], k, dk);
            s += wt[q] * k;
            ds += wt[q] * r[q] * dk;
        }
        zh[i] = s;
        dzh[i] = ds;
    }
}

double RadialSpectrum::zeta_hat_direct(double u, int order) const {
    std::vector<double> xa, wa, xb, wb;
    gauss_legendre(order, 0.0, 0.5, xa, wa);
    gauss_legendre(order, 0.5, 1.0, xb, wb);
    const double sphere = d_ * unit_ball_volume(d_);
    double s = 0.0;
    auto add = [&](const std::vector<double>& x, const std::vector<double>& w) {
        for (std::size_t q = 0; q < x.size(); ++q) {
            double k, dk;
            radial_kernel(d_, u * x[q], k, dk);
            s += sphere * w[q] * profile_(x[q]) * std::pow(x[q], d_ - 1) * k;
        }
    };
    add(xa, wa);
    add(xb, wb);
    return s;
}

double RadialSpectrum::zeta_hat(double u) const {
    u = std::fabs(u);
    if (u >= opt_.u_max) return 0.0;
    const double pos = u / du_;
    const auto i = std::min(static_cast<std::size_t>(pos), zh_.size() - 2);
    return hermite(zh_[i], zh_[i + 1], dzh_[i], dzh_[i + 1], du_, pos - static_cast<double>(i));
}

double RadialSpectrum::cumulative(double u) const {
    u = std::fabs(u);
    if (u >= opt_.u_max) return cum_.back();
    const double pos = u / du_;
    const auto i = std::min(static_cast<std::size_t>(pos), zh_.size() - 2);
    const double sfrac = pos - static_cast<double>(i);
    if (sfrac <= 0.0) return cum_[i];
    double acc = 0.0;
    for (int g = 0; g < 5; ++g) {
        const double s = 0.5 * (kGL5x[g] + 1.0) * sfrac;
        const double uu = (static_cast<double>(i) + s) * du_;
        const double z = hermite(zh_[i], zh_[i + 1], dzh_[i], dzh_[i + 1], du_, s);
        acc += 0.5 * kGL5w[g] * std::pow(uu, d_ - 1) * z * z;
    }
    return cum_[i] + acc * sfrac * du_;
}

double RadialSpectrum::cumulative_limit() const {
    return std::pow(2.0 * std::numbers::pi, d_) * m0_ / (d_ * unit_ball_volume(d_));
}

double RadialSpectrum::window(double r_lo, double r_hi, double xi) const {
    xi = std::fabs(xi);
    if (xi == 0.0) {
        return prefactor_ * zeta_hat0_ * zeta_hat0_ * (std::pow(r_hi, d_) - std::pow(r_lo, d_)) / d_;
    }
    const double diff = cumulative(r_hi * xi) - cumulative(r_lo * xi);
    const double scale = cumulative_limit();
    if (diff < -1e-12 * scale) throw std::runtime_error("negative band spectrum: broken radial transform");
    return prefactor_ * std::max(0.0, diff) / std::pow(xi, d_);
}

double RadialSpectrum::band(int n, int n_min, double xi) const {
    if (n < n_min) throw std::invalid_argument("band index below n_min");
    const double hi = std::pow(3.0, n);
    const double lo = n == n_min ? 0.0 : hi / 3.0;
    return window(lo, hi, xi);
}

double RadialSpectrum::mollifier(double xi) const {
    const double r = zeta_hat(xi) / zeta_hat0_;
    return r * r;
}

}  // namespace sdiff
