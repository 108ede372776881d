#include "superdiff/profile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sdiff {

ProfileKind parse_profile_kind(const std::string& name) {
    if (name == "smoothstep-exp") return ProfileKind::SmoothstepExp;
    if (name == "smoothstep-poly") return ProfileKind::SmoothstepPoly;
    throw std::invalid_argument("unknown profile kind '" + name + "' (expected smoothstep-exp or smoothstep-poly)");
}

std::string to_string(ProfileKind kind) {
    return kind == ProfileKind::SmoothstepExp ? "smoothstep-exp" : "smoothstep-poly";
}

double RadialProfile::operator()(double r) const {
    r = std::fabs(r);
    if (r <= 0.5) return 1.0;
    if (r >= 1.0) return 0.0;
    const double t = 2.0 * r - 1.0;
    if (kind == ProfileKind::SmoothstepExp) {
        const double a = std::exp(-steepness / (1.0 - t));
        const double b = std::exp(-steepness / t);
        return a / (a + b);
    }
    // 1 - sum_{k=5}^{9} C(9,k) t^k (1-t)^(9-k), written in Horner form.
    const double s = t * t * t * t * t *
                     (126.0 + t * (-420.0 + t * (540.0 + t * (-315.0 + t * 70.0))));
    return 1.0 - s;
}

std::vector<double> RadialProfile::samples(int n) const {
    std::vector<double> out(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) out[static_cast<std::size_t>(i)] = (*this)(static_cast<double>(i) / n);
    return out;
}

std::array<double, 4> profile_derivative_max(const RadialProfile& profile, int points) {
    const int n = points - 1;
    const double h = 1.0 / n;
    const std::vector<double> z = profile.samples(n);
    std::array<double, 4> out{};
    for (int i = 2; i + 2 <= n; ++i) {
        const double m2 = z[i - 2], m1 = z[i - 1], c = z[i], p1 = z[i + 1], p2 = z[i + 2];
        const double d1 = (p1 - m1) / (2.0 * h);
        const double d2 = (p1 - 2.0 * c + m1) / (h * h);
        const double d3 = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h * h * h);
        const double d4 = (p2 - 4.0 * p1 + 6.0 * c - 4.0 * m1 + m2) / (h * h * h * h);
        out[0] = std::max(out[0], std::fabs(d1));
        out[1] = std::max(out[1], std::fabs(d2));
        out[2] = std::max(out[2], std::fabs(d3));
        out[3] = std::max(out[3], std::fabs(d4));
    }
    return out;
}

RadialProfile make_bump_profile(ProfileKind kind, double steepness, double derivative_bound) {
    if (!(steepness > 0.0)) throw std::invalid_argument("profile steepness must be positive");
    RadialProfile p;
    p.kind = kind;
    p.steepness = steepness;
    p.derivative_bound = derivative_bound;
    p.measured_derivative_max = profile_derivative_max(p);
    for (int k = 0; k < 4; ++k) {
        if (p.measured_derivative_max[k] > derivative_bound) {
            std::ostringstream msg;
            msg << "profile " << to_string(kind) << " with steepness " << steepness << " has max |zeta^(" << k + 1
                << ")| = " << p.measured_derivative_max[k] << " > bound " << derivative_bound;
            throw std::invalid_argument(msg.str());
        }
    }
    return p;
}

}  // namespace sdiff
