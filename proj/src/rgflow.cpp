#include "superdiff/rgflow.hpp"

#include <cmath>
#include <stdexcept>

#include "superdiff/spectrum.hpp"

namespace sdiff {
namespace {
const double kLog3 = std::log(3.0);
}

RGState recurrence_step(const RGState& s, int h) {
    if (h <= 0) throw std::invalid_argument("recurrence step h must be a positive integer");
    if (!(s.sbar > 0.0)) throw std::invalid_argument("diffusivity must be positive");
    if (s.cstar < 0.0) throw std::invalid_argument("c* must be nonnegative");
    RGState next = s;
    next.n = s.n + h;
    next.h = h;
    next.sbar = s.sbar + h * s.cstar * kLog3 / s.sbar;
    return next;
}

std::vector<RGState> flow(double s0, int n0, int N, double cstar, int h) {
    if (N < 1) throw std::invalid_argument("flow needs at least one step");
    std::vector<RGState> out;
    out.reserve(static_cast<std::size_t>(N) + 1);
    RGState s{n0, s0, cstar, h};
    out.push_back(s);
    for (int i = 0; i < N; ++i) {
        s = recurrence_step(s, h);
        out.push_back(s);
    }
    return out;
}

double asymptote(double m, double cstar) {
    if (m < 0.0) throw std::invalid_argument("scale index must be nonnegative");
    return std::sqrt(2.0 * cstar * m * kLog3);
}

double envelope(int n, int n0, double s0, double cstar) {
    return std::sqrt(2.0 * cstar * kLog3 * static_cast<double>(n - n0) + s0 * s0);
}

double envelope_deviation(const std::vector<RGState>& series, double s0) {
    if (series.empty()) return 0.0;
    const int n0 = series.front().n;
    double sup = 0.0;
    for (const auto& s : series) sup = std::max(sup, std::fabs(s.sbar - envelope(s.n, n0, s0, s.cstar)));
    return sup;
}

double diffusivity_prediction(double t, double cstar, int d) {
    if (!(t > std::exp(1.0))) throw std::invalid_argument("diffusivity prediction needs t > e");
    return 2.0 * d * cstar * std::sqrt(std::log(t));
}

double time_scale_map(double eps, double cstar) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("time scale map needs 0 < eps < 1");
    if (!(cstar > 0.0)) throw std::invalid_argument("c* must be positive");
    return 1.0 / (eps * eps * std::sqrt(8.0 * cstar * cstar * std::fabs(std::log(eps))));
}

bool step_in_advisory_range(int n, int h, double sbar, double eps) {
    if (n <= 0) return false;
    const double lo = std::pow(static_cast<double>(n), eps);
    const double hi = std::pow(static_cast<double>(n), -eps) * sbar;
    return h >= lo && h <= hi;
}

double parse_cstar(const std::string& spec) {
    const std::string prefix = "closed-form:";
    if (spec.rfind(prefix, 0) == 0) {
        const std::string d = spec.substr(prefix.size());
        if (d != "2" && d != "3") throw std::invalid_argument("closed-form c* needs d = 2 or 3");
        return cstar_closed_form(std::stoi(d));
    }
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(spec, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse c* '" + spec + "'");
    }
    if (pos != spec.size() || !(v >= 0.0)) throw std::invalid_argument("cannot parse c* '" + spec + "'");
    return v;
}

}  // namespace sdiff
