/// Deterministic renormalization recurrence for the scale-indexed
/// diffusivity and the closed-form predictions derived from it.
#pragma once

#include <string>
#include <vector>

namespace sdiff {

struct RGState {
    int n = 0;
    double sbar = 1.0;
    double cstar = 0.0;
    int h = 1;
};

/// sbar <- sbar + h * c* * log 3 / sbar, n <- n + h.
RGState recurrence_step(const RGState& state, int h);

/// States n0, n0+h, ..., covering N steps of size h (N + 1 entries).
std::vector<RGState> flow(double s0, int n0, int N, double cstar, int h = 1);

/// sqrt(2 c* m log 3).
double asymptote(double m, double cstar);

/// Continuum envelope sqrt(2 c* log 3 (n - n0) + s0^2).
double envelope(int n, int n0, double s0, double cstar);

/// sup over the series of |sbar_n - envelope(n)|.
double envelope_deviation(const std::vector<RGState>& series, double s0);

/// Predicted E|X_t|^2 / t = 2 d c* sqrt(log t); requires t > e.
double diffusivity_prediction(double t, double cstar, int d);

/// tau_eps = eps^-2 (8 c*^2 |log eps|)^(-1/2) for 0 < eps < 1.
double time_scale_map(double eps, double cstar);

/// Advisory check h in [n^eps, n^-eps * sbar_n] (never enforced by the map).
bool step_in_advisory_range(int n, int h, double sbar, double eps = 0.1);

/// Parses "<value>" or "closed-form:<d>".
double parse_cstar(const std::string& spec);

}  // namespace sdiff
