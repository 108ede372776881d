/// Radial bump profiles used to build the band covariances and the
/// unit-scale mollifier.
#pragma once

#include <array>
#include <string>
#include <vector>

namespace sdiff {

enum class ProfileKind {
    /// g(1-t)/(g(1-t)+g(t)) with g(s) = exp(-steepness/s), t = 2r - 1; C-infinity.
    SmoothstepExp,
    /// 1 - S9(t), S9 the degree-9 smoothstep; C4 at the junctions, steepness unused.
    SmoothstepPoly,
};

ProfileKind parse_profile_kind(const std::string& name);
std::string to_string(ProfileKind kind);

/// Default for the derivative-bound constant; see README for why the
/// literal value 20 is unattainable by any admissible profile.
inline constexpr double kDefaultDerivativeBound = 5.0e4;

struct RadialProfile {
    ProfileKind kind = ProfileKind::SmoothstepExp;
    double steepness = 1.0;
    double derivative_bound = kDefaultDerivativeBound;
    /// max |zeta^(k)| for k = 1..4 from the finite-difference check.
    std::array<double, 4> measured_derivative_max{};

    /// zeta(r): 1 on [0, 1/2], 0 beyond 1, monotone in between.
    double operator()(double r) const;
    /// n+1 equispaced samples on [0, 1].
    std::vector<double> samples(int n) const;
};

/// Sup norms of the first four derivatives from central differences on
/// `points` equispaced nodes of [0, 1].
std::array<double, 4> profile_derivative_max(const RadialProfile& profile, int points = 10000);

/// Builds and validates a profile. Throws std::invalid_argument when
/// steepness <= 0 or a measured derivative exceeds `derivative_bound`.
RadialProfile make_bump_profile(ProfileKind kind, double steepness,
                                double derivative_bound = kDefaultDerivativeBound);

}  // namespace sdiff
