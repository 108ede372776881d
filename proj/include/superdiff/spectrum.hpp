/// Radial Fourier transform of a bump profile and the per-band
/// covariance spectra built from it.
#pragma once

#include <vector>

#include "superdiff/profile.hpp"

namespace sdiff {

/// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int order, double a, double b, std::vector<double>& nodes, std::vector<double>& weights);

double unit_ball_volume(int d);
/// (d-1) 2^(1-d) / (pi^(d/2) Gamma(d/2)). Throws for d < 2.
double cstar_closed_form(int d);
/// d |B_1| / (2 pi)^d * log 3, the per-band variance.
double band_variance_closed_form(int d);

struct SpectrumOptions {
    /// Gauss-Legendre order on each of [0, 1/2] and [1/2, 1].
    int quadrature_order = 192;
    /// Largest tabulated value of u = r |xi|.
    double u_max = 400.0;
    int table_intervals = 8192;
    /// Rebuild with doubled order and reject if the table moves by more
    /// than `refinement_tolerance` (relative).
    bool check_refinement = true;
    double refinement_tolerance = 1e-6;
};

/// Tabulated zeta_hat(u) and F(u) = int_0^u t^(d-1) zeta_hat(t)^2 dt, so
/// that the band-n spectrum reads
///   S_n(xi) = C |xi|^(-d) [F(3^n |xi|) - F(3^(n-1) |xi|)],
///   C = d |B_1| / (M0 (2 pi)^d).
class RadialSpectrum {
public:
    RadialSpectrum(const RadialProfile& profile, int d, SpectrumOptions options = {});

    int dim() const { return d_; }
    const RadialProfile& profile() const { return profile_; }
    /// Direct quadrature (not tabulated) of the radial transform.
    double zeta_hat_direct(double u, int order) const;
    double zeta_hat(double u) const;
    double cumulative(double u) const;
    double m0() const { return m0_; }
    double prefactor() const { return prefactor_; }
    /// int_0^inf t^(d-1) zeta_hat^2 = (2 pi)^d M0 / (d |B_1|) by Plancherel.
    double cumulative_limit() const;
    /// Relative change of the table under doubled quadrature order.
    double refinement_change() const { return refinement_change_; }

    /// Spectrum of band n at wavenumber |xi|. The lowest band (n == n_min)
    /// integrates r over (0, 3^n_min]; otherwise r in [3^(n-1), 3^n].
    double band(int n, int n_min, double xi) const;
    /// Spectrum of the radial scale window r in [r_lo, r_hi] (r_lo may be 0).
    double window(double r_lo, double r_hi, double xi) const;
    /// |eta_hat(xi)|^2 for eta = zeta / int(zeta).
    double mollifier(double xi) const;

private:
    void build_table(int order, std::vector<double>& zh, std::vector<double>& dzh) const;

    RadialProfile profile_;
    int d_;
    SpectrumOptions opt_;
    double du_;
    double m0_;
    double prefactor_;
    double zeta_hat0_;
    double refinement_change_ = 0.0;
    std::vector<double> zh_;   // zeta_hat at u_i
    std::vector<double> dzh_;  // d zeta_hat / du at u_i
    std::vector<double> cum_;  // F(u_i)
};

}  // namespace sdiff
