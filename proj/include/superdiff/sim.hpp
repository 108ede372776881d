/// Monte Carlo simulation of dX = f(X) dt + sqrt(2 nu) dW for a
/// divergence-free drift f = div k, with moment, diffusivity, exit-time and
/// rescaled-process diagnostics.
#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "superdiff/field.hpp"
#include "superdiff/stats.hpp"
#include "superdiff/stream.hpp"

namespace sdiff {

/// Drift provider for the simulator.
class DriftField {
public:
    virtual ~DriftField() = default;
    virtual int dim() const = 0;
    virtual void drift(const double* x, double* f) const = 0;
    /// Upper estimate of sup |grad f| (Frobenius); 0 for constant drifts.
    virtual double gradient_bound() const = 0;
};

/// f = div k from a stream source.
class StreamDrift final : public DriftField {
public:
    StreamDrift(const StreamSource& source, double gradient_bound) : src_(source), bound_(gradient_bound) {}
    int dim() const override { return src_.dim(); }
    void drift(const double* x, double* f) const override;
    double gradient_bound() const override { return bound_; }

private:
    const StreamSource& src_;
    double bound_;
};

/// Spatially constant drift (zero gives Brownian motion).
class ConstantDrift final : public DriftField {
public:
    ConstantDrift(int d, std::vector<double> f0);
    int dim() const override { return d_; }
    void drift(const double*, double* f) const override {
        for (int i = 0; i < d_; ++i) f[i] = f0_[static_cast<std::size_t>(i)];
    }
    double gradient_bound() const override { return 0.0; }

private:
    int d_;
    std::vector<double> f0_;
};

/// Sum over bands of the per-band sup |grad f_n|, taken over the band's
/// nodes and cell centres (an upper estimate for the combined field).
double drift_gradient_bound(const StreamField& field);

/// Drift of a whole field that keeps the field alive; computes the gradient bound.
std::unique_ptr<DriftField> make_field_drift(std::shared_ptr<const StreamField> field);

struct SimConfig {
    std::size_t particles = 1000;
    double tmax = 100.0;
    /// Time step; 0 selects min(0.1 l^2 / nu, 0.1 / sup|grad f|).
    double dt = 0.0;
    /// Length l in the automatic step rule (the finest field scale).
    double length_scale = 1.0;
    double nu = 1.0;
    std::uint64_t seed = 1;
    /// Geometric recording grid record_start * ratio^k up to tmax (tmax included).
    double record_start = 1.0;
    double record_ratio = 3.1622776601683795;
    /// Additional recording times merged into the grid.
    std::vector<double> extra_times;
    std::size_t block_size = 256;
    std::vector<double> exit_radii;
    bool keep_paths = false;
};

/// Recording times of `cfg`, sorted and deduplicated.
std::vector<double> recording_times(const SimConfig& cfg);

/// Step actually used for `drift` under `cfg`.
double resolve_dt(const SimConfig& cfg, const DriftField& drift);

struct EnsembleStats {
    int dim = 2;
    double nu = 1.0;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<double> msd;     // mean |X_t - X_0|^2
    std::vector<double> msd_se;
    std::vector<double> m4;      // mean |X_t - X_0|^4
    std::vector<double> m4_se;
    std::vector<std::vector<double>> cov;  // d x d component covariance per time (row-major)
    std::size_t particles = 0;   // particles that completed every step
    std::size_t aborted = 0;     // particles that produced a non-finite state
    /// Per-block (or per-replica, for annealed runs) means of |X|^2, [block][time].
    std::vector<std::vector<double>> group_msd;
    std::vector<double> group_weight;
    /// Displacements [particle][time][axis], when paths were kept.
    std::vector<double> paths;
    /// Exit times [radius][particle] (infinity when no exit before tmax).
    std::vector<double> exit_radii;
    std::vector<std::vector<double>> exit_times;
};

/// Quenched ensemble in one drift field; every particle starts at `start` (origin when empty).
EnsembleStats run_ensemble(const DriftField& drift, const SimConfig& cfg, const std::vector<double>& start = {});

/// Annealed ensemble over `replicas` fields built sequentially by
/// `make_drift(replica)`; particles are split evenly between replicas.
EnsembleStats run_annealed(const std::function<std::unique_ptr<DriftField>(std::uint64_t)>& make_drift, int replicas,
                           const SimConfig& cfg);

struct DiffusivityRow {
    double t = 0.0;
    double msd = 0.0;
    double msd_se = 0.0;
    double m4 = 0.0;
    double D = 0.0;
    double D_lo = 0.0;
    double D_hi = 0.0;
};

/// D(t) = msd / (2 d t) with a bootstrap interval over groups.
std::vector<DiffusivityRow> msd_diffusivity(const EnsembleStats& stats, std::uint64_t seed = 5);

/// Slope-based plateau msd increment / (2 d dt) over the last `window` factor in time.
double plateau_diffusivity(const EnsembleStats& stats, double window = 10.0);

struct ExitRow {
    double t = 0.0;
    double p_exit = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Empirical CDF of the first exit time from the ball of radius `radius`
/// (must be one of the configured radii) on the recording grid, with t = 0 first.
std::vector<ExitRow> exit_time_experiment(const EnsembleStats& stats, double radius);

struct RescaledReport {
    double eps = 0.0;
    double tau = 0.0;
    std::vector<double> variance;         // per component
    std::vector<double> excess_kurtosis;  // per component
    std::vector<double> kurtosis_se;
    std::vector<double> jarque_bera;      // per component
    double offdiag_ratio = 0.0;           // max |cov_ij| / trace
    bool kurtosis_ok = false;             // |excess| < max(0.1, 3 SE)
    bool isotropy_ok = false;             // off-diagonal < 5% of trace
};

/// Statistics of X^eps_1 = eps X_{tau_eps}; tau_eps must be a recorded time.
RescaledReport rescaled_increments(const EnsembleStats& stats, double eps, double cstar);

struct MomentBoundReport {
    double kappa = 2.0;
    double theta = 1.0;
    double C2 = 0.0, C4 = 0.0;
    std::vector<double> times;
    std::vector<double> ratio2, ratio4;   // M_n / envelope_n
    std::vector<double> kurtosis_ratio;   // m4 / msd^2
    bool envelope_ok = false;
    bool kurtosis_ok = false;             // ratio <= 5 at every time
};

/// Envelope C_n t^(n/2) (log max(t, kappa^2))^(theta (n + d) / 2) for n = 2, 4.
/// C_n is fitted on the first `fit_fraction` of the recorded times and checked
/// on the rest with a three-standard-error allowance.
MomentBoundReport moment_bound_check(const EnsembleStats& stats, double kappa = 2.0, double theta = 1.0,
                                     double fit_fraction = 0.5);

/// Diffusivity expected at time T from the scale envelope sqrt(2 c* log3 m + nu^2),
/// with m = log3 sqrt(T) capped at L.
double predicted_diffusivity(double T, double nu, double cstar, int L);

/// Cutoff discipline 3^L >= 10 sqrt(D T); throws unless `allow_outrun`.
void check_cutoff_discipline(int L, double D, double T, bool allow_outrun);

}  // namespace sdiff
