#include "superdiff/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "superdiff/parallel.hpp"
#include "superdiff/philox.hpp"
#include "superdiff/rgflow.hpp"

namespace sdiff {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BlockResult {
    std::vector<double> s2, s4, s8;  // [time]
    std::vector<double> cov;        // [time][d*d]
    std::size_t done = 0, aborted = 0;
    std::vector<double> paths;      // completed particles only
    std::vector<std::vector<double>> exits;  // [radius][completed particle]
};

std::size_t index_of_time(const std::vector<double>& times, double t) {
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::fabs(times[i] - t) <= 1e-9 * std::max(1.0, t)) return i;
    std::ostringstream msg;
    msg << "time " << t << " is not on the recording grid";
    throw std::invalid_argument(msg.str());
}

double crossing_fraction(const double* a, const double* b, int d, double r) {
    double aa = 0, ad = 0, dd = 0;
    for (int i = 0; i < d; ++i) {
        const double di = b[i] - a[i];
        aa += a[i] * a[i];
        ad += a[i] * di;
        dd += di * di;
    }
    if (dd == 0.0) return 1.0;
    const double disc = std::max(0.0, ad * ad - dd * (aa - r * r));
    return std::clamp((-ad + std::sqrt(disc)) / dd, 0.0, 1.0);
}

void validate_config(const SimConfig& cfg) {
    if (cfg.particles == 0) throw std::invalid_argument("simulation needs at least one particle");
    if (!(cfg.tmax > 0.0)) throw std::invalid_argument("tmax must be positive");
    if (!(cfg.nu > 0.0)) throw std::invalid_argument("nu must be positive");
    if (cfg.dt < 0.0) throw std::invalid_argument("dt must be positive (or 0 for automatic)");
    if (!(cfg.record_ratio > 1.0)) throw std::invalid_argument("recording ratio must exceed 1");
    if (!(cfg.record_start > 0.0)) throw std::invalid_argument("first recording time must be positive");
    if (cfg.block_size == 0) throw std::invalid_argument("block size must be positive");
    for (double r : cfg.exit_radii)
        if (!(r > 0.0)) throw std::invalid_argument("exit radii must be positive");
}

}  // namespace

void StreamDrift::drift(const double* x, double* f) const {
    StreamSample s;
    src_.sample(x, 1, s);
    drift_from_sample(src_.dim(), s, f);
}

ConstantDrift::ConstantDrift(int d, std::vector<double> f0) : d_(d), f0_(std::move(f0)) {
    if (d != 2 && d != 3) throw std::invalid_argument("dimension must be 2 or 3");
    if (static_cast<int>(f0_.size()) != d) throw std::invalid_argument("constant drift has wrong dimension");
}

double drift_gradient_bound(const StreamField& field) {
    const int d = field.dim();
    double total = 0.0;
    for (const auto& lv : field.levels()) {
        const std::size_t N = lv.grid.cells;
        const std::size_t rows = d == 2 ? N : N * N;
        std::vector<double> row_max(rows, 0.0);
        parallel_for(rows, [&](std::size_t r) {
            double best = 0.0;
            for (int half = 0; half < 2; ++half) {
                const double off = 0.5 * half;
                for (std::size_t i = 0; i < N; ++i) {
                    double x[3];
                    if (d == 2) {
                        x[0] = (static_cast<double>(r) + off) * lv.grid.spacing;
                        x[1] = (static_cast<double>(i) + off) * lv.grid.spacing;
                        x[2] = 0.0;
                    } else {
                        x[0] = (static_cast<double>(r / N) + off) * lv.grid.spacing;
                        x[1] = (static_cast<double>(r % N) + off) * lv.grid.spacing;
                        x[2] = (static_cast<double>(i) + off) * lv.grid.spacing;
                    }
                    StreamSample s;
                    field.sample(x, lv.n, lv.n, 2, s);
                    double jac[9];
                    drift_jacobian_from_sample(d, s, jac);
                    double fro = 0.0;
                    for (int k = 0; k < d * d; ++k) fro += jac[k] * jac[k];
                    best = std::max(best, fro);
                }
            }
            row_max[r] = std::sqrt(best);
        });
        total += *std::max_element(row_max.begin(), row_max.end());
    }
    return total;
}

namespace {

class FieldDrift final : public DriftField {
public:
    explicit FieldDrift(std::shared_ptr<const StreamField> f)
        : field_(std::move(f)), view_(*field_), drift_(view_, drift_gradient_bound(*field_)) {}
    int dim() const override { return drift_.dim(); }
    void drift(const double* x, double* f) const override { drift_.drift(x, f); }
    double gradient_bound() const override { return drift_.gradient_bound(); }

private:
    std::shared_ptr<const StreamField> field_;
    FieldView view_;
    StreamDrift drift_;
};

}  // namespace

std::unique_ptr<DriftField> make_field_drift(std::shared_ptr<const StreamField> field) {
    if (!field) throw std::invalid_argument("null field");
    return std::make_unique<FieldDrift>(std::move(field));
}

std::vector<double> recording_times(const SimConfig& cfg) {
    std::vector<double> t;
    for (int k = 0;; ++k) {
        double v = cfg.record_start * std::pow(cfg.record_ratio, k);
        if (!(v < cfg.tmax * (1.0 - 1e-12))) break;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", v);
        v = std::strtod(buf, nullptr);
        t.push_back(v);
    }
    t.push_back(cfg.tmax);
    for (double e : cfg.extra_times) {
        if (!(e > 0.0) || e > cfg.tmax * (1.0 + 1e-12)) throw std::invalid_argument("extra recording time outside (0, tmax]");
        t.push_back(e);
    }
    std::sort(t.begin(), t.end());
    std::vector<double> out;
    for (double v : t)
        if (out.empty() || v > out.back() * (1.0 + 1e-12)) out.push_back(v);
    return out;
}

double resolve_dt(const SimConfig& cfg, const DriftField& drift) {
    if (cfg.dt > 0.0) return cfg.dt;
    double dt = 0.1 * cfg.length_scale * cfg.length_scale / cfg.nu;
    const double g = drift.gradient_bound();
    if (g > 0.0) dt = std::min(dt, 0.1 / g);
    return dt;
}

EnsembleStats run_ensemble(const DriftField& drift, const SimConfig& cfg, const std::vector<double>& start_in) {
    validate_config(cfg);
    const int d = drift.dim();
    std::vector<double> start = start_in.empty() ? std::vector<double>(static_cast<std::size_t>(d), 0.0) : start_in;
    if (static_cast<int>(start.size()) != d) throw std::invalid_argument("start point has wrong dimension");
    const double dt = resolve_dt(cfg, drift);
    const std::vector<double> times = recording_times(cfg);
    const std::size_t nt = times.size(), nr = cfg.exit_radii.size();
    const std::size_t nblocks = (cfg.particles + cfg.block_size - 1) / cfg.block_size;
    std::vector<BlockResult> blocks(nblocks);

    parallel_for(nblocks, [&](std::size_t b) {
        BlockResult& res = blocks[b];
        res.s2.assign(nt, 0.0);
        res.s4.assign(nt, 0.0);
        res.s8.assign(nt, 0.0);
        res.cov.assign(nt * static_cast<std::size_t>(d * d), 0.0);
        res.exits.assign(nr, {});
        const PhiloxKey key = derive_key({cfg.seed, 0x51Aull, b});
        const std::size_t first = b * cfg.block_size;
        const std::size_t last = std::min(cfg.particles, first + cfg.block_size);
        std::vector<double> rec(nt * static_cast<std::size_t>(d));
        std::vector<double> ex(nr);
        for (std::size_t p = first; p < last; ++p) {
            const std::uint64_t local = p - first;
            double x[3] = {0, 0, 0}, xn[3], f[3], a[3], bb[3];
            std::fill(ex.begin(), ex.end(), kInf);
            bool ok = true;
            double t = 0.0;
            std::uint64_t step = 0;
            for (std::size_t k = 0; k < nt && ok; ++k) {
                const double tk = times[k];
                while (t < tk) {
                    double h = dt;
                    bool land = false;
                    if (t + h >= tk * (1.0 - 1e-12)) {
                        h = tk - t;
                        land = true;
                    }
                    double pos[3];
                    for (int i = 0; i < d; ++i) pos[i] = start[i] + x[i];
                    drift.drift(pos, f);
                    const auto z0 = normal_pair_at(key, step, 2 * local);
                    double z[3] = {z0[0], z0[1], 0.0};
                    if (d == 3) z[2] = normal_pair_at(key, step, 2 * local + 1)[0];
                    const double amp = std::sqrt(2.0 * cfg.nu * h);
                    for (int i = 0; i < d; ++i) {
                        xn[i] = x[i] + f[i] * h + amp * z[i];
                        if (!std::isfinite(xn[i])) ok = false;
                    }
                    if (!ok) break;
                    if (nr > 0) {
                        double r2 = 0.0;
                        for (int i = 0; i < d; ++i) r2 += xn[i] * xn[i];
                        for (std::size_t ri = 0; ri < nr; ++ri) {
                            if (ex[ri] != kInf || r2 < cfg.exit_radii[ri] * cfg.exit_radii[ri]) continue;
                            for (int i = 0; i < d; ++i) {
                                a[i] = x[i];
                                bb[i] = xn[i];
                            }
                            ex[ri] = t + crossing_fraction(a, bb, d, cfg.exit_radii[ri]) * h;
                        }
                    }
                    for (int i = 0; i < d; ++i) x[i] = xn[i];
                    t = land ? tk : t + h;
                    ++step;
                }
                for (int i = 0; i < d; ++i) rec[k * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] = x[i];
            }
            if (!ok) {
                ++res.aborted;
                continue;
            }
            ++res.done;
            for (std::size_t k = 0; k < nt; ++k) {
                const double* y = &rec[k * static_cast<std::size_t>(d)];
                double r2 = 0.0;
                for (int i = 0; i < d; ++i) r2 += y[i] * y[i];
                res.s2[k] += r2;
                res.s4[k] += r2 * r2;
                res.s8[k] += r2 * r2 * r2 * r2;
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) res.cov[k * static_cast<std::size_t>(d * d) + static_cast<std::size_t>(i * d + j)] += y[i] * y[j];
            }
            if (cfg.keep_paths) res.paths.insert(res.paths.end(), rec.begin(), rec.end());
            for (std::size_t ri = 0; ri < nr; ++ri) res.exits[ri].push_back(ex[ri]);
        }
    });

    EnsembleStats st;
    st.dim = d;
    st.nu = cfg.nu;
    st.dt = dt;
    st.times = times;
    st.exit_radii = cfg.exit_radii;
    st.exit_times.assign(nr, {});
    std::vector<double> s2(nt, 0.0), s4(nt, 0.0), s8(nt, 0.0), cov(nt * static_cast<std::size_t>(d * d), 0.0);
    for (const auto& b : blocks) {
        st.particles += b.done;
        st.aborted += b.aborted;
        for (std::size_t k = 0; k < nt; ++k) {
            s2[k] += b.s2[k];
            s4[k] += b.s4[k];
            s8[k] += b.s8[k];
        }
        for (std::size_t k = 0; k < cov.size(); ++k) cov[k] += b.cov[k];
        if (b.done > 0) {
            std::vector<double> gm(nt);
            for (std::size_t k = 0; k < nt; ++k) gm[k] = b.s2[k] / static_cast<double>(b.done);
            st.group_msd.push_back(std::move(gm));
            st.group_weight.push_back(static_cast<double>(b.done));
        }
        st.paths.insert(st.paths.end(), b.paths.begin(), b.paths.end());
        for (std::size_t ri = 0; ri < nr; ++ri) st.exit_times[ri].insert(st.exit_times[ri].end(), b.exits[ri].begin(), b.exits[ri].end());
    }
    if (st.particles == 0) throw std::runtime_error("every trajectory produced a non-finite state (dt too large?)");
    const double n = static_cast<double>(st.particles);
    st.msd.resize(nt);
    st.m4.resize(nt);
    st.m4_se.resize(nt);
    st.msd_se.resize(nt);
    st.cov.assign(nt, std::vector<double>(static_cast<std::size_t>(d * d)));
    for (std::size_t k = 0; k < nt; ++k) {
        st.msd[k] = s2[k] / n;
        st.m4[k] = s4[k] / n;
        st.m4_se[k] = st.particles > 1 ? std::sqrt(std::max(0.0, s8[k] / n - st.m4[k] * st.m4[k]) / (n - 1.0)) : 0.0;
        st.msd_se[k] = st.particles > 1 ? std::sqrt(std::max(0.0, st.m4[k] - st.msd[k] * st.msd[k]) / (n - 1.0)) : 0.0;
        for (int i = 0; i < d * d; ++i)
            st.cov[k][static_cast<std::size_t>(i)] = cov[k * static_cast<std::size_t>(d * d) + static_cast<std::size_t>(i)] / n;
    }
    return st;
}

EnsembleStats run_annealed(const std::function<std::unique_ptr<DriftField>(std::uint64_t)>& make_drift, int replicas,
                           const SimConfig& cfg) {
    if (replicas < 1) throw std::invalid_argument("annealed runs need at least one replica");
    if (cfg.particles < static_cast<std::size_t>(replicas)) throw std::invalid_argument("fewer particles than replicas");
    EnsembleStats total;
    std::vector<double> s2, s4, s8;
    std::vector<std::vector<double>> cov;
    const std::size_t base = cfg.particles / static_cast<std::size_t>(replicas);
    const std::size_t extra = cfg.particles % static_cast<std::size_t>(replicas);
    for (int r = 0; r < replicas; ++r) {
        const std::unique_ptr<DriftField> drift = make_drift(static_cast<std::uint64_t>(r));
        SimConfig c = cfg;
        c.particles = base + (static_cast<std::size_t>(r) < extra ? 1 : 0);
        c.seed = mix64(cfg.seed ^ mix64(0xA11EA1ull + static_cast<std::uint64_t>(r)));
        EnsembleStats st = run_ensemble(*drift, c);
        const double n = static_cast<double>(st.particles);
        if (r == 0) {
            total.dim = st.dim;
            total.nu = st.nu;
            total.dt = st.dt;
            total.times = st.times;
            total.exit_radii = st.exit_radii;
            total.exit_times.assign(st.exit_radii.size(), {});
            s2.assign(st.times.size(), 0.0);
            s4.assign(st.times.size(), 0.0);
            s8.assign(st.times.size(), 0.0);
            cov.assign(st.times.size(), std::vector<double>(st.cov.front().size(), 0.0));
        }
        total.dt = std::min(total.dt, st.dt);
        total.particles += st.particles;
        total.aborted += st.aborted;
        for (std::size_t k = 0; k < st.times.size(); ++k) {
            s2[k] += n * st.msd[k];
            s4[k] += n * st.m4[k];
            s8[k] += n * (st.m4_se[k] * st.m4_se[k] * std::max(1.0, n - 1.0) + st.m4[k] * st.m4[k]);
            for (std::size_t i = 0; i < cov[k].size(); ++i) cov[k][i] += n * st.cov[k][i];
        }
        total.group_msd.push_back(st.msd);
        total.group_weight.push_back(n);
        total.paths.insert(total.paths.end(), st.paths.begin(), st.paths.end());
        for (std::size_t ri = 0; ri < st.exit_times.size(); ++ri)
            total.exit_times[ri].insert(total.exit_times[ri].end(), st.exit_times[ri].begin(), st.exit_times[ri].end());
    }
    const double n = static_cast<double>(total.particles);
    const std::size_t nt = total.times.size();
    total.msd.resize(nt);
    total.m4.resize(nt);
    total.m4_se.resize(nt);
    total.msd_se.resize(nt);
    total.cov = cov;
    const double G = static_cast<double>(replicas);
    for (std::size_t k = 0; k < nt; ++k) {
        total.msd[k] = s2[k] / n;
        total.m4[k] = s4[k] / n;
        total.m4_se[k] = std::sqrt(std::max(0.0, s8[k] / n - total.m4[k] * total.m4[k]) / std::max(1.0, n - 1.0));
        for (double& v : total.cov[k]) v /= n;
        if (replicas > 1) {
            double var = 0.0;
            for (std::size_t g = 0; g < total.group_msd.size(); ++g) {
                const double dv = total.group_msd[g][k] - total.msd[k];
                var += total.group_weight[g] * dv * dv;
            }
            var /= n;
            total.msd_se[k] = std::sqrt(var * G / (G - 1.0) / G);
        } else {
            total.msd_se[k] = std::sqrt(std::max(0.0, total.m4[k] - total.msd[k] * total.msd[k]) / std::max(1.0, n - 1.0));
        }
    }
    return total;
}

std::vector<DiffusivityRow> msd_diffusivity(const EnsembleStats& st, std::uint64_t seed) {
    std::vector<DiffusivityRow> rows;
    const double twod = 2.0 * st.dim;
    for (std::size_t k = 0; k < st.times.size(); ++k) {
        const double t = st.times[k];
        if (!(t > 0.0)) continue;
        DiffusivityRow r;
        r.t = t;
        r.msd = st.msd[k];
        r.msd_se = st.msd_se[k];
        r.m4 = st.m4[k];
        r.D = r.msd / (twod * t);
        bool equal_weights = true;
        for (double w : st.group_weight) equal_weights = equal_weights && w == st.group_weight.front();
        if (st.group_msd.size() >= 2 && equal_weights) {
            std::vector<double> g;
            for (const auto& gm : st.group_msd) g.push_back(gm[k]);
            const Interval ci = bootstrap_mean_ci(g, mix64(seed + k));
            r.D_lo = ci.lo / (twod * t);
            r.D_hi = ci.hi / (twod * t);
        } else {
            r.D_lo = (r.msd - 1.959963984540054 * r.msd_se) / (twod * t);
            r.D_hi = (r.msd + 1.959963984540054 * r.msd_se) / (twod * t);
        }
        rows.push_back(r);
    }
    return rows;
}

double plateau_diffusivity(const EnsembleStats& st, double window) {
    const std::size_t last = st.times.size() - 1;
    const double T = st.times[last];
    std::size_t a = last;
    while (a > 0 && st.times[a - 1] >= T / window * (1.0 - 1e-12)) --a;
    if (a == last) {
        if (last == 0) return st.msd[0] / (2.0 * st.dim * T);
        a = last - 1;
    }
    return (st.msd[last] - st.msd[a]) / (2.0 * st.dim * (T - st.times[a]));
}

std::vector<ExitRow> exit_time_experiment(const EnsembleStats& st, double radius) {
    std::size_t ri = st.exit_radii.size();
    for (std::size_t i = 0; i < st.exit_radii.size(); ++i)
        if (std::fabs(st.exit_radii[i] - radius) <= 1e-12 * radius) ri = i;
    if (ri == st.exit_radii.size()) throw std::invalid_argument("radius was not configured for exit tracking");
    std::vector<double> ex = st.exit_times[ri];
    std::sort(ex.begin(), ex.end());
    const auto n = static_cast<std::uint64_t>(ex.size());
    std::vector<ExitRow> rows;
    rows.push_back({0.0, 0.0, 0.0, wilson_interval(0, n).hi});
    for (double t : st.times) {
        const auto c = static_cast<std::uint64_t>(std::upper_bound(ex.begin(), ex.end(), t) - ex.begin());
        const Interval w = wilson_interval(c, n);
        rows.push_back({t, static_cast<double>(c) / static_cast<double>(n), w.lo, w.hi});
    }
    return rows;
}

RescaledReport rescaled_increments(const EnsembleStats& st, double eps, double cstar) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("rescaling needs 0 < eps < 1");
    if (st.paths.empty()) throw std::invalid_argument("rescaled increments need stored paths");
    RescaledReport rep;
    rep.eps = eps;
    rep.tau = time_scale_map(eps, cstar);
    const std::size_t k = index_of_time(st.times, rep.tau);
    const int d = st.dim;
    const std::size_t nt = st.times.size();
    const std::size_t n = st.paths.size() / (nt * static_cast<std::size_t>(d));
    if (n < 4) throw std::invalid_argument("rescaled increments need at least 4 particles");
    std::vector<double> c2(static_cast<std::size_t>(d * d), 0.0);
    rep.variance.assign(static_cast<std::size_t>(d), 0.0);
    rep.excess_kurtosis.assign(static_cast<std::size_t>(d), 0.0);
    rep.kurtosis_se.assign(static_cast<std::size_t>(d), 0.0);
    rep.jarque_bera.assign(static_cast<std::size_t>(d), 0.0);
    for (int a = 0; a < d; ++a) {
        std::vector<double> y(n);
        for (std::size_t p = 0; p < n; ++p) y[p] = eps * st.paths[(p * nt + k) * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)];
        const double mu = mean(y);
        double m2 = 0, m3 = 0, m4 = 0;
        for (double v : y) {
            const double c = v - mu;
            m2 += c * c;
            m3 += c * c * c;
            m4 += c * c * c * c;
        }
        m2 /= static_cast<double>(n);
        m3 /= static_cast<double>(n);
        m4 /= static_cast<double>(n);
        const double skew = m3 / std::pow(m2, 1.5);
        const double exk = m4 / (m2 * m2) - 3.0;
        rep.variance[static_cast<std::size_t>(a)] = m2;
        rep.excess_kurtosis[static_cast<std::size_t>(a)] = exk;
        rep.kurtosis_se[static_cast<std::size_t>(a)] = std::sqrt(24.0 / static_cast<double>(n));
        rep.jarque_bera[static_cast<std::size_t>(a)] = static_cast<double>(n) / 6.0 * (skew * skew + 0.25 * exk * exk);
        for (int b = 0; b < d; ++b) {
            double s = 0.0;
            for (std::size_t p = 0; p < n; ++p)
                s += st.paths[(p * nt + k) * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] *
                     st.paths[(p * nt + k) * static_cast<std::size_t>(d) + static_cast<std::size_t>(b)];
            c2[static_cast<std::size_t>(a * d + b)] = eps * eps * s / static_cast<double>(n);
        }
    }
    double trace = 0.0, off = 0.0;
    for (int a = 0; a < d; ++a) trace += c2[static_cast<std::size_t>(a * d + a)];
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            if (a != b) off = std::max(off, std::fabs(c2[static_cast<std::size_t>(a * d + b)]));
    rep.offdiag_ratio = trace > 0 ? off / trace : 0.0;
    rep.kurtosis_ok = true;
    for (int a = 0; a < d; ++a)
        rep.kurtosis_ok = rep.kurtosis_ok && std::fabs(rep.excess_kurtosis[static_cast<std::size_t>(a)]) <
                                                 std::max(0.1, 3.0 * rep.kurtosis_se[static_cast<std::size_t>(a)]);
    rep.isotropy_ok = rep.offdiag_ratio < 0.05;
    return rep;
}

MomentBoundReport moment_bound_check(const EnsembleStats& st, double kappa, double theta, double fit_fraction) {
    if (kappa < 2.0) throw std::invalid_argument("moment envelope needs kappa >= 2");
    if (!(fit_fraction > 0.0 && fit_fraction <= 1.0)) throw std::invalid_argument("fit fraction must be in (0, 1]");
    MomentBoundReport rep;
    rep.kappa = kappa;
    rep.theta = theta;
    rep.times = st.times;
    const int d = st.dim;
    const std::size_t nt = st.times.size();
    auto env = [&](double t, int order) {
        return std::pow(t, 0.5 * order) * std::pow(std::log(std::max(t, kappa * kappa)), 0.5 * theta * (order + d));
    };
    const std::size_t nfit = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fit_fraction * static_cast<double>(nt))));
    std::vector<double> lim2(nt), lim4(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        const double t = st.times[k];
        rep.ratio2.push_back(st.msd[k] / env(t, 2));
        rep.ratio4.push_back(st.m4[k] / env(t, 4));
        rep.kurtosis_ratio.push_back(st.m4[k] / (st.msd[k] * st.msd[k]));
        lim2[k] = 3.0 * st.msd_se[k] / env(t, 2);
        lim4[k] = 3.0 * st.m4_se[k] / env(t, 4);
    }
    for (std::size_t k = 0; k < nfit; ++k) {
        rep.C2 = std::max(rep.C2, rep.ratio2[k]);
        rep.C4 = std::max(rep.C4, rep.ratio4[k]);
    }
    rep.envelope_ok = true;
    for (std::size_t k = nfit; k < nt; ++k)
        rep.envelope_ok = rep.envelope_ok && rep.ratio2[k] <= rep.C2 + lim2[k] && rep.ratio4[k] <= rep.C4 + lim4[k];
    rep.kurtosis_ok = std::all_of(rep.kurtosis_ratio.begin(), rep.kurtosis_ratio.end(), [](double r) { return r <= 5.0; });
    return rep;
}

double predicted_diffusivity(double T, double nu, double cstar, int L) {
    if (!(T > 0.0)) throw std::invalid_argument("time must be positive");
    const double m = std::clamp(std::log(std::sqrt(T)) / std::log(3.0), 0.0, static_cast<double>(L));
    return std::sqrt(2.0 * cstar * std::log(3.0) * m + nu * nu);
}

void check_cutoff_discipline(int L, double D, double T, bool allow_outrun) {
    const double reach = 10.0 * std::sqrt(D * T);
    if (std::pow(3.0, L) >= reach || allow_outrun) return;
    std::ostringstream msg;
    msg << "cutoff discipline violated: 3^L = " << std::pow(3.0, L) << " < 10 sqrt(D T) = " << reach
        << " (set allow_outrun to override)";
    throw std::invalid_argument(msg.str());
}

}  // namespace sdiff
