#include "superdiff/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "superdiff/parallel.hpp"
#include "superdiff/sdf_io.hpp"
#include "superdiff/spectrum.hpp"

namespace sdiff {
namespace fs = std::filesystem;

namespace {

std::string file_sha256(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

template <class F>
auto stage(const std::string& name, std::ostream* log, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    if (log) *log << "[" << name << "] start" << std::endl;
    try {
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            if (log)
                *log << "[" << name << "] done in "
                     << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s" << std::endl;
        } else {
            auto r = body();
            if (log)
                *log << "[" << name << "] done in "
                     << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s" << std::endl;
            return r;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace

Stamp make_stamp(const ExperimentConfig& cfg, std::uint64_t seed, int dim) {
    Stamp s;
    s.config_hash = config_hash(cfg);
    s.seed = seed;
    s.extra["dim"] = std::to_string(dim);
    return s;
}

CsvTable cells_table(const std::vector<CellRecord>& records, const Stamp& stamp) {
    CsvTable t;
    t.stamp = stamp;
    t.has_stamp = true;
    t.columns = columns::cells;
    for (const auto& r : records) {
        const auto& c = r.cm;
        t.rows.push_back({static_cast<double>(r.sample_id), static_cast<double>(r.m), c.s(0, 0), c.s(0, 1), c.s(1, 1),
                          c.sstar(0, 0), c.sstar(0, 1), c.sstar(1, 1), c.k(0, 1), c.residual});
    }
    return t;
}

CsvTable flow_table(const std::vector<RGState>& series, double s0, const Stamp& stamp) {
    CsvTable t;
    t.stamp = stamp;
    t.has_stamp = true;
    t.columns = columns::flow;
    if (series.empty()) return t;
    const int n0 = series.front().n;
    for (const auto& st : series) {
        const double env = envelope(st.n, n0, s0, st.cstar);
        t.rows.push_back({static_cast<double>(st.n), st.sbar, env, st.sbar / env});
    }
    return t;
}

CsvTable msd_table(const EnsembleStats& stats, const Stamp& stamp) {
    CsvTable t;
    t.stamp = stamp;
    t.has_stamp = true;
    t.stamp.extra["particles"] = std::to_string(stats.particles);
    t.stamp.extra["aborted"] = std::to_string(stats.aborted);
    t.stamp.extra["dt"] = format_number(stats.dt);
    t.columns = columns::msd;
    for (const auto& r : msd_diffusivity(stats)) t.rows.push_back({r.t, r.msd, r.msd_se, r.m4, r.D, r.D_lo, r.D_hi});
    return t;
}

CsvTable exit_table(const std::vector<ExitRow>& rows, double radius, const Stamp& stamp) {
    CsvTable t;
    t.stamp = stamp;
    t.has_stamp = true;
    t.stamp.extra["radius"] = format_number(radius);
    t.columns = columns::exit;
    for (const auto& r : rows) t.rows.push_back({r.t, r.p_exit, r.lo, r.hi});
    return t;
}

CsvTable cstar_table(const CstarEstimate& est, int l, int m, int dim, const Stamp& stamp) {
    CsvTable t;
    t.stamp = stamp;
    t.has_stamp = true;
    t.columns = columns::cstar;
    const double lo = est.ci ? est.ci->lo : est.value - 1.959963984540054 * est.standard_error;
    const double hi = est.ci ? est.ci->hi : est.value + 1.959963984540054 * est.standard_error;
    t.rows.push_back({static_cast<double>(l), static_cast<double>(m), static_cast<double>(est.samples), est.value,
                      est.standard_error, lo, hi, cstar_closed_form(dim)});
    return t;
}

CsvTable moments_table(const MomentBoundReport& rep, const Stamp& stamp) {
    CsvTable t;
    t.stamp = stamp;
    t.has_stamp = true;
    t.stamp.extra["C2"] = format_number(rep.C2);
    t.stamp.extra["C4"] = format_number(rep.C4);
    t.stamp.extra["kappa"] = format_number(rep.kappa);
    t.stamp.extra["theta"] = format_number(rep.theta);
    t.stamp.extra["envelope_ok"] = rep.envelope_ok ? "1" : "0";
    t.columns = columns::moments;
    for (std::size_t k = 0; k < rep.times.size(); ++k)
        t.rows.push_back({rep.times[k], rep.ratio2[k], rep.ratio4[k], rep.kurtosis_ratio[k]});
    return t;
}

double resolve_cstar(const std::string& spec, int dim, const double* estimate) {
    if (spec == "closed-form") return cstar_closed_form(dim);
    if (spec == "estimated") {
        if (!estimate) throw std::invalid_argument("c* = \"estimated\" needs the c* stage");
        return *estimate;
    }
    return parse_cstar(spec);
}

SimConfig sim_config(const ExperimentConfig& cfg) {
    SimConfig s;
    s.particles = cfg.sim.particles;
    s.tmax = cfg.sim.tmax;
    s.dt = cfg.sim.dt;
    s.length_scale = std::pow(3.0, cfg.field.n_min);
    s.nu = cfg.field.nu;
    s.seed = cfg.sim_seed;
    s.record_start = cfg.sim.record_start;
    s.record_ratio = cfg.sim.record_ratio;
    s.block_size = cfg.sim.block_size;
    s.exit_radii = cfg.sim.exit_radii;
    return s;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, std::ostream* log) {
    try {
        validate_config(cfg, true);
    } catch (const std::exception& e) {
        throw StageError("config", e.what());
    }
    PipelineResult res;
    res.output_dir = cfg.output_dir;
    res.config_hash = config_hash(cfg);
    const fs::path out(cfg.output_dir);
    const int d = cfg.field.dim;
    const Stamp stamp = make_stamp(cfg, cfg.seed, d);
    const Stamp sim_stamp = make_stamp(cfg, cfg.sim_seed, d);
    auto emit = [&](const std::string& name, const CsvTable& t) {
        write_csv((out / name).string(), t);
        res.artifacts.push_back(name);
    };

    {
        std::ofstream f(out / "config.json", std::ios::binary);
        f << effective_config_json(cfg) << '\n';
        res.artifacts.push_back("config.json");
    }

    const RadialSpectrum spec = stage("spectrum", log, [&] { return RadialSpectrum(cfg.field.profile, d); });

    auto field0 = stage("synth", log, [&] {
        auto f = std::make_shared<const StreamField>(StreamField::synthesize(cfg.field, spec, 0));
        write_sdf((out / "field.sdf").string(), make_sdf(*f, cfg.include_bands, cfg.sdf_max_side));
        res.artifacts.push_back("field.sdf");
        return f;
    });

    std::optional<double> cstar_est;
    if (cfg.cstar.enabled) {
        stage("cstar", log, [&] {
            const int l = cfg.cstar.l.value_or(cfg.field.n_min), m = cfg.cstar.m.value_or(cfg.field.L);
            std::vector<double> e(static_cast<std::size_t>(d), 0.0);
            e[0] = 1.0;
            const CstarEstimate est = estimate_cstar(cfg.field, spec, cfg.cstar.samples, l, m, e);
            cstar_est = est.value;
            emit("cstar.csv", cstar_table(est, l, m, d, stamp));
        });
    }

    if (cfg.cell.samples > 0) {
        stage("cell", log, [&] {
            const std::vector<int> scales = cell_scales(cfg);
            const auto S = static_cast<std::size_t>(cfg.cell.samples);
            std::vector<std::vector<CellRecord>> per(S);
            CellOptions opts;
            opts.boundary = cfg.cell.boundary;
            opts.solver = cfg.cell.solver;
            opts.tol = cfg.cell.tol;
            parallel_for(S, [&](std::size_t r) {
                std::shared_ptr<const StreamField> f =
                    r == 0 ? field0 : std::make_shared<const StreamField>(StreamField::synthesize(cfg.field, spec, r));
                const FieldView view(*f);
                for (int m : scales) {
                    CellRecord rec;
                    rec.sample_id = static_cast<int>(r);
                    rec.m = m;
                    rec.cm = coarse_A(view, cfg.field.nu, triadic_cube(m, cfg.cell.cells_per_unit), opts);
                    per[r].push_back(std::move(rec));
                }
            });
            std::vector<CellRecord> all;
            for (int m : scales)
                for (const auto& v : per)
                    for (const auto& rec : v)
                        if (rec.m == m) all.push_back(rec);
            emit("cells.csv", cells_table(all, stamp));
        });
    }

    stage("rgflow", log, [&] {
        const double cs = resolve_cstar(cfg.flow.cstar, d, cstar_est ? &*cstar_est : nullptr);
        const double s0 = cfg.flow.s0.value_or(cfg.field.nu);
        const auto series = flow(s0, cfg.flow.from, cfg.flow.to - cfg.flow.from, cs);
        emit("flow.csv", flow_table(series, s0, stamp));
    });

    stage("sim", log, [&] {
        const SimConfig sc = sim_config(cfg);
        const double cs = cstar_closed_form(d);
        check_cutoff_discipline(cfg.field.L, predicted_diffusivity(sc.tmax, sc.nu, cs, cfg.field.L), sc.tmax,
                                cfg.sim.allow_outrun);
        EnsembleStats st;
        if (cfg.sim.annealed == 1) {
            st = run_ensemble(*make_field_drift(field0), sc);
        } else {
            st = run_annealed(
                [&](std::uint64_t r) {
                    auto f = r == 0 ? field0
                                    : std::make_shared<const StreamField>(StreamField::synthesize(cfg.field, spec, r));
                    return make_field_drift(std::move(f));
                },
                cfg.sim.annealed, sc);
        }
        if (st.particles == 0) throw std::runtime_error("every trajectory aborted (step too large?)");
        const double DT = st.msd.back() / (2.0 * d * st.times.back());
        check_cutoff_discipline(cfg.field.L, DT, st.times.back(), cfg.sim.allow_outrun);
        emit("msd.csv", msd_table(st, sim_stamp));
        for (std::size_t i = 0; i < sc.exit_radii.size(); ++i) {
            const std::string name = i == 0 ? "exit.csv" : "exit_" + std::to_string(i + 1) + ".csv";
            emit(name, exit_table(exit_time_experiment(st, sc.exit_radii[i]), sc.exit_radii[i], sim_stamp));
        }
        emit("moments.csv", moments_table(moment_bound_check(st), sim_stamp));
    });

    res.report = stage("report", log, [&] { return emit_report(cfg.output_dir, cfg.output_dir); });
    res.artifacts.push_back("report.md");
    for (const auto& p : res.report.plots) res.artifacts.push_back(p);

    nlohmann::json manifest;
    manifest["config_hash"] = res.config_hash;
    manifest["seed"] = cfg.seed;
    manifest["sim_seed"] = cfg.sim_seed;
    for (const auto& a : res.artifacts) manifest["artifacts"][a] = file_sha256(out / a);
    std::ofstream mf(out / "manifest.json", std::ios::binary);
    mf << manifest.dump(2) << '\n';
    return res;
}

}  // namespace sdiff
