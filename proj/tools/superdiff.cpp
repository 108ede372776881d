// Command-line front end: synth, cell, rgflow, sim, exit, report, pipeline.
//
// Exit codes: 0 success (all evaluated criteria pass), 1 a criterion
// failed, 2 usage or runtime error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "superdiff/coarse.hpp"
#include "superdiff/config.hpp"
#include "superdiff/csv.hpp"
#include "superdiff/pipeline.hpp"
#include "superdiff/report.hpp"
#include "superdiff/rgflow.hpp"
#include "superdiff/sdf_io.hpp"
#include "superdiff/sim.hpp"
#include "superdiff/spectrum.hpp"

namespace {

using namespace sdiff;

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

/// Stamp for commands run without a config file: the hash covers the
/// command line and the input field's digest.
Stamp invocation_stamp(const std::string& canonical, std::uint64_t seed, int dim) {
    Stamp s;
    s.config_hash = sha256_hex(canonical);
    s.seed = seed;
    s.extra["dim"] = std::to_string(dim);
    return s;
}

struct SimArgs {
    std::string field, config, out = "msd.csv", dt = "auto", record = "geometric";
    std::size_t particles = 1000;
    double tmax = 1000.0, nu = 1.0, record_ratio = 3.1622776601683795;
    int annealed = 1;
    std::uint64_t seed = 2;
    bool allow_outrun = false;
    std::vector<double> radii;
};

void add_sim_options(CLI::App* app, SimArgs& a) {
    app->add_option("--field", a.field, "Field file (.sdf)");
    app->add_option("--config", a.config, "Experiment config (supplies the field law for annealed runs)");
    app->add_option("--particles", a.particles, "Number of particles");
    app->add_option("--tmax", a.tmax, "Time horizon");
    app->add_option("--dt", a.dt, "Time step or 'auto'");
    app->add_option("--nu", a.nu, "Molecular diffusivity");
    app->add_option("--seed", a.seed, "Simulation seed");
    app->add_flag("--allow-outrun", a.allow_outrun, "Skip the cutoff-discipline check");
}

struct SimSetup {
    SimConfig sc;
    int dim = 2;
    int L = 0;
    std::string canonical;
    std::optional<ExperimentConfig> cfg;
    std::shared_ptr<const StreamField> field;
};

SimSetup prepare_sim(const SimArgs& a) {
    SimSetup s;
    if (a.field.empty() && a.config.empty()) throw CLI::ValidationError("--field", "needs --field or --config");
    if (a.record != "geometric") throw CLI::ValidationError("--record", "only 'geometric' is supported");
    if (!a.config.empty()) s.cfg = load_config(a.config);
    if (!a.field.empty()) {
        const SdfFile sdf = read_sdf(a.field);
        const double nu = s.cfg ? s.cfg->field.nu : a.nu;
        s.field = std::make_shared<const StreamField>(field_from_sdf(sdf, nu));
    } else {
        const RadialSpectrum spec(s.cfg->field.profile, s.cfg->field.dim);
        s.field = std::make_shared<const StreamField>(StreamField::synthesize(s.cfg->field, spec, 0));
    }
    s.dim = s.field->dim();
    s.L = s.field->L();
    s.sc.particles = a.particles;
    s.sc.tmax = a.tmax;
    s.sc.dt = a.dt == "auto" ? 0.0 : std::stod(a.dt);
    s.sc.nu = s.field->nu();
    s.sc.seed = a.seed;
    s.sc.record_ratio = a.record_ratio;
    s.sc.length_scale = std::pow(3.0, s.field->n_min());
    s.sc.exit_radii = a.radii;
    std::ostringstream c;
    c << "field=" << (a.field.empty() ? std::string("-") : file_digest(a.field))
      << " config=" << (s.cfg ? config_hash(*s.cfg) : std::string("-")) << " particles=" << a.particles
      << " tmax=" << format_number(a.tmax) << " dt=" << a.dt << " nu=" << format_number(s.sc.nu)
      << " annealed=" << a.annealed << " seed=" << a.seed;
    for (double r : a.radii) c << " radius=" << format_number(r);
    s.canonical = c.str();
    return s;
}

EnsembleStats run_sim(SimSetup& s, int annealed, bool allow_outrun) {
    check_cutoff_discipline(s.L, predicted_diffusivity(s.sc.tmax, s.sc.nu, cstar_closed_form(s.dim), s.L), s.sc.tmax,
                            allow_outrun);
    EnsembleStats st;
    if (annealed <= 1) {
        st = run_ensemble(*make_field_drift(s.field), s.sc);
    } else {
        if (!s.cfg) throw CLI::ValidationError("--annealed", "annealed runs need --config to synthesize replicas");
        const RadialSpectrum spec(s.cfg->field.profile, s.cfg->field.dim);
        st = run_annealed(
            [&](std::uint64_t r) {
                auto f = r == 0 ? s.field
                                : std::make_shared<const StreamField>(StreamField::synthesize(s.cfg->field, spec, r));
                return make_field_drift(std::move(f));
            },
            annealed, s.sc);
    }
    if (st.aborted > 0) std::cerr << "warning: " << st.aborted << " trajectories aborted (non-finite state)\n";
    if (st.particles == 0) throw std::runtime_error("every trajectory aborted; reduce dt");
    check_cutoff_discipline(s.L, st.msd.back() / (2.0 * s.dim * st.times.back()), st.times.back(), allow_outrun);
    return st;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"superdiff: log-correlated drift fields, cell problems, RG flow and tracer simulation"};
    app.require_subcommand(1);

    // synth
    std::string synth_config, synth_out = "field.sdf";
    std::optional<std::uint64_t> synth_seed;
    std::uint64_t synth_replica = 0;
    bool synth_no_bands = false;
    auto* synth = app.add_subcommand("synth", "Synthesize a field and write an SDF1 file");
    synth->add_option("--config", synth_config, "Experiment config")->required();
    synth->add_option("--out", synth_out, "Output field file");
    synth->add_option("--seed", synth_seed, "Override the master seed");
    synth->add_option("--replica", synth_replica, "Replica index");
    synth->add_flag("--no-bands", synth_no_bands, "Store only the cumulative field");

    // cell
    std::string cell_field, cell_out = "cells.csv", cell_bc = "dirichlet", cell_solver = "cholesky";
    int cell_cube = 3, cell_samples = 1;
    double cell_tol = 1e-8, cell_cpu = 2.0, cell_nu = 1.0;
    std::uint64_t cell_seed = 0;
    auto* cell = app.add_subcommand("cell", "Solve cell problems on triadic cubes of a stored field");
    cell->add_option("--field", cell_field, "Field file (.sdf)")->required();
    cell->add_option("--cube", cell_cube, "Cube exponent m (side 3^m)");
    cell->add_option("--samples", cell_samples, "Number of cubes, translated by 3^m along x1");
    cell->add_option("--bc", cell_bc, "dirichlet|periodic");
    cell->add_option("--solver", cell_solver, "cholesky|cg");
    cell->add_option("--tol", cell_tol, "Relative residual tolerance");
    cell->add_option("--cells-per-unit", cell_cpu, "Mesh resolution");
    cell->add_option("--nu", cell_nu, "Molecular diffusivity");
    cell->add_option("--seed", cell_seed, "Seed recorded in the stamp");
    cell->add_option("--out", cell_out, "Output CSV");

    // rgflow
    std::string flow_cstar = "closed-form:2", flow_out = "flow.csv";
    double flow_s0 = 1.0;
    int flow_from = 0, flow_to = 100;
    std::uint64_t flow_seed = 0;
    auto* rg = app.add_subcommand("rgflow", "Iterate the renormalization recurrence");
    rg->add_option("--cstar", flow_cstar, "Value or closed-form:<d>");
    rg->add_option("--s0", flow_s0, "Initial diffusivity");
    rg->add_option("--from", flow_from, "First scale index");
    rg->add_option("--to", flow_to, "Last scale index");
    rg->add_option("--seed", flow_seed, "Seed recorded in the stamp");
    rg->add_option("--out", flow_out, "Output CSV");

    // sim
    SimArgs sim_args;
    auto* sim = app.add_subcommand("sim", "Monte Carlo tracer ensemble; writes MSD and D(t)");
    add_sim_options(sim, sim_args);
    sim->add_option("--record", sim_args.record, "Recording grid (geometric, ratio sqrt(10))");
    sim->add_option("--annealed", sim_args.annealed, "Number of field replicas");
    sim->add_option("--out", sim_args.out, "Output CSV");

    // exit
    SimArgs exit_args;
    exit_args.out = "exit.csv";
    double exit_radius = 0.0;
    auto* ex = app.add_subcommand("exit", "Empirical exit-time distribution from a ball");
    add_sim_options(ex, exit_args);
    ex->add_option("--radius", exit_radius, "Ball radius")->required();
    ex->add_option("--out", exit_args.out, "Output CSV");

    // report
    std::string report_in = ".", report_out;
    bool report_no_plots = false;
    auto* rep = app.add_subcommand("report", "Markdown report over a directory of artifacts");
    rep->add_option("--in", report_in, "Directory with CSV artifacts");
    rep->add_option("--out", report_out, "Output directory (defaults to --in)");
    rep->add_flag("--no-plots", report_no_plots, "Tables only");

    // pipeline
    std::string pipe_config, pipe_out;
    std::optional<std::uint64_t> pipe_seed;
    auto* pipe = app.add_subcommand("pipeline", "Run every stage and emit the report");
    pipe->add_option("--config", pipe_config, "Experiment config")->required();
    pipe->add_option("--out", pipe_out, "Override output_dir");
    pipe->add_option("--seed", pipe_seed, "Override the master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*synth) {
            ExperimentConfig cfg = load_config(synth_config);
            if (synth_seed) cfg.seed = cfg.field.seed = *synth_seed;
            const RadialSpectrum spec(cfg.field.profile, cfg.field.dim);
            const StreamField f = StreamField::synthesize(cfg.field, spec, synth_replica);
            write_sdf(synth_out, make_sdf(f, !synth_no_bands && cfg.include_bands, cfg.sdf_max_side));
            std::cout << "wrote " << synth_out << " (d=" << f.dim() << ", bands " << f.n_min() << ".." << f.L()
                      << ", config_hash=" << config_hash(cfg) << ")\n";
            return 0;
        }
        if (*cell) {
            const SdfFile sdf = read_sdf(cell_field);
            const StreamField f = field_from_sdf(sdf, cell_nu);
            const FieldView view(f);
            CellOptions opts;
            opts.boundary = parse_cell_boundary(cell_bc);
            opts.solver = parse_cell_solver(cell_solver);
            opts.tol = cell_tol;
            if (cell_samples < 1) throw CLI::ValidationError("--samples", "must be at least 1");
            std::vector<CellRecord> recs;
            const double side = std::pow(3.0, cell_cube);
            for (int i = 0; i < cell_samples; ++i) {
                CellRecord r;
                r.sample_id = i;
                r.m = cell_cube;
                r.cm = coarse_A(view, cell_nu, triadic_cube(cell_cube, cell_cpu, i * side, 0.0), opts);
                recs.push_back(std::move(r));
            }
            std::ostringstream c;
            c << "cell field=" << file_digest(cell_field) << " cube=" << cell_cube << " samples=" << cell_samples
              << " bc=" << cell_bc << " solver=" << cell_solver << " tol=" << format_number(cell_tol)
              << " cpu=" << format_number(cell_cpu) << " nu=" << format_number(cell_nu);
            write_csv(cell_out, cells_table(recs, invocation_stamp(c.str(), cell_seed ? cell_seed : sdf.seed, 2)));
            std::cout << "wrote " << cell_out << '\n';
            return 0;
        }
        if (*rg) {
            if (flow_to < flow_from) throw CLI::ValidationError("--to", "must be >= --from");
            const double cs = parse_cstar(flow_cstar);
            const auto series = flow(flow_s0, flow_from, flow_to - flow_from, cs);
            std::ostringstream c;
            c << "rgflow cstar=" << flow_cstar << " s0=" << format_number(flow_s0) << " from=" << flow_from
              << " to=" << flow_to;
            const int dim = flow_cstar == "closed-form:3" ? 3 : 2;
            write_csv(flow_out, flow_table(series, flow_s0, invocation_stamp(c.str(), flow_seed, dim)));
            const double dev = envelope_deviation(series, flow_s0);
            std::cout << "wrote " << flow_out << " (envelope deviation " << dev << ")\n";
            return 0;
        }
        if (*sim) {
            SimSetup s = prepare_sim(sim_args);
            const EnsembleStats st = run_sim(s, sim_args.annealed, sim_args.allow_outrun);
            const Stamp stamp = s.cfg ? make_stamp(*s.cfg, sim_args.seed, s.dim)
                                      : invocation_stamp("sim " + s.canonical, sim_args.seed, s.dim);
            write_csv(sim_args.out, msd_table(st, stamp));
            std::cout << "wrote " << sim_args.out << " (dt " << st.dt << ", " << st.particles << " particles)\n";
            return 0;
        }
        if (*ex) {
            exit_args.radii = {exit_radius};
            SimSetup s = prepare_sim(exit_args);
            const EnsembleStats st = run_sim(s, 1, exit_args.allow_outrun);
            const Stamp stamp = s.cfg ? make_stamp(*s.cfg, exit_args.seed, s.dim)
                                      : invocation_stamp("exit " + s.canonical, exit_args.seed, s.dim);
            write_csv(exit_args.out, exit_table(exit_time_experiment(st, exit_radius), exit_radius, stamp));
            std::cout << "wrote " << exit_args.out << '\n';
            return 0;
        }
        if (*rep) {
            ReportOptions ro;
            ro.write_plots = !report_no_plots;
            const Report r = emit_report(report_in, report_out.empty() ? report_in : report_out, ro);
            for (const auto& c : r.criteria)
                std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.measured << " (target " << c.target << ")\n";
            std::cout << r.criteria.size() << " criteria evaluated\n";
            return r.all_pass() ? 0 : 1;
        }
        if (*pipe) {
            ExperimentConfig cfg = load_config(pipe_config);
            if (!pipe_out.empty()) cfg.output_dir = pipe_out;
            if (pipe_seed) cfg.seed = cfg.field.seed = *pipe_seed;
            std::cerr << "config_hash=" << config_hash(cfg) << '\n' << effective_config_json(cfg) << '\n';
            const PipelineResult r = run_pipeline(cfg, &std::cerr);
            for (const auto& c : r.report.criteria)
                std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.measured << " (target " << c.target << ")\n";
            std::cout << "artifacts in " << r.output_dir << '\n';
            return r.report.all_pass() ? 0 : 1;
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
