/// End-to-end experiment: synthesis, c* estimate, cell solves, RG flow,
/// simulation and report, every artifact stamped with the config hash.
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "superdiff/coarse.hpp"
#include "superdiff/config.hpp"
#include "superdiff/csv.hpp"
#include "superdiff/cstar.hpp"
#include "superdiff/report.hpp"
#include "superdiff/rgflow.hpp"
#include "superdiff/sim.hpp"

namespace sdiff {

/// A stage failure; partial artifacts of earlier stages stay on disk.
struct StageError : std::runtime_error {
    StageError(std::string stage, const std::string& what)
        : std::runtime_error("stage '" + stage + "' failed: " + what), stage(std::move(stage)) {}
    std::string stage;
};

struct CellRecord {
    int sample_id = 0;
    int m = 0;
    CoarseMatrices cm;
};

Stamp make_stamp(const ExperimentConfig& cfg, std::uint64_t seed, int dim);

CsvTable cells_table(const std::vector<CellRecord>& records, const Stamp& stamp);
/// Rows n, s_bar, envelope sqrt(2 c* log 3 (n - n0) + s0^2) and their ratio.
CsvTable flow_table(const std::vector<RGState>& series, double s0, const Stamp& stamp);
CsvTable msd_table(const EnsembleStats& stats, const Stamp& stamp);
CsvTable exit_table(const std::vector<ExitRow>& rows, double radius, const Stamp& stamp);
CsvTable cstar_table(const CstarEstimate& est, int l, int m, int dim, const Stamp& stamp);
CsvTable moments_table(const MomentBoundReport& rep, const Stamp& stamp);

/// Resolves flow.cstar: "closed-form", "closed-form:<d>", a number, or
/// "estimated" (requires `estimate`).
double resolve_cstar(const std::string& spec, int dim, const double* estimate);

/// Simulation configuration derived from an experiment config.
SimConfig sim_config(const ExperimentConfig& cfg);

struct PipelineResult {
    std::string output_dir;
    std::string config_hash;
    std::vector<std::string> artifacts;
    Report report;
};

/// Runs every stage. Progress lines go to `log` when non-null.
PipelineResult run_pipeline(const ExperimentConfig& cfg, std::ostream* log = nullptr);

}  // namespace sdiff
