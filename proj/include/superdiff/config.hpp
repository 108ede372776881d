/// Experiment configuration: strict JSON loading, validation and hashing.
///
/// Every key is optional; absent keys keep their defaults. Unknown keys
/// are rejected with their full path (for example `sim.partcles`).
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "superdiff/coarse.hpp"
#include "superdiff/field.hpp"

namespace sdiff {

struct CstarStageConfig {
    bool enabled = true;
    /// Bands l+1..m enter the estimator; unset values select n_min and L.
    std::optional<int> l, m;
    int samples = 16;
};

struct CellStageConfig {
    /// Cube exponents; unset selects the single scale L+2.
    std::vector<int> scales;
    int samples = 8;
    double cells_per_unit = 2.0;
    CellBoundary boundary = CellBoundary::Dirichlet;
    CellSolver solver = CellSolver::Cholesky;
    double tol = 1e-8;
};

struct FlowStageConfig {
    /// "closed-form", "estimated" (from the c* stage) or a number.
    std::string cstar = "closed-form";
    /// Initial diffusivity; unset selects nu.
    std::optional<double> s0;
    int from = 0;
    int to = 100;
};

struct SimStageConfig {
    std::size_t particles = 1000;
    double tmax = 1000.0;
    /// 0 selects the automatic step.
    double dt = 0.0;
    int annealed = 1;
    double record_start = 1.0;
    double record_ratio = 3.1622776601683795;
    std::size_t block_size = 256;
    std::vector<double> exit_radii;
    bool allow_outrun = false;
};

struct ExperimentConfig {
    FieldParams field;
    std::string profile = "smoothstep-exp";
    double profile_steepness = 1.0;
    std::uint64_t seed = 1;
    std::uint64_t sim_seed = 2;
    bool include_bands = true;
    std::size_t sdf_max_side = 0;  // 0: default cap
    CstarStageConfig cstar;
    CellStageConfig cell;
    FlowStageConfig flow;
    SimStageConfig sim;
    std::string output_dir = "superdiff-out";
};

/// Parses a JSON document. Throws ConfigError on schema or invariant violations.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Checks cross-field invariants (K >= L+2, resolution, cube alignment...).
/// With `check_paths`, also creates the output directory and probes that it is writable.
void validate_config(const ExperimentConfig& cfg, bool check_paths = false);

/// Canonical JSON of the effective configuration (all keys, sorted).
std::string effective_config_json(const ExperimentConfig& cfg);

/// Lower-case hex SHA-256 of effective_config_json.
std::string config_hash(const ExperimentConfig& cfg);

std::string sha256_hex(const std::string& data);

/// Cube exponents actually used by the cell stage.
std::vector<int> cell_scales(const ExperimentConfig& cfg);

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sdiff
