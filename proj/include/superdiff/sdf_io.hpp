/// Binary field files ("SDF1", little-endian, row-major).
///
/// Header: magic "SDF1", version u16, d u8, n_min i32, L i32, cumulative
/// grid side u64, cumulative spacing f64, master seed u64, component count
/// u16, band flag u8. Payload: per component the cumulative k_L node values
/// on the header grid (anchored at the origin), then, when the flag is set,
/// one record per band: n i32, side u64, spacing f64, per-component values.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "superdiff/field.hpp"

namespace sdiff {

struct SdfFile {
    int dim = 2;
    int n_min = 0;
    int L = 0;
    double nu = 1.0;  // not stored; supplied by the caller on read
    std::uint64_t seed = 0;
    BandGrid cumulative_grid;
    std::vector<std::vector<double>> cumulative;  // per component
    std::vector<StreamField::Level> bands;        // empty when the flag is clear
};

/// Default cap on cumulative grid nodes per axis.
std::size_t default_cumulative_side(int dim);

/// Samples k_L of `field` on a grid with the lowest band's spacing and up
/// to `max_side` nodes per axis.
SdfFile make_sdf(const StreamField& field, bool include_bands, std::size_t max_side = 0);

void write_sdf(const std::string& path, const SdfFile& file);
SdfFile read_sdf(const std::string& path);

/// Rebuilds a StreamField from the stored bands, or, when none were stored,
/// from the cumulative grid treated as a single periodic band.
StreamField field_from_sdf(const SdfFile& file, double nu);

}  // namespace sdiff
