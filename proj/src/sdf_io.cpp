#include "superdiff/sdf_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "superdiff/parallel.hpp"

namespace sdiff {
namespace {

static_assert(std::endian::native == std::endian::little, "SDF I/O assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'D', 'F', '1'};
constexpr std::uint16_t kVersion = 1;

template <class T>
void put(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("truncated SDF file");
    return v;
}

void put_array(std::ofstream& os, const std::vector<double>& a) {
    os.write(reinterpret_cast<const char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(double)));
}

std::vector<double> get_array(std::ifstream& is, std::size_t n) {
    std::vector<double> a(n);
    is.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("truncated SDF file");
    return a;
}

std::size_t grid_size(int dim, std::uint64_t side) {
    if (side == 0 || side > (1u << 24)) throw std::runtime_error("SDF grid side out of range");
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= side;
    return n;
}

}  // namespace

std::size_t default_cumulative_side(int dim) { return dim == 2 ? 512 : 64; }

SdfFile make_sdf(const StreamField& field, bool include_bands, std::size_t max_side) {
    if (max_side == 0) max_side = default_cumulative_side(field.dim());
    SdfFile f;
    f.dim = field.dim();
    f.n_min = field.n_min();
    f.L = field.L();
    f.nu = field.nu();
    f.seed = field.seed();
    const BandGrid& low = field.levels().front().grid;
    f.cumulative_grid.dim = f.dim;
    f.cumulative_grid.spacing = low.spacing;
    f.cumulative_grid.cells = std::min<std::size_t>(max_side, field.levels().back().grid.cells *
                                                                  static_cast<std::size_t>(std::llround(field.levels().back().grid.spacing / low.spacing)));
    const std::size_t side = f.cumulative_grid.cells, total = f.cumulative_grid.size();
    const int ncomp = field.components();
    f.cumulative.assign(static_cast<std::size_t>(ncomp), std::vector<double>(total));
    const FieldView view(field);
    parallel_for(side, [&](std::size_t i0) {
        const std::size_t inner = total / side;
        for (std::size_t r = 0; r < inner; ++r) {
            const std::size_t flat = i0 * inner + r;
            double x[3] = {0, 0, 0};
            std::size_t rem = flat;
            for (int a = f.dim - 1; a >= 0; --a) {
                x[a] = static_cast<double>(rem % side) * low.spacing;
                rem /= side;
            }
            StreamSample s;
            view.sample(x, 0, s);
            for (int c = 0; c < ncomp; ++c) f.cumulative[static_cast<std::size_t>(c)][flat] = s.comp[c].value;
        }
    });
    if (include_bands) {
        for (const auto& lv : field.levels()) {
            StreamField::Level copy;
            copy.n = lv.n;
            copy.grid = lv.grid;
            copy.values = lv.values;
            f.bands.push_back(std::move(copy));
        }
    }
    return f;
}

void write_sdf(const std::string& path, const SdfFile& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os.write(kMagic, 4);
    put<std::uint16_t>(os, kVersion);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(f.dim));
    put<std::int32_t>(os, f.n_min);
    put<std::int32_t>(os, f.L);
    put<std::uint64_t>(os, f.cumulative_grid.cells);
    put<double>(os, f.cumulative_grid.spacing);
    put<std::uint64_t>(os, f.seed);
    put<std::uint16_t>(os, static_cast<std::uint16_t>(f.cumulative.size()));
    put<std::uint8_t>(os, f.bands.empty() ? 0 : 1);
    for (const auto& c : f.cumulative) put_array(os, c);
    for (const auto& b : f.bands) {
        put<std::int32_t>(os, b.n);
        put<std::uint64_t>(os, b.grid.cells);
        put<double>(os, b.grid.spacing);
        for (const auto& c : b.values) put_array(os, c);
    }
    if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

SdfFile read_sdf(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open field file '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("'" + path + "' is not an SDF1 file");
    const auto version = get<std::uint16_t>(is);
    if (version != kVersion) throw std::runtime_error("unsupported SDF version " + std::to_string(version));
    SdfFile f;
    f.dim = get<std::uint8_t>(is);
    if (f.dim != 2 && f.dim != 3) throw std::runtime_error("SDF dimension must be 2 or 3");
    f.n_min = get<std::int32_t>(is);
    f.L = get<std::int32_t>(is);
    if (f.L < f.n_min) throw std::runtime_error("SDF header has L < n_min");
    f.cumulative_grid.dim = f.dim;
    f.cumulative_grid.cells = get<std::uint64_t>(is);
    f.cumulative_grid.spacing = get<double>(is);
    f.seed = get<std::uint64_t>(is);
    const auto ncomp = get<std::uint16_t>(is);
    if (ncomp != component_count(f.dim)) throw std::runtime_error("SDF component count does not match d(d-1)/2");
    const bool has_bands = get<std::uint8_t>(is) != 0;
    const std::size_t total = grid_size(f.dim, f.cumulative_grid.cells);
    for (int c = 0; c < ncomp; ++c) f.cumulative.push_back(get_array(is, total));
    if (has_bands) {
        for (int n = f.n_min; n <= f.L; ++n) {
            StreamField::Level lv;
            lv.n = get<std::int32_t>(is);
            if (lv.n != n) throw std::runtime_error("SDF band records out of order");
            lv.grid.dim = f.dim;
            lv.grid.cells = get<std::uint64_t>(is);
            lv.grid.spacing = get<double>(is);
            const std::size_t bt = grid_size(f.dim, lv.grid.cells);
            for (int c = 0; c < ncomp; ++c) lv.values.push_back(get_array(is, bt));
            f.bands.push_back(std::move(lv));
        }
    }
    is.peek();
    if (!is.eof()) throw std::runtime_error("trailing bytes in SDF file");
    return f;
}

StreamField field_from_sdf(const SdfFile& f, double nu) {
    std::vector<StreamField::Level> levels = f.bands;
    if (levels.empty()) {
        StreamField::Level lv;
        lv.n = f.L;
        lv.grid = f.cumulative_grid;
        lv.values = f.cumulative;
        levels.push_back(std::move(lv));
    }
    return StreamField(f.dim, nu, f.seed, std::move(levels));
}

}  // namespace sdiff
