#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "superdiff/field.hpp"
#include "superdiff/parallel.hpp"
#include "superdiff/philox.hpp"
#include "superdiff/sdf_io.hpp"
#include "superdiff/stats.hpp"

using namespace sdiff;

namespace {

const RadialSpectrum& spectrum2() {
    static const RadialSpectrum s(make_bump_profile(ProfileKind::SmoothstepExp, 1.0), 2);
    return s;
}

/// Expected mean-removed variance of a band on its torus: lattice sum of
/// the spectrum over the non-zero modes the grid represents.
double lattice_variance(const BandGrid& g, const SpectrumFn& S) {
    const long N = static_cast<long>(g.cells);
    const double T = g.period(), ks = 2.0 * std::numbers::pi / T;
    double sum = 0.0;
    for (long i = -N / 2 + 1; i <= N / 2; ++i)
        for (long j = -N / 2 + 1; j <= N / 2; ++j) {
            if (i == 0 && j == 0) continue;
            sum += S(ks * std::sqrt(static_cast<double>(i * i + j * j)));
        }
    return sum / (T * T);
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal pairs have unit variance") {
    const PhiloxKey key = derive_key({1, 2, 3});
    std::vector<double> v;
    for (std::uint64_t i = 0; i < 50000; ++i) {
        const auto p = normal_pair_at(key, i, 7);
        v.push_back(p[0]);
        v.push_back(p[1]);
    }
    CHECK(std::fabs(mean(v)) < 3.0 / std::sqrt(1e5));
    CHECK(sample_variance(v) == doctest::Approx(1.0).epsilon(0.015));
}

TEST_CASE("parameter validation names the violated inequality") {
    FieldParams p;
    p.L = 5;
    p.K = 5;
    try {
        validate(p);
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("K >= L+2") != std::string::npos);
    }
    p.K = 7;
    p.cells_per_unit = 4.0;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
    p.n_min = 1;
    p.cells_per_unit = 8.0 / 3.0;
    CHECK_NOTHROW(validate(p));
    p.nu = 1.5;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
}

TEST_CASE("band sample mean and variance match the spectrum") {
    FieldParams p;
    p.L = 3;
    p.K = 5;
    for (int n : {1, 2}) {
        const BandGrid g = band_grid(p, n);
        const SpectrumFn S = band_spectrum_fn(spectrum2(), p, n);
        const double expected = lattice_variance(g, S);
        std::vector<double> vars;
        for (std::uint64_t s = 0; s < 6; ++s) {
            const ScaleBand b = synth_band(n, g, S, band_key(99, 0, n, s));
            const double T = g.period();
            const double mean_se = std::sqrt(S(0.0) / (T * T));
            CHECK(std::fabs(mean(b.values)) <= 3.0 * mean_se + 1e-12);
            std::vector<double> c = b.values;
            const double mu = mean(c);
            for (double& x : c) x -= mu;
            vars.push_back(sample_variance(c));
        }
        CHECK(mean(vars) == doctest::Approx(expected).epsilon(0.04));
        // Unmollified bands carry the closed-form variance up to lattice effects.
        FieldParams q = p;
        q.mollify = false;
        CHECK(lattice_variance(g, band_spectrum_fn(spectrum2(), q, n)) ==
              doctest::Approx(band_variance_closed_form(2)).epsilon(0.01));
    }
}

TEST_CASE("synthesis rejects under-resolved or self-overlapping grids") {
    const SpectrumFn S = [](double) { return 1.0; };
    BandGrid g;
    g.dim = 2;
    g.cells = 32;
    g.spacing = 9.0 / 4.0;  // 4 cells per 3^2
    CHECK_THROWS(synth_band(2, g, S, {1, 2}));
    g.cells = 16;
    g.spacing = 9.0 / 8.0;  // period 18 < 4 * 9
    CHECK_THROWS(synth_band(2, g, S, {1, 2}));
}

TEST_CASE("stream matrix is antisymmetric and the drift divergence-free") {
    FieldParams p;
    p.L = 2;
    p.K = 4;
    const StreamField f = StreamField::synthesize(p, spectrum2(), 0);
    const FieldView v(f);
    for (int i = 0; i < 200; ++i) {
        const double x[3] = {0.731 * i, -1.37 * i + 0.2, 0.0};
        StreamSample s;
        v.sample(x, 2, s);
        double k[9], jac[4], fx[2];
        stream_matrix(2, s, k);
        CHECK(k[0] == 0.0);
        CHECK(k[3] == 0.0);
        CHECK(k[1] == -k[2]);
        drift_jacobian_from_sample(2, s, jac);
        drift_from_sample(2, s, fx);
        CHECK(std::fabs(jac[0] + jac[3]) <= 1e-12 * (std::fabs(jac[0]) + 1.0));
        CHECK(fx[0] == doctest::Approx(-s.comp[0].grad[1]));
        CHECK(fx[1] == doctest::Approx(s.comp[0].grad[0]));
    }
}

TEST_CASE("3D stream matrices are antisymmetric with divergence-free drift") {
    const RadialSpectrum sp(make_bump_profile(ProfileKind::SmoothstepExp, 1.0), 3);
    FieldParams p;
    p.dim = 3;
    p.L = 1;
    p.K = 3;
    p.band_period = 4;
    const StreamField f = StreamField::synthesize(p, sp, 0);
    CHECK(f.components() == 3);
    const FieldView v(f);
    for (int i = 0; i < 50; ++i) {
        const double x[3] = {0.37 * i, 1.1 - 0.53 * i, 0.29 * i};
        StreamSample s;
        v.sample(x, 2, s);
        double k[9], jac[9];
        stream_matrix(3, s, k);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) CHECK(k[a * 3 + b] == -k[b * 3 + a]);
        drift_jacobian_from_sample(3, s, jac);
        CHECK(std::fabs(jac[0] + jac[4] + jac[8]) <= 1e-11);
    }
}

TEST_CASE("spline interpolant reproduces node values") {
    FieldParams p;
    p.L = 2;
    p.K = 4;
    const StreamField f = StreamField::synthesize(p, spectrum2(), 3);
    for (const auto& lv : f.levels()) {
        const std::size_t N = lv.grid.cells;
        for (std::size_t t = 0; t < 20; ++t) {
            const std::size_t i = (t * 37) % N, j = (t * 101 + 5) % N;
            const double x[3] = {i * lv.grid.spacing, j * lv.grid.spacing, 0.0};
            StreamSample s;
            f.sample(x, lv.n, lv.n, 0, s);
            CHECK(s.comp[0].value == doctest::Approx(lv.values[0][i * N + j]).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("synthesis is deterministic and independent of the worker count") {
    FieldParams p;
    p.L = 2;
    p.K = 4;
    set_worker_count(1);
    const StreamField a = StreamField::synthesize(p, spectrum2(), 0);
    set_worker_count(3);
    const StreamField b = StreamField::synthesize(p, spectrum2(), 0);
    set_worker_count(0);
    const StreamField c = StreamField::synthesize(p, spectrum2(), 1);
    for (std::size_t l = 0; l < a.levels().size(); ++l) {
        CHECK(a.levels()[l].values[0] == b.levels()[l].values[0]);
        CHECK(a.levels()[l].values[0] != c.levels()[l].values[0]);
    }
}

TEST_CASE("SDF1 files round-trip and reject corruption") {
    FieldParams p;
    p.L = 2;
    p.K = 4;
    const StreamField f = StreamField::synthesize(p, spectrum2(), 0);
    const auto dir = std::filesystem::temp_directory_path() / "superdiff_sdf_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "f.sdf").string();
    const SdfFile out = make_sdf(f, true, 128);
    write_sdf(path, out);
    const SdfFile in = read_sdf(path);
    CHECK(in.dim == 2);
    CHECK(in.n_min == 0);
    CHECK(in.L == 2);
    CHECK(in.seed == p.seed);
    CHECK(in.cumulative == out.cumulative);
    REQUIRE(in.bands.size() == f.levels().size());
    const StreamField g = field_from_sdf(in, 1.0);
    const double x[3] = {1.234, -5.6, 0.0};
    StreamSample sa, sb;
    FieldView(f).sample(x, 1, sa);
    FieldView(g).sample(x, 1, sb);
    CHECK(sb.comp[0].value == doctest::Approx(sa.comp[0].value).epsilon(1e-12));
    CHECK(sb.comp[0].grad[0] == doctest::Approx(sa.comp[0].grad[0]).epsilon(1e-12));

    // Header starts with the magic bytes.
    {
        std::ifstream raw(path, std::ios::binary);
        char magic[4];
        raw.read(magic, 4);
        CHECK(std::string(magic, 4) == "SDF1");
    }
    {
        std::ofstream app(path, std::ios::binary | std::ios::app);
        app << "x";
    }
    CHECK_THROWS(read_sdf(path));
    {
        std::fstream io(path, std::ios::binary | std::ios::in | std::ios::out);
        io.seekp(0);
        io.write("XXXX", 4);
    }
    CHECK_THROWS(read_sdf(path));
    std::filesystem::remove_all(dir);
}

TEST_CASE("cumulative-only files rebuild a single band") {
    FieldParams p;
    p.L = 1;
    p.K = 3;
    const StreamField f = StreamField::synthesize(p, spectrum2(), 0);
    const SdfFile s = make_sdf(f, false);
    CHECK(s.bands.empty());
    const StreamField g = field_from_sdf(s, 0.5);
    CHECK(g.levels().size() == 1);
    CHECK(g.nu() == 0.5);
    const auto& lv = g.levels().front();
    const std::size_t N = lv.grid.cells;
    const double x[3] = {3 * lv.grid.spacing, 7 * lv.grid.spacing, 0.0};
    StreamSample a, b;
    FieldView(f).sample(x, 0, a);
    FieldView(g).sample(x, 0, b);
    CHECK(b.comp[0].value == doctest::Approx(a.comp[0].value).epsilon(1e-9));
    CHECK(N > 0);
}
