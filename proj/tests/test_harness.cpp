#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "superdiff/config.hpp"
#include "superdiff/csv.hpp"
#include "superdiff/parallel.hpp"
#include "superdiff/pipeline.hpp"
#include "superdiff/report.hpp"

using namespace sdiff;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("superdiff_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string message_of(const std::string& json) {
    try {
        parse_config(json);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

ExperimentConfig tiny(const fs::path& out) {
    ExperimentConfig c = parse_config(R"({
        "L": 1, "K": 3, "seed": 4, "sim_seed": 5,
        "cstar": {"samples": 2},
        "cell": {"scales": [1, 2], "samples": 2},
        "flow": {"to": 5},
        "sim": {"particles": 300, "tmax": 30, "exit_radii": [20], "allow_outrun": true}
    })");
    c.output_dir = out.string();
    return c;
}

int run_cli(const std::string& args) {
    const int rc = std::system((std::string(SUPERDIFF_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config errors name the offending key or invariant") {
    CHECK(message_of(R"({"sim": {"partcles": 10}})").find("sim.partcles") != std::string::npos);
    CHECK(message_of(R"({"L": 5, "K": 5})").find("K >= L+2") != std::string::npos);
    CHECK(message_of(R"({"nu": "one"})").find("nu") != std::string::npos);
    CHECK(message_of(R"({"cell": {"boundary": "open"}})").find("cell.boundary") != std::string::npos);
    CHECK(message_of(R"({"flow": {"cstar": "guess"}})").find("flow.cstar") != std::string::npos);
    CHECK_FALSE(message_of("{not json").empty());
    CHECK(message_of(R"({"sim": {"dt": "auto"}, "flow": {"cstar": "closed-form:3"}})").empty());
}

TEST_CASE("defaults, echo and hashing") {
    const ExperimentConfig a = parse_config("{}");
    CHECK(a.field.dim == 2);
    CHECK(a.field.K == 5);
    CHECK(a.sim.dt == 0.0);
    CHECK(a.cell.samples == 8);
    CHECK(cell_scales(a) == std::vector<int>{5});
    const ExperimentConfig b = parse_config(effective_config_json(a));
    CHECK(effective_config_json(b) == effective_config_json(a));
    CHECK(config_hash(a) == config_hash(b));
    ExperimentConfig c = a;
    c.output_dir = "elsewhere";
    CHECK(config_hash(c) == config_hash(a));
    c.sim.particles = 7;
    CHECK(config_hash(c) != config_hash(a));
    CHECK(config_hash(a).size() == 64);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("CSV round trip and error locations") {
    CsvTable t;
    t.has_stamp = true;
    t.stamp.config_hash = "abc";
    t.stamp.seed = 9;
    t.stamp.extra["radius"] = "3";
    t.columns = {"t", "v"};
    t.rows = {{1.0, 0.1}, {2.5, 1.0 / 3.0}, {1e-300, -7.0}};
    const std::string text = csv_text(t);
    CHECK(text.rfind("# config_hash=abc seed=9 radius=3\n", 0) == 0);
    const CsvTable r = parse_csv(text, "x.csv", {"t", "v"});
    CHECK(r.has_stamp);
    CHECK(r.stamp.config_hash == "abc");
    CHECK(r.stamp.seed == 9);
    CHECK(r.stamp.extra.at("radius") == "3");
    CHECK(r.rows == t.rows);
    CHECK(r.values("v")[1] == 1.0 / 3.0);
    CHECK_THROWS_AS(r.column("w"), CsvError);

    try {
        parse_csv("# config_hash=a seed=1\nt,v\n1,2\n3,oops\n", "bad.csv");
        FAIL("expected a parse error");
    } catch (const CsvError& e) {
        CHECK(std::string(e.what()).find("bad.csv") != std::string::npos);
        CHECK(std::string(e.what()).find("4") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_csv("t,v\n1\n", "short.csv"), CsvError);
    CHECK_THROWS_AS(parse_csv("t,w\n1,2\n", "hdr.csv", {"t", "v"}), CsvError);
    CHECK(format_number(0.1) == "0.1");
}

TEST_CASE("report over an empty or partial directory") {
    const fs::path d = scratch("report");
    const Report empty = emit_report(d.string(), d.string());
    CHECK(empty.criteria.empty());
    CHECK(fs::exists(d / "report.md"));

    ExperimentConfig cfg;
    const Stamp st = make_stamp(cfg, 1, 2);
    const auto series = flow(2.0, 0, 50, cstar_closed_form(2));
    write_csv((d / "flow.csv").string(), flow_table(series, 2.0, st));
    const Report r = emit_report(d.string(), d.string());
    bool saw_flow = false;
    for (const auto& c : r.criteria) {
        if (c.name.find("flow") != std::string::npos) {
            saw_flow = true;
            CHECK(c.pass);
        }
    }
    CHECK(saw_flow);
    if (plots_available()) {
        CHECK(fs::exists(d / "flow_ratio.svg"));
        CHECK(slurp(d / "flow_ratio.svg").find("<svg") != std::string::npos);
    }
    CHECK(r.markdown.find("flow") != std::string::npos);

    std::ofstream(d / "msd.csv") << "t,msd\n1,x\n";
    CHECK_THROWS_AS(emit_report(d.string(), d.string()), CsvError);
    fs::remove_all(d);
}

TEST_CASE("pipeline bundle is complete, stamped and reproducible") {
    const fs::path a = scratch("pipe_a"), b = scratch("pipe_b");
    set_worker_count(1);
    const PipelineResult ra = run_pipeline(tiny(a));
    set_worker_count(2);
    const PipelineResult rb = run_pipeline(tiny(b));
    set_worker_count(0);
    for (const char* f : {"config.json", "field.sdf", "cstar.csv", "cells.csv", "flow.csv", "msd.csv", "exit.csv",
                          "moments.csv", "report.md", "manifest.json"})
        CHECK_MESSAGE(fs::exists(a / f), f);
    CHECK(ra.config_hash == rb.config_hash);
    // config.json echoes the output directory; everything else must be byte-identical.
    for (const auto& art : ra.artifacts)
        if (art != "config.json") CHECK_MESSAGE(slurp(a / art) == slurp(b / art), art);

    const CsvTable cells = read_csv((a / "cells.csv").string(), columns::cells);
    CHECK(cells.rows.size() == 4);
    CHECK(cells.stamp.config_hash == ra.config_hash);
    const CsvTable msd = read_csv((a / "msd.csv").string(), columns::msd);
    CHECK(msd.stamp.seed == 5);
    CHECK(msd.rows.back()[0] == 30.0);
    CHECK(read_csv((a / "exit.csv").string(), columns::exit).stamp.extra.at("radius") == "20");

    const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(manifest["config_hash"] == ra.config_hash);
    CHECK(manifest["artifacts"]["msd.csv"] == sha256_hex(slurp(a / "msd.csv")));

    bool provenance = false;
    for (const auto& c : ra.report.criteria)
        if (c.name.find("provenance") != std::string::npos) provenance = c.pass;
    CHECK(provenance);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("pipeline reports the failing stage") {
    const fs::path d = scratch("pipe_fail");
    ExperimentConfig c = tiny(d);
    c.sim.allow_outrun = false;
    c.sim.tmax = 1e4;
    try {
        run_pipeline(c);
        FAIL("expected a stage failure");
    } catch (const StageError& e) {
        CHECK(e.stage == "sim");
    }
    CHECK(fs::exists(d / "flow.csv"));
    fs::remove_all(d);
}

TEST_CASE("command-line exit codes") {
    const fs::path d = scratch("cli");
    std::ofstream(d / "bad.json") << R"({"sim": {"partcles": 1}})";
    CHECK(run_cli("pipeline --config " + (d / "bad.json").string()) == 2);
    CHECK(run_cli("report --in " + d.string() + " --out " + d.string()) == 0);
    CHECK(run_cli("no-such-command") != 0);
    CHECK(run_cli("rgflow --s0 2 --to 50 --out " + (d / "flow.csv").string()) == 0);
    CHECK(read_csv((d / "flow.csv").string(), columns::flow).rows.size() == 51);
    fs::remove_all(d);
}
