#include "finslab/io.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace finslab;
using namespace finslab::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("finslab_test_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("sha256 test vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("csv quoting and number formatting") {
    Table t;
    t.columns = {"a", "b"};
    t.add_row({"x,y", "say \"hi\""});
    t.add_row((RowBuilder() << 0.1 << true).take());
    CHECK(csv_text(t) == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n0.1,pass\n");
    CHECK_THROWS_AS(t.add_row({"1"}), InputError);
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    CHECK(std::stod(format_double(1e-300)) == 1e-300);
}

TEST_CASE("config overrides") {
    Json c = Json::object();
    apply_override(c, "bench.alpha=1.5");
    apply_override(c, "bench.edges=z2");
    apply_override(c, "list=[1,2]");
    apply_override(c, "flag=true");
    CHECK(c["bench"]["alpha"].get<double>() == 1.5);
    CHECK(c["bench"]["edges"].get<std::string>() == "z2");
    CHECK(c["list"].size() == 2);
    CHECK(c["flag"].get<bool>());
    CHECK_THROWS_AS(apply_override(c, "novalue"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "a..b=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "=1"), ConfigError);
}

TEST_CASE("config and norm files") {
    const fs::path d = scratch_dir("files");
    write_text(d / "c.json", R"({"steps": 3})");
    CHECK(load_config(d / "c.json")["steps"] == 3);
    write_text(d / "bad.json", "{");
    CHECK_THROWS_AS(load_config(d / "bad.json"), ConfigError);
    write_text(d / "arr.json", "[1]");
    CHECK_THROWS_AS(load_config(d / "arr.json"), ConfigError);
    CHECK_THROWS_AS(load_config(d / "missing.json"), ConfigError);

    write_text(d / "sq.json", R"({"name": "square", "generators": [[1,0],[0,1],[-1,0],[0,-1]]})");
    const PolyhedralNorm sq = resolve_norm((d / "sq.json").string(), 2);
    CHECK(sq.name() == "square");
    CHECK(norm_eval(sq, vec({0.5, -2})) == 2.0);
    write_text(d / "ragged.json", R"({"generators": [[1,0],[0,1,2]]})");
    CHECK_THROWS_AS(load_norm_file(d / "ragged.json"), ConfigError);
    write_text(d / "text.json", R"({"generators": [[1,"a"]]})");
    CHECK_THROWS_AS(load_norm_file(d / "text.json"), ConfigError);
    CHECK_THROWS_AS(resolve_norm("no-such-norm", 2), ConfigError);
    CHECK(resolve_norm("l1", 3).dim() == 3);

    write_text(d / "e.json", R"({"edges": [[1,0],[-1,0],[1,1],[-1,-1]]})");
    CHECK(resolve_edges((d / "e.json").string()).size() == 4);
    write_text(d / "asym.json", R"({"edges": [[1,0],[0,1]]})");
    CHECK_THROWS_AS(resolve_edges((d / "asym.json").string()), InputError);
    CHECK_THROWS_AS(resolve_edges("hexagonal"), ConfigError);
    CHECK(resolve_edges("z3").dim() == 3);
}

TEST_CASE("summary rows and configuration hashes") {
    BenchReport a;
    a.name = "x";
    a.config = {{"b", "2"}, {"a", "1"}};
    a.check_le("v", 0.5, 1.0);
    BenchReport b = a;
    std::swap(b.config[0], b.config[1]);
    CHECK(config_hash(a) == config_hash(b));
    b.config[0].second = "3";
    CHECK(config_hash(a) != config_hash(b));
    const Table t = summary_table({a, b});
    CHECK(t.rows.size() == 2);
    CHECK(t.rows[0][4] == "pass");
    CHECK(t.rows[0][5] == config_hash(a));
}

TEST_CASE("run recorder manifest") {
    const fs::path d = scratch_dir("run");
    RunRecorder rec(d / "out", "bench test", Json{{"seed", 1}});
    Table t;
    t.columns = {"k"};
    t.add_row({"1"});
    const std::string sha = rec.write_csv("t.csv", t);
    CHECK(sha == sha256_hex(read_text(d / "out" / "t.csv")));
    CHECK_THROWS_AS(rec.write_csv("t.csv", t), InputError);
    rec.add_timing("total", 0.25);
    rec.write_manifest(0);
    CHECK_THROWS_AS(rec.write_manifest(0), InputError);
    const Json m = Json::parse(read_text(d / "out" / "manifest.json"));
    CHECK(m["command"] == "bench test");
    CHECK(m["exit_code"] == 0);
    CHECK(m["versions"]["finslab"] == kVersion);
    REQUIRE(m["outputs"].size() == 1);
    CHECK(m["outputs"][0]["sha256"] == sha);
    CHECK(m["outputs"][0]["bytes"] == 4);
    CHECK(m["timings_s"]["total"] == 0.25);
}

TEST_CASE("output root") {
    ::setenv("FINSLAB_OUTPUT_ROOT", "/tmp/somewhere", 1);
    CHECK(default_output_root() == fs::path("/tmp/somewhere"));
    ::setenv("FINSLAB_OUTPUT_ROOT", "", 1);
    CHECK(default_output_root() == fs::path("finslab_out"));
    ::unsetenv("FINSLAB_OUTPUT_ROOT");
    CHECK(default_output_root() == fs::path("finslab_out"));
}
