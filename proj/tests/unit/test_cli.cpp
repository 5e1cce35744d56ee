#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "symco/export.hpp"
#include "symco/hclust.hpp"
#include "symco/pipeline.hpp"
#include "symco/svg.hpp"

using namespace symco;
namespace fs = std::filesystem;
using artifact::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("symco_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
    return n;
}

int shell(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const fs::path& synthetic_inputs() {
    static const fs::path dir = [] {
        const auto d = scratch("inputs");
        REQUIRE(shell(std::string(SYMCO_CLI) + " synth --dataset css --n 300 --seed 3 --out " + d.string() +
                      " > /dev/null") == 0);
        return d;
    }();
    return dir;
}

pipeline::Config config_for(const fs::path& out) {
    pipeline::Config c;
    c.input = (synthetic_inputs() / "cohort.csv").string();
    c.rules = (synthetic_inputs() / "cohort.rules").string();
    c.out = out;
    c.strata = "broad";
    c.svg = true;
    c.m_grid = {2, 6};
    c.k_max = 3;
    return c;
}

json hand_dendrogram() {
    const auto d = DistanceMatrix::from_rows({"a", "b", "c"}, {{0, 1, 3}, {1, 0, 2}, {3, 2, 0}});
    return artifact::dendrogram_json(complete_linkage(d), d);
}

}  // namespace

TEST_CASE("dendrogram svg draws one bracket per merge at its height") {
    const auto j = hand_dendrogram();
    CHECK_NOTHROW(artifact::validate(j));
    const auto svg = svg::emit_svg(j, "dendrogram");
    CHECK(count_of(svg, "class=\"merge\"") == 2);
    CHECK(count_of(svg, "data-height=\"1\"") == 1);
    CHECK(count_of(svg, "data-height=\"3\"") == 1);
    CHECK(svg == svg::emit_svg(j, "dendrogram"));
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("svg emission refuses unknown kinds and mismatched artifacts") {
    const auto j = hand_dendrogram();
    CHECK_THROWS_AS(svg::emit_svg(j, "pie"), std::invalid_argument);
    CHECK_THROWS_AS(svg::emit_svg(j, "embedding"), std::invalid_argument);
    umap::Embedding empty;
    empty.coords.resize(0, 2);
    CHECK_THROWS_AS(svg::emit_svg(artifact::embedding_json(empty, {}), "embedding"), std::invalid_argument);
    CHECK(svg::kinds().size() == 5);
}

TEST_CASE("artifact validation names the bad field") {
    auto j = hand_dendrogram();
    j["merges"][0].erase("height");
    try {
        artifact::validate(j);
        FAIL("expected a schema error");
    } catch (const artifact::SchemaError& e) {
        CHECK(std::string(e.what()).find("height") != std::string::npos);
    }
    CHECK_THROWS_AS(artifact::validate(json{{"kind", "mystery"}}), artifact::SchemaError);
    CHECK_THROWS_AS(artifact::validate(json::array()), artifact::SchemaError);
    const auto d = DistanceMatrix::from_rows({"a", "b"}, {{0, NAN}, {NAN, 0}});
    const auto dj = artifact::distance_json(d);
    CHECK(dj["D"][1].is_null());
    CHECK(dj["D"][0] == 0.0);
    CHECK_NOTHROW(artifact::validate(dj));
    CHECK(artifact::distance_csv(d).find("NA") != std::string::npos);
}

TEST_CASE("pipeline writes valid artifacts and replays byte for byte") {
    const auto out = scratch("pipeline");
    const auto m = pipeline::run(config_for(out));
    CHECK(m.complete());
    CHECK(pipeline::exit_code(m) == 0);
    REQUIRE(m.stages.size() == 8);
    CHECK(m.stages.back().name == "aligned");
    for (const auto& s : m.stages) {
        CHECK(s.status == "ok");
        for (const auto& a : s.artifacts) {
            CHECK(fs::exists(out / a.path));
            CHECK(pipeline::sha256_file(out / a.path) == a.sha256);
            if (a.path.ends_with(".json")) CHECK_NOTHROW(artifact::validate(artifact::read_json(out / a.path)));
        }
    }
    CHECK(fs::exists(out / "dendrogram.svg"));

    const auto again = scratch("replay");
    const auto r = pipeline::replay(out / pipeline::kManifestName, again);
    CHECK(r.identical());
    CHECK(slurp(out / pipeline::kManifestName) == slurp(again / pipeline::kManifestName));

    // Changing the input is detected.
    const auto moved = scratch("moved");
    auto c = config_for(moved);
    fs::copy_file(c.input, moved / "cohort.csv");
    c.input = (moved / "cohort.csv").string();
    pipeline::run(c);
    std::ofstream(c.input, std::ios::app) << "zz,40,female" << std::string(20, ',') << '\n';
    const auto bad = pipeline::replay(moved / pipeline::kManifestName, scratch("moved_replay"));
    CHECK_FALSE(bad.identical());
}

TEST_CASE("a failing stage leaves a partial manifest") {
    const auto dir = scratch("partial");
    {
        std::ofstream rules(dir / "x.rules");
        rules << "a = systemic\nb = systemic\nc = systemic\n";
        std::ofstream csv(dir / "x.csv");
        csv << "case_id,age,sex,a,b,c\n1,30,f,1,0,NA\n2,40,m,0,1,NA\n3,50,f,1,1,NA\n";
    }
    pipeline::Config c;
    c.command = pipeline::Command::hclust;
    c.input = (dir / "x.csv").string();
    c.rules = (dir / "x.rules").string();
    c.out = dir / "out";
    const auto m = pipeline::run(c);
    CHECK_FALSE(m.complete());
    CHECK(pipeline::exit_code(m) == 1);
    REQUIRE(m.stages.size() == 3);
    CHECK(m.stages[0].status == "ok");
    CHECK(m.stages[1].status == "failed");
    CHECK_FALSE(m.stages[1].error.empty());
    CHECK(m.stages[2].status == "not_run");
    const auto j = artifact::read_json(c.out / pipeline::kManifestName);
    CHECK(j["status"] == "partial");

    c.input = (dir / "missing.csv").string();
    const auto gone = pipeline::run(c);
    CHECK(gone.stages[0].status == "failed");
}

TEST_CASE("config validation and round trip") {
    auto c = config_for(scratch("config"));
    const auto back = pipeline::Config::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    c.strata = "weekly";
    CHECK_THROWS(c.validate());
    CHECK_THROWS(pipeline::parse_command("plot"));
    CHECK(pipeline::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("command line uses the output directory from the environment") {
    const auto out = scratch("env");
    const auto& in = synthetic_inputs();
    const std::string cmd = "SYMCO_OUT=" + out.string() + " " + SYMCO_CLI + " jaccard --input " +
                            (in / "cohort.csv").string() + " --rules " + (in / "cohort.rules").string() +
                            " > " + (out / "stdout.txt").string() + " 2>&1";
    CHECK(shell(cmd) == 0);
    CHECK(fs::exists(out / "distance.json"));
    CHECK(slurp(out / "stdout.txt").find("manifest.json") != std::string::npos);

    CHECK(shell(std::string(SYMCO_CLI) + " jaccard --input /nonexistent.csv --rules x > /dev/null 2>&1") != 0);
    CHECK(shell(std::string(SYMCO_CLI) + " umap --preset medium > /dev/null 2>&1") != 0);
}
