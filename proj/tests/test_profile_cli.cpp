#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aexns/experiments.hpp"
#include "aexns/manifest.hpp"
#include "aexns/profile.hpp"

using namespace aexns;
using namespace aexns::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("profile parsing and schema validation") {
    auto p = Profile::from_text("sim.slowdown = 20\narrival.std_dev = 99\n", "t");
    CHECK(p.view("memcmp").slowdown() == doctest::Approx(20.0));
    CHECK(p.view("memcmp").arrival_dist().std_dev == doctest::Approx(99.0));

    CHECK_THROWS_AS(Profile::from_text("bogus.key = 1\n", "t"), ConfigError);
    CHECK_THROWS_AS(Profile::from_text("sim.slowdown = fast\n", "t"), ConfigError);
    CHECK_THROWS_AS(Profile::from_text("sim.slowdown = 1\nsim.slowdown = 2\n", "t"), ConfigError);
    CHECK_THROWS_AS(Profile::from_text("sim.slowdown 15\n", "t"), ConfigError);
    // experiment prefix must name a known experiment
    CHECK_THROWS_AS(Profile::from_text("warp_drive.sim.slowdown = 3\n", "t"), ConfigError);
}

TEST_CASE("experiment overrides resolve before base keys") {
    auto p = Profile::from_text(
        "arrival.std_dev = 250\nstepping_nop.arrival.std_dev = 8\n", "t");
    CHECK(p.view("stepping_nop").arrival_dist().std_dev == doctest::Approx(8.0));
    CHECK(p.view("stepping_addl").arrival_dist().std_dev == doctest::Approx(250.0));
    CHECK(p.view("stepping_nop").has_override("arrival.std_dev"));
    // defaults fill everything else
    CHECK(p.view("stepping_nop").mitigation().restore_cost == doctest::Approx(150.0));
}

TEST_CASE("profile hash is canonical") {
    auto a = Profile::from_text("sim.slowdown = 20\narrival.std_dev = 99\n", "a");
    auto b = Profile::from_text("# comment\narrival.std_dev = 99\n\nsim.slowdown = 20\n", "b");
    auto c = Profile::from_text("sim.slowdown = 21\narrival.std_dev = 99\n", "c");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
}

TEST_CASE("presets load and validate") {
    for (const auto& name : Profile::preset_names()) {
        auto p = Profile::load(name);
        CHECK(p.name() == name);
        p.view("memcmp").mitigation();
        p.view("pss_bench").arrival_dist();
    }
    CHECK_THROWS_AS(Profile::load("/nonexistent/profile/file"), ConfigError);
    // noiseless preset routes through the oracle classifier
    auto n = Profile::load("noiseless");
    CHECK(n.view("memcmp").get_bool("classifier.oracle"));
}

TEST_CASE("expected-reductions subcommand is deterministic byte-for-byte") {
    auto profile = Profile::load("fast");
    fs::path base = fs::temp_directory_path() / "aexns-test-er";
    fs::remove_all(base);
    Params params{{"flagged", "500"}, {"subset", "34"}, {"tp", "0.5"}};
    run_subcommand("expected-reductions", profile, 7, base / "a", params);
    run_subcommand("expected-reductions", profile, 7, base / "b", params);
    CHECK(slurp(base / "a" / "expected_reductions.csv") ==
          slurp(base / "b" / "expected_reductions.csv"));
    CHECK(slurp(base / "a" / "summary.json") == slurp(base / "b" / "summary.json"));
    fs::remove_all(base);
}

TEST_CASE("lbms-bench small run is deterministic and mirrors the table shape") {
    auto profile = Profile::load("fast");
    fs::path base = fs::temp_directory_path() / "aexns-test-lbms";
    fs::remove_all(base);
    Params params{{"deltas", "2,64"}, {"traces", "60"}};
    auto s1 = run_subcommand("lbms-bench", profile, 11, base / "a", params);
    auto s2 = run_subcommand("lbms-bench", profile, 11, base / "b", params);
    CHECK(slurp(base / "a" / "lbms_bench.csv") == slurp(base / "b" / "lbms_bench.csv"));
    CHECK(s1["result"]["counts"]["64"].get<int>() >= s1["result"]["counts"]["2"].get<int>());
    // header row names units
    auto csv = slurp(base / "a" / "lbms_bench.csv");
    CHECK(csv.rfind("delta,", 0) == 0);
    fs::remove_all(base);
}

TEST_CASE("unknown subcommand and infeasible calibration raise typed errors") {
    auto profile = Profile::load("fast");
    fs::path dir = fs::temp_directory_path() / "aexns-test-err";
    CHECK_THROWS_AS(run_subcommand("warp", profile, 1, dir, {}), ConfigError);
    // infeasible: arrival mean offset beyond the mitigation end
    auto bad = Profile::from_text("arrival.mean_offset = 100000\n", "bad");
    CHECK_THROWS_AS(run_subcommand("calibrate", bad, 1, dir, {}), CalibrationError);
    fs::remove_all(dir);
}

TEST_CASE("manifest embeds into the summary without timestamps") {
    RunManifest m;
    m.subcommand = "x";
    m.profile_name = "p";
    m.profile_hash = 0xdeadbeef;
    m.seed = 3;
    m.started_at = "2000-01-01T00:00:00Z";
    auto j = m.to_json(false);
    CHECK(!j.contains("started_at"));
    auto jt = m.to_json(true);
    CHECK(jt.contains("started_at"));
    CHECK(j["profile_hash"] == "00000000deadbeef");
}
