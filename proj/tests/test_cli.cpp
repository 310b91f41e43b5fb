#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "scl/cli.hpp"
#include "scl/config.hpp"

using namespace scl;
namespace fs = std::filesystem;

namespace {

const char* kP0Small = R"json({
  "problem": {
    "c": 0.0, "d": 0.0, "T": 1.0, "band": [-6.0, 6.0],
    "sigma": "1",
    "f1": "2 + tanh(y+1)",
    "f2": "2 - tanh(y-1)",
    "h": "y",
    "g": "max(-(2+tanh(y+1)), min(2-tanh(y-1), y))",
    "bound_M": 8.0
  },
  "grid": { "nt": 51, "ny": 61 },
  "mc": { "n_paths": 800, "dt": 0.004, "seed": 99, "start": [0.0, 0.0],
          "perturbation": 0.5, "max_ci_halfwidth": 0.5 },
  "output": { "dir": "OUTDIR" }
})json";

const char* kJumpSmall = R"json({
  "problem": {
    "c": 0.0, "d": 0.0, "T": 1.0, "band": [-6.0, 6.0],
    "sigma": "1",
    "f1": "2 + tanh(y+1)",
    "f2": "2 - tanh(y-1)",
    "h": "y",
    "g": "2*y",
    "bound_M": 15.0
  },
  "grid": { "nt": 51, "ny": 61 },
  "mc": { "n_paths": 800, "dt": 0.004, "seed": 99, "start": [0.0, 0.0],
          "perturbation": 0.5, "max_ci_halfwidth": 0.5 },
  "output": { "dir": "OUTDIR" }
})json";

std::string make_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("scl_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string write_config(const std::string& dir, const std::string& body) {
    std::string text = body;
    const std::string key = "OUTDIR";
    text.replace(text.find(key), key.size(), dir + "/out");
    const std::string path = dir + "/config.json";
    std::ofstream(path) << text;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    REQUIRE(is.good());
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("solve writes the surfaces, the boundaries and the cache") {
    const std::string dir = make_dir("solve");
    const std::string cfg = write_config(dir, kP0Small);
    CHECK(run_cli({"solve", cfg}) == 0);
    for (const char* name : {"V.csv", "boundaries.csv", "residuals.csv", "curves.csv",
                             "terminal.csv", "cache.bin"})
        CHECK(fs::exists(dir + "/out/" + name));
    const std::string v = slurp(dir + "/out/V.csv");
    CHECK(v.rfind("t,y,V,region,residual\n", 0) == 0);
    CHECK(v.find("CONTINUATION") != std::string::npos);
    CHECK(v.find("LOWER_CONTACT") != std::string::npos);
}

TEST_CASE("a terminal payoff outside the sandwich is rejected unless the envelope is on") {
    const std::string dir = make_dir("sandwich");
    const std::string cfg = write_config(dir, kJumpSmall);
    CHECK(run_cli({"solve", cfg}) == 2);
    CHECK(run_cli({"solve", cfg, "--general-terminal"}) == 0);
    CHECK(fs::exists(dir + "/out/cache.bin"));
}

TEST_CASE("verify passes on the small fixture and reuses the solve cache") {
    const std::string dir = make_dir("verify");
    const std::string cfg = write_config(dir, kP0Small);
    REQUIRE(run_cli({"solve", cfg}) == 0);
    CHECK(run_cli({"verify", cfg}) == 0);
    const std::string report = slurp(dir + "/out/verify_report.txt");
    CHECK(report.find("verify: PASS") != std::string::npos);
    CHECK(fs::exists(dir + "/out/W.csv"));
    CHECK(fs::exists(dir + "/out/C.csv"));
    const std::string policies = slurp(dir + "/out/policies.csv");
    CHECK(policies.rfind("name,estimate,se,reference,budget,n,status\n", 0) == 0);
    CHECK(policies.find("policy-frozen") != std::string::npos);
}

TEST_CASE("verify is byte-deterministic for a fixed seed") {
    const std::string dir = make_dir("determinism");
    const std::string cfg = write_config(dir, kP0Small);
    REQUIRE(run_cli({"verify", cfg}) == 0);
    const std::string first = slurp(dir + "/out/verify_report.txt");
    REQUIRE(run_cli({"verify", cfg}) == 0);
    const std::string second = slurp(dir + "/out/verify_report.txt");
    CHECK(first == second);

    REQUIRE(run_cli({"verify", cfg, "--seed", "123456"}) == 0);
    const std::string reseeded = slurp(dir + "/out/verify_report.txt");
    CHECK(first != reseeded);
}

TEST_CASE("plotdata needs a cache and then emits the curve files") {
    const std::string dir = make_dir("plotdata");
    const std::string cfg = write_config(dir, kJumpSmall);
    CHECK(run_cli({"plotdata", cfg, "--general-terminal"}) == 2);
    REQUIRE(run_cli({"solve", cfg, "--general-terminal"}) == 0);
    CHECK(run_cli({"plotdata", cfg, "--general-terminal"}) == 0);
    CHECK(fs::exists(dir + "/out/curves.dat"));
    CHECK(fs::exists(dir + "/out/free_boundaries.dat"));
    const std::string segment = slurp(dir + "/out/terminal_segment.dat");
    // the crossovers of g = 2y against the obstacles sit at -1 and 1
    CHECK(segment.find("-0.99999") != std::string::npos);
}

TEST_CASE("dump-config emits a canonical document that reparses identically") {
    const std::string dir = make_dir("dump");
    const std::string cfg_path = write_config(dir, kP0Small);
    RunConfig cfg = load_config(cfg_path);
    RunConfig reparsed = parse_config(cfg.dump());
    CHECK(cfg == reparsed);
    CHECK(cfg.dump() == reparsed.dump());

    std::ostringstream captured;
    auto* old = std::cout.rdbuf(captured.rdbuf());
    const int rc = run_cli({"solve", cfg_path, "--dump-config"});
    std::cout.rdbuf(old);
    CHECK(rc == 0);
    RunConfig from_cli = parse_config(captured.str());
    CHECK(from_cli == cfg);
}

TEST_CASE("constants are substituted textually before parsing") {
    std::map<std::string, double> constants{{"K", 2.5}, {"vol", 0.5}};
    CHECK(substitute_constants("K + tanh(y+vol)", constants) ==
          "(2.5) + tanh(y+(0.5))");
    CHECK(substitute_constants("Kx + K", constants) == "Kx + (2.5)");
    // an unsubstituted identifier surfaces as an expression error -> exit 2
    const std::string dir = make_dir("constants");
    std::string text(kP0Small);
    const std::string needle = "\"sigma\": \"1\"";
    text.replace(text.find(needle), needle.size(), "\"sigma\": \"1 + 0*undefined_name\"");
    const std::string path = write_config(dir, text);
    CHECK(run_cli({"solve", path}) == 2);
}

TEST_CASE("malformed configuration exits with the invalid-input code") {
    const std::string dir = make_dir("badcfg");
    const std::string p1 = dir + "/broken.json";
    std::ofstream(p1) << "{ not json";
    CHECK(run_cli({"solve", p1}) == 2);

    const std::string p2 = dir + "/unknown_key.json";
    std::string text(kP0Small);
    text.replace(text.find("\"grid\""), 6, "\"grd\"");
    std::ofstream(p2) << text;
    CHECK(run_cli({"solve", p2}) == 2);

    CHECK(run_cli({"solve", dir + "/missing.json"}) == 2);
}

TEST_CASE("a corrupt cache is ignored and verify solves inline") {
    const std::string dir = make_dir("badcache");
    const std::string cfg = write_config(dir, kP0Small);
    fs::create_directories(dir + "/out");
    std::ofstream(dir + "/out/cache.bin") << "not a cache";
    CHECK(run_cli({"verify", cfg}) == 0);
}
