#include <doctest.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "satopf/cli_app.hpp"

using namespace satopf;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("satopf_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string str(const std::string& rel = "") const { return (path / rel).string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

const char* kQuickConfig = R"({
  "saa": {"max_iters": 300},
  "saa_scenarios": 40,
  "psg": {"max_iters": 20, "batch_size": 2, "eval_sample_size": 50, "eval_every": 10}
})";

}  // namespace

TEST_CASE("emit-case writes a parseable canonical file") {
    TempDir tmp;
    const int rc = run_cli({"emit-case", "--name", "case2", "--out", tmp.str("c2.case")});
    CHECK(rc == 0);
    CHECK(fs::exists(tmp.str("c2.case")));
    const int rc2 = run_cli({"solve-gp", "--case", tmp.str("c2.case"), "--out",
                             tmp.str("run"), "--threads", "1", "--config", [&] {
                                 write(tmp.path / "cfg.json", kQuickConfig);
                                 return tmp.str("cfg.json");
                             }()});
    CHECK(rc2 == 0);
}

TEST_CASE("solve, evaluate and manifests are reproducible bit for bit") {
    TempDir tmp;
    write(tmp.path / "cfg.json", kQuickConfig);
    const std::vector<std::string> solve_args{
        "solve-gp", "--case", "bundled:case2",   "--out",     tmp.str("a"),
        "--config", tmp.str("cfg.json"), "--seed", "7", "--threads", "2"};
    REQUIRE(run_cli(solve_args) == 0);
    CHECK(fs::exists(tmp.path / "a" / "solution.json"));
    CHECK(fs::exists(tmp.path / "a" / "manifest.json"));

    // identical rerun into a second directory
    std::vector<std::string> again = solve_args;
    again[4] = tmp.str("b");
    REQUIRE(run_cli(again) == 0);
    CHECK(slurp(tmp.path / "a" / "solution.json") == slurp(tmp.path / "b" / "solution.json"));

    // evaluate the solution
    const int rc = run_cli({"evaluate", "--case", "bundled:case2", "--solution",
                            tmp.str("a/solution.json"), "--out", tmp.str("eval"), "--samples",
                            "400", "--eval-seed", "5", "--threads", "1"});
    REQUIRE(rc == 0);
    const json rep = read_json(tmp.path / "eval" / "evaluation.json");
    CHECK(rep["sample_size"] == 400);
    const double total = rep["expected_total_cost"];
    const double sum = double(rep["first_stage_gen_cost"]) +
                       double(rep["first_stage_reserve_cost"]) +
                       double(rep["expected_penalty_cost"]);
    CHECK(total == doctest::Approx(sum).epsilon(1e-15));

    const json manifest = read_json(tmp.path / "eval" / "manifest.json");
    CHECK(manifest["schema"] == "satopf-manifest-1");
    CHECK(manifest["outputs"].contains("evaluation.json"));
}

TEST_CASE("rerun from a manifest reproduces outputs byte for byte") {
    TempDir tmp;
    write(tmp.path / "cfg.json", kQuickConfig);
    REQUIRE(run_cli({"solve-gp", "--case", "bundled:case2", "--out", tmp.str("a"), "--config",
                     tmp.str("cfg.json"), "--seed", "3", "--threads", "1"}) == 0);
    const std::string first = slurp(tmp.path / "a" / "solution.json");
    REQUIRE(run_cli({"rerun", "--manifest", tmp.str("a/manifest.json")}) == 0);
    CHECK(slurp(tmp.path / "a" / "solution.json") == first);
}

TEST_CASE("a one-point sweep emits one record and select picks it") {
    TempDir tmp;
    write(tmp.path / "study.json", R"({
      "models": ["GP"],
      "gp_cap_gamma_line": [100.0],
      "gamma_gen_grid": [20.0],
      "replicates": 1,
      "saa_scenarios": 40,
      "saa": {"max_iters": 300},
      "eval": {"sample_size": 300, "seed": 9}
    })");
    REQUIRE(run_cli({"sweep", "--case", "bundled:case2", "--study", tmp.str("study.json"),
                     "--out", tmp.str("sw"), "--threads", "2"}) == 0);
    const std::string csv = slurp(tmp.path / "sw" / "sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + one record

    REQUIRE(run_cli({"select", "--records", tmp.str("sw/sweep.csv"), "--max-violation", "1.0",
                     "--out", tmp.str("sel")}) == 0);
    const json sel = read_json(tmp.path / "sel" / "selected.json");
    CHECK(sel["model"] == "GP");
}

TEST_CASE("exit codes distinguish config, solver and infeasibility errors") {
    TempDir tmp;
    CHECK(run_cli({"solve-gp", "--case", tmp.str("missing.case"), "--out", tmp.str("x")}) == 2);
    CHECK(run_cli({"evaluate", "--case", "bundled:case2", "--solution",
                   tmp.str("missing.json"), "--out", tmp.str("x")}) == 2);
    CHECK(run_cli({"bogus-subcommand"}) == 2);

    // an infeasible hand-written solution file
    write(tmp.path / "bad.json", R"({
      "schema": "satopf-solution-1",
      "p0": [99.0, 99.0], "r_plus": [0, 0], "r_minus": [0, 0], "alpha": [0.5, 0.5]
    })");
    CHECK(run_cli({"evaluate", "--case", "bundled:case2", "--solution", tmp.str("bad.json"),
                   "--out", tmp.str("y")}) == 4);
}
