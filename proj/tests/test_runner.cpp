#include <doctest.h>

#include "rlab/errors.hpp"
#include "rlab/runner.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace rlab;

namespace {

std::string slurp(const std::filesystem::path &p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string &name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("rlab_test_runner_" + std::to_string(::getpid())) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int lab(const std::string &args)
{
  const int status = std::system((std::string(LAB_EXECUTABLE) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const json small_cover = json::parse(R"({"family": {"preset": "linear_chain"}, "R_list": [64], "samples": 300, "seed": 4})");

} // namespace

TEST_CASE("config syntax errors carry line and column")
{
  try {
    parse_config("{\n  \"a\": 1,\n  \"b\": [1, 2,]\n}", "cfg.json");
    FAIL("no error");
  } catch (const ConfigError &e) {
    CHECK(std::string(e.what()).rfind("cfg.json:3:14:", 0) == 0);
  }
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("config reader validates fields and records defaults")
{
  const json j = json::parse(R"({"R_list": [8, 4], "n": 2.5, "flag": 1, "sub": {"x": 2}, "extra": 0})");
  ConfigReader c(j);
  CHECK_THROWS_WITH_AS(c.scales("R_list", Order::Increasing), "config field 'R_list': list must be strictly increasing",
                       ConfigError);
  CHECK(c.scales("R_list", Order::Decreasing) == std::vector<double>{8, 4});
  CHECK_THROWS_AS(c.integer("n"), ConfigError);
  CHECK_THROWS_AS(c.boolean("flag", false), ConfigError);
  CHECK_THROWS_WITH_AS(c.number("missing"), "config field 'missing': missing required field", ConfigError);
  CHECK(c.number("tol", 0.5) == 0.5);
  const ConfigReader sub = c.child("sub");
  CHECK(sub.integer("x") == 2);
  CHECK(sub.integer("y", 7) == 7);
  CHECK_NOTHROW(sub.finish());
  CHECK_THROWS_WITH_AS(c.finish(), "config field 'extra': unknown field", ConfigError);
  CHECK(c.resolved()["tol"] == 0.5);
  CHECK(c.resolved()["sub"]["y"] == 7);
}

TEST_CASE("presets")
{
  const json j = json::parse(R"({"a": {"preset": "identity", "n": 4}, "b": {"preset": "warp"},
                                 "c": {"maps": [[[1, 0]], [[0, 1]]], "exponents": [1, 1]},
                                 "d": {"maps": [[[0, 0]]], "exponents": [1]},
                                 "e": {"preset": "paraboloid_chain", "n": 5}})");
  ConfigReader c(j);
  CHECK(datum_from_config(c.child("a")).ambient_dim() == 4);
  CHECK_THROWS_AS(datum_from_config(c.child("b")), ConfigError);
  CHECK(datum_from_config(c.child("c")).size() == 2);
  CHECK_THROWS_AS(datum_from_config(c.child("d")), ConfigError); // not surjective
  CHECK_THROWS_AS(family_from_config(c.child("e")), ConfigError);
}

TEST_CASE("bl-check summaries")
{
  const RunOutput lw = run_experiment("bl-check", json::parse(R"({"datum": {"preset": "loomis_whitney"}})"));
  CHECK(lw.summary["alpha"] == 0.0);
  CHECK(lw.summary["finite"] == true);
  CHECK(lw.summary["kind"] == "bl-check");
  CHECK(lw.summary["config_hash"].get<std::string>().size() == 16);
  CHECK(lw.summary["parameters"]["tolerance"] == 1e-8);
  CHECK(lw.table.rows.size() == 3);

  const RunOutput dup = run_experiment("bl-check", json::parse(R"({"datum": {"preset": "duplicated_kernel"}})"));
  CHECK(dup.summary["alpha"] == 1.0);
  CHECK(dup.summary["finite"] == false);
  REQUIRE(dup.summary["witness_basis"].size() == 1);
  CHECK(std::abs(std::abs(dup.summary["witness_basis"][0][1].get<double>()) - 1.0) < 1e-12);
}

TEST_CASE("run errors")
{
  try {
    run_experiment("bl-chek", json::object());
    FAIL("no error");
  } catch (const std::exception &e) {
    CHECK(exit_code_for(e) == 2);
  }
  CHECK_THROWS_AS(run_experiment("cover-audit", json::parse(R"({"family": {"preset": "linear_chain"}, "R_list": [64]})")),
                  ConfigError);
  CHECK_NOTHROW(run_experiment("cover-audit", json::parse(R"({"family": {"preset": "linear_chain"}, "R_list": [64], "samples": 50})"), 9));
  CHECK_THROWS_AS(run_experiment("bl-check", json::parse(R"({"kind": "bl-alpha", "datum": {"preset": "identity"}})")),
                  ConfigError);
  json budget = small_cover;
  budget["max_cells"] = 3;
  try {
    run_experiment("cover-audit", budget);
    FAIL("no error");
  } catch (const std::exception &e) {
    CHECK(exit_code_for(e) == 3);
  }
  CHECK_THROWS_AS(run_experiment("restriction-scaling",
                                 json::parse(R"({"ensemble": {"preset": "transverse_planes"}, "R_list": [8], "seed": 1})")),
                  ConfigError);
}

TEST_CASE("expectations")
{
  json j = json::parse(R"({"datum": {"preset": "duplicated_kernel"},
                           "expect": {"alpha": 1, "finite": true, "kernel_wedge": {"max": 0.5}}})");
  const RunOutput out = run_experiment("bl-check", j);
  CHECK(out.failed_expectations.size() == 1);
  CHECK(out.summary["expectations"]["passed"] == false);
  j["expect"] = {{"no_such_entry", 1}};
  CHECK_THROWS_AS(run_experiment("bl-check", j), ConfigError);
  j["expect"] = {{"alpha", {{"below", 1}}}};
  CHECK_THROWS_AS(run_experiment("bl-check", j), ConfigError);
}

TEST_CASE("csv and hashing")
{
  Table t;
  t.header = {"a", "b", "c"};
  t.add({0.1, 3L, std::string("x,y")});
  CHECK(t.to_csv() == "a,b,c\n0.10000000000000001,3,\"x,y\"\n");
  CHECK_THROWS_AS(t.add({1.0}), PreconditionError);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("outputs are byte-identical across runs")
{
  const auto dir = scratch_dir("determinism");
  write_outputs(run_experiment("cover-audit", small_cover), dir / "a");
  write_outputs(run_experiment("cover-audit", small_cover), dir / "b");
  for (const char *f : {"summary.json", "sweep.csv"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  CHECK(!std::filesystem::exists(dir / "a" / "summary.json.tmp"));
  const RunOutput other = run_experiment("cover-audit", small_cover, 5);
  CHECK(other.summary["seed"] == 5);
}

TEST_CASE("lab exit codes")
{
  const auto dir = scratch_dir("cli");
  auto write = [&](const std::string &name, const std::string &text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  const std::string lw = write("lw.json", R"({"datum": {"preset": "loomis_whitney"}, "expect": {"alpha": 0}})");
  const std::string bad = write("bad.json", "{\"datum\": ");
  const std::string fail = write("fail.json", R"({"datum": {"preset": "loomis_whitney"}, "expect": {"alpha": 1}})");
  const std::string budget = write("budget.json", R"({"family": {"preset": "linear_chain"}, "R_list": [64], "max_cells": 2})");

  CHECK(lab("bl-check --config " + lw + " --out " + (dir / "o1").string()) == 0);
  CHECK(lab("bl-check --config " + lw + " --out " + (dir / "o2").string()) == 0);
  CHECK(slurp(dir / "o1" / "summary.json") == slurp(dir / "o2" / "summary.json"));
  CHECK(slurp(dir / "o1" / "sweep.csv") == slurp(dir / "o2" / "sweep.csv"));
  CHECK(lab("no-such-kind --config " + lw + " --out " + (dir / "o3").string()) == 2);
  CHECK(lab("bl-check --config " + bad + " --out " + (dir / "o3").string()) == 2);
  CHECK(lab("bl-check --out " + (dir / "o3").string()) == 2);
  CHECK(lab("cover-audit --config " + budget + " --seed 1 --out " + (dir / "o3").string()) == 3);
  CHECK(lab("bl-check --config " + fail + " --out " + (dir / "o4").string()) == 4);
  CHECK(std::filesystem::exists(dir / "o4" / "summary.json"));
}
