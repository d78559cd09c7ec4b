#include <doctest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "report.hpp"

using namespace jumplab;
using namespace jumplab::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("jumplab_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_in(const std::string& command, const json& config, const fs::path& out) {
  RunRequest r;
  r.command = command;
  r.config = config;
  r.base_dir = fs::temp_directory_path();
  r.output_dir = out;
  return run(r);
}

const json kIsoValidate = json::parse(R"({
  "field": {"family": "isotropic_stable", "d": 1, "alpha": 1.0},
  "validate": {"window": 8, "density_radii": [4]}
})");

}  // namespace

TEST_CASE("numbers are written in shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(-2.5e-300) == "-2.5e-300");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(std::nan("")) == "nan");
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(gen) * std::pow(10.0, static_cast<double>(i % 40 - 20));
    const std::string s = format_number(x);
    double y = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), y);
    CHECK(y == x);
  }
}

TEST_CASE("csv tables carry the config hash") {
  CsvTable empty({"a", "b"});
  CHECK(empty.render("00ff") == "# config_hash=00ff\na,b\n");
  CsvTable t({"x", "flag", "note"});
  t.row().num(0.5).flag(true).text("ok");
  t.row().integer(-3).flag(false).empty();
  CHECK(t.render("1") == "# config_hash=1\nx,flag,note\n0.5,true,ok\n-3,false,\n");
}

TEST_CASE("FNV-1a reference values") {
  CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
  CHECK(hex64(fnv1a("foobar")) == "85944171f73967e8");
}

TEST_CASE("config hash ignores run-local keys") {
  json a = kIsoValidate;
  json b = kIsoValidate;
  b["output_dir"] = "/elsewhere";
  b["threads"] = 8;
  CHECK(config_hash(canonical_config(a)) == config_hash(canonical_config(b)));
  b["seed"] = 3;
  CHECK(config_hash(canonical_config(a)) != config_hash(canonical_config(b)));
}

TEST_CASE("syntax errors report line and column") {
  try {
    parse_config_text("{\n  \"a\": 1,\n  \"b\": ]\n}", "cfg.json");
    FAIL("expected a spec error");
  } catch (const SpecError& e) {
    CHECK(e.path().rfind("cfg.json:3:", 0) == 0);
  }
}

TEST_CASE("typed accessors name the offending path") {
  const json j = json::parse(R"({"s": {"n": -1, "x": "a", "extra": 1}})");
  const Node s = Node(j, "").at("s");
  try {
    s.positive("n");
    FAIL("expected a spec error");
  } catch (const SpecError& e) {
    CHECK(e.path() == "/s/n");
  }
  CHECK_THROWS_AS(s.number("x"), SpecError);
  CHECK_THROWS_AS(s.only({"n", "x"}), SpecError);
  CHECK(s.number("missing", 2.0) == 2.0);
}

TEST_CASE("validate runs end to end") {
  const auto out = scratch("validate");
  CHECK(run_in("validate", kIsoValidate, out) == kOk);
  CHECK(fs::exists(out / "validation.json"));
  CHECK(fs::exists(out / "config.json"));
  CHECK(fs::exists(out / "manifest.json"));
  const auto doc = json::parse(slurp(out / "validation.json"));
  CHECK(doc["config_hash"] == config_hash(canonical_config(kIsoValidate)));
  // The written config reproduces the run.
  CHECK(json::parse(slurp(out / "config.json")) == canonical_config(kIsoValidate));

  const auto axes = json::parse(R"({
    "field": {"family": "axes_counterexample", "d": 2, "alpha": 1.0},
    "validate": {"window": 3, "density_radii": [10]}
  })");
  CHECK(run_in("validate", axes, scratch("validate_axes")) == kCheckFailed);
  fs::remove_all(out);
  fs::remove_all(scratch("validate_axes"));
}

TEST_CASE("outputs are byte-identical across runs") {
  const auto cfg = json::parse(R"({
    "field": {"family": "isotropic_stable", "d": 1, "alpha": 1.0},
    "seed": 11,
    "simulate": {"t_max": 1.0, "paths": 500, "exit": {"R": 4, "gamma": 0.2, "paths": 500}}
  })");
  const auto a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(run_in("simulate", cfg, a) == kOk);
  json threaded = cfg;
  threaded["threads"] = 4;
  REQUIRE(run_in("simulate", threaded, b) == kOk);
  CHECK(slurp(a / "simulate.csv") == slurp(b / "simulate.csv"));
  CHECK(slurp(a / "config.json") == slurp(b / "config.json"));
  CHECK(slurp(a / "simulate.csv").rfind("# config_hash=", 0) == 0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("config errors and unwritable outputs") {
  json bad = kIsoValidate;
  bad["field"]["alpha"] = 2.5;
  CHECK_THROWS_AS(run_in("validate", bad, scratch("bad")), SpecError);
  json unknown = kIsoValidate;
  unknown["validate"]["windwo"] = 3;
  CHECK_THROWS_AS(run_in("validate", unknown, scratch("bad")), SpecError);
  const auto blocker = scratch("blocker");
  std::ofstream(blocker) << "x";
  CHECK_THROWS_AS(run_in("validate", kIsoValidate, blocker / "sub"), IoError);
  fs::remove(blocker);
}
