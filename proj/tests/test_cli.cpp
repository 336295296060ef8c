#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "hspde/app.hpp"
#include "hspde/config.hpp"
#include "hspde/serialize.hpp"

using namespace hspde;
namespace fs = std::filesystem;

namespace {

fs::path scratch_path(const std::string& name) {
  return fs::temp_directory_path() / ("hspde_cli_test_" + std::to_string(::getpid())) / name;
}

/// Fresh, empty scratch directory path.
fs::path scratch(const std::string& name) {
  const fs::path dir = scratch_path(name);
  fs::remove_all(dir);
  return dir;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return json::parse(in);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + HSPDE_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Runs parse_config and returns the key named by the error.
std::string failing_key(const json& file, const json& overrides = json::object()) {
  try {
    parse_config(file, overrides);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("minimal config takes documented defaults") {
  const RunConfig cfg =
      parse_config(json::parse(R"({"command":"solve-pde","p":1,"N":64,"T":0.5,"dt":0.001,"psi":"e0"})"));
  CHECK(cfg.command == Command::solve_pde);
  CHECK(cfg.params.kappa == 1.0);
  CHECK(cfg.params.sigma == 1.0);
  CHECK(cfg.params.b == 0.0);
  CHECK(cfg.N == 64);
  CHECK(cfg.T == 0.5);
  CHECK(cfg.dt == 0.001);
  CHECK(cfg.psi.kind == PsiSpec::Kind::unit0);
  CHECK(cfg.format == OutputFormat::json);
}

TEST_CASE("validation errors name the key") {
  const json base{{"command", "solve-pde"}};
  CHECK(failing_key({{"command", "solve-pde"}, {"N", 0}}) == "N");
  try {
    parse_config({{"command", "solve-pde"}, {"N", 0}});
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("N >= 1") != std::string::npos);
  }
  CHECK(failing_key(base, {{"dt", 0.0}}) == "dt");
  CHECK(failing_key(base, {{"T", -1.0}}) == "T");
  CHECK(failing_key(base, {{"M", 0}}) == "M");
  CHECK(failing_key(base, {{"N", "many"}}) == "N");
  CHECK(failing_key(base, {{"N", 2.5}}) == "N");
  CHECK(failing_key(base, {{"kappa", "one"}}) == "kappa");
  CHECK(failing_key(base, {{"seed", -3}}) == "seed");
  CHECK(failing_key(base, {{"format", "xml"}}) == "format");
  CHECK(failing_key(base, {{"method", "rk4"}}) == "method");
  CHECK(failing_key(base, {{"psi", "delta"}}) == "psi");
  CHECK(failing_key(base, {{"psi", "gaussian(-1)"}}) == "psi");
  CHECK(failing_key(base, {{"threads", 0}}) == "threads");
  CHECK(failing_key(base, {{"colour", "blue"}}) == "colour");
  CHECK(failing_key({{"command", "fly"}}) == "command");
  CHECK(failing_key(json::object()) == "command");
}

TEST_CASE("flag overrides win over the file") {
  const RunConfig cfg = parse_config({{"command", "simulate-spde"}, {"seed", 7}}, {{"seed", 42}});
  CHECK(cfg.seed == 42);
}

TEST_CASE("psi specifications") {
  const PsiSpec e0 = parse_psi("e0");
  CHECK(e0.build(4) == CoeffVec::unit(4, 0));

  const PsiSpec list = parse_psi(json::array({1.0, -0.5}));
  CHECK(list.build(3) == CoeffVec({1.0, -0.5, 0.0}));
  CHECK(parse_psi("1,-0.5").build(3) == CoeffVec({1.0, -0.5, 0.0}));
  CHECK(parse_psi("[1, -0.5]").build(3) == CoeffVec({1.0, -0.5, 0.0}));
  CHECK_THROWS_AS(list.build(1), ConfigError);

  const PsiSpec g = parse_psi("gaussian(1)");
  CHECK(g.kind == PsiSpec::Kind::gaussian);
  const CoeffVec coeffs = g.build(8);
  CHECK(coeffs[0] == doctest::Approx(0.53112596601359845724).epsilon(1e-12));
  CHECK(std::abs(coeffs[2]) < 1e-12);
  CHECK(parse_psi(g.to_json()).s == 1.0);
}

TEST_CASE("config round trip through the report form") {
  const RunConfig cfg =
      parse_config({{"command", "mc-compare"}, {"psi", "gaussian(0.5)"}, {"kappa", 0.5}, {"threads", 2}});
  json j = cfg.to_json();
  CHECK(j.at("command") == "mc-compare");
  const RunConfig again = parse_config(j);
  CHECK(again.to_json() == j);
}

TEST_CASE("config file loading") {
  const fs::path dir = scratch("load");
  fs::create_directories(dir);
  std::ofstream(dir / "good.json") << R"({"command":"abc-tables","l_max":10})";
  std::ofstream(dir / "bad.json") << R"({"command":)";
  CHECK(parse_config(load_config_file(dir / "good.json")).l_max == 10);
  CHECK_THROWS_AS(load_config_file(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_config_file(dir / "missing.json"), ConfigError);
}

TEST_CASE("run writes reports for each command") {
  std::ostringstream log;
  const std::pair<const char*, json> cases[] = {
      {"verify-monotonicity", {{"N", 32}, {"samples", 10}}},
      {"estimate-constant", {{"N", 32}}},
      {"solve-pde", {{"N", 16}, {"T", 0.05}, {"dt", 0.01}}},
      {"simulate-spde", {{"N", 8}, {"M", 20}, {"T", 0.05}, {"dt", 0.01}, {"write_paths", true}}},
      {"mc-compare", {{"N", 8}, {"M", 50}, {"T", 0.05}, {"dt", 0.01}}},
      {"abc-tables", {{"l_max", 20}, {"k_max", 1000}}},
  };
  for (const auto& [command, extra] : cases) {
    CAPTURE(command);
    const fs::path dir = scratch(std::string("run_") + command);
    json file = extra;
    file["command"] = command;
    file["out"] = dir.string();
    file["format"] = "both";
    const RunConfig cfg = parse_config(file);
    REQUIRE(run(cfg, log) == exit_ok);
    const json report = read_json(dir / "report.json");
    CHECK(report.at("schema") == kReportSchema);
    CHECK(report.at("command") == command);
    CHECK(report.at("status") == "ok");
    CHECK(report.at("config") == cfg.to_json());
    CHECK(report.contains("generated_at"));
    CHECK(fs::exists(dir / "results.json"));
  }
  const fs::path abc = scratch_path("run_abc-tables");
  const std::string csv = read_text(abc / "abc.csv");
  CHECK(csv.rfind("l,a_l,b_l,c_l\n", 0) == 0);
  CHECK(read_text(abc / "f_series.csv").rfind("k,k2_f1,k2_f2,k_f3,k_f4\n", 0) == 0);
  CHECK(fs::exists(scratch_path("run_simulate-spde") / "path_0.csv"));
}

TEST_CASE("run examples from the command contracts") {
  std::ostringstream log;
  const fs::path vdir = scratch("verify_p0");
  REQUIRE(run(parse_config({{"command", "verify-monotonicity"}, {"p", 0}, {"out", vdir.string()}}), log) == 0);
  const json v = read_json(vdir / "report.json").at("results");
  CHECK(v.at("C_estimate") == 0.0);
  CHECK(v.at("identity_max_error").get<double>() <= 1e-11);

  const fs::path adir = scratch("abc_p1");
  REQUIRE(run(parse_config({{"command", "abc-tables"}, {"p", 1}, {"out", adir.string()}, {"format", "csv"}}), log) ==
          0);
  const std::string csv = read_text(adir / "abc.csv");
  const auto last_line = csv.substr(csv.rfind('\n', csv.size() - 2) + 1);
  CHECK(last_line.rfind("1000,", 0) == 0);
  const double b1000 = read_json(adir / "report.json").at("results").at("b_last").get<double>();
  CHECK(std::abs(b1000 + 4.0) <= 0.04);
}

TEST_CASE("run exit codes") {
  std::ostringstream log;
  const fs::path dir = scratch("codes");
  RunConfig numerical = parse_config({{"command", "mc-compare"}, {"N", 8}, {"M", 1}, {"T", 0.02}, {"dt", 0.01}});
  numerical.output_dir = dir / "numerical";
  CHECK(run(numerical, log) == exit_numerical);
  CHECK(read_json(numerical.output_dir / "report.json").at("status") == "numerical_error");

  RunConfig overflow =
      parse_config({{"command", "solve-pde"}, {"N", 8}, {"T", 0.02}, {"dt", 0.01}, {"psi", "1e300,1e300"}});
  overflow.output_dir = dir / "overflow";
  CHECK(run(overflow, log) == exit_numerical);
  CHECK(read_json(overflow.output_dir / "report.json").at("error").get<std::string>().find("non-finite") !=
        std::string::npos);

  RunConfig invalid = parse_config({{"command", "solve-pde"}, {"T", 0.105}, {"dt", 0.01}});
  invalid.output_dir = dir / "invalid";
  CHECK(run(invalid, log) == exit_validation);
  CHECK(read_json(invalid.output_dir / "report.json").at("status") == "validation_error");
}

TEST_CASE("command-line tool") {
  const fs::path dir = scratch("tool");
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << R"({"command":"abc-tables","seed":7,"l_max":5,"k_max":100})";
  CHECK(run_cli("abc-tables --config \"" + (dir / "cfg.json").string() + "\" --seed 42 --out \"" +
                (dir / "a").string() + "\"") == 0);
  const json report = read_json(dir / "a" / "report.json");
  CHECK(report.at("config").at("seed") == 42);
  CHECK(report.at("config").at("l_max") == 5);

  CHECK(run_cli("solve-pde --N 0 --out \"" + (dir / "b").string() + "\"") == exit_validation);
  CHECK(run_cli("solve-pde --bogus 1") == exit_validation);
  CHECK(run_cli("teleport") == exit_validation);
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("solve-pde --N 8 --T 0.02 --dt 0.01 --psi 1,0.5 --format csv --out \"" + (dir / "c").string() +
                "\"") == 0);
  CHECK(fs::exists(dir / "c" / "pde.csv"));
}

TEST_CASE("non-finite report values are rejected") {
  CHECK_THROWS_AS(assert_all_finite(json{{"a", {1.0, std::nan("")}}}), std::logic_error);
  try {
    assert_all_finite(json{{"a", {{"b", INFINITY}}}});
  } catch (const std::logic_error& e) {
    CHECK(std::string(e.what()).find("/a/b") != std::string::npos);
  }
  CHECK_NOTHROW(assert_all_finite(json{{"a", 1}, {"b", "text"}}));
}
