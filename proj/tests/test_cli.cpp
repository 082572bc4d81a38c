#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

// Runs the solver binary with the given arguments, capturing stdout+stderr.
CommandResult run_cli(const std::string& args) {
  const std::string cmd = std::string(ARPSOLVE_BIN) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CommandResult res;
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe))
    res.output += buf.data();
  const int status = pclose(pipe);
  REQUIRE(WIFEXITED(status));
  res.exit_code = WEXITSTATUS(status);
  return res;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << text;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("solve-convex reports a critical point and exits cleanly") {
  auto res = run_cli("solve-convex --problem quartic-box");
  INFO(res.output);
  CHECK(res.exit_code == 0);
  CHECK(contains(res.output, "status: CriticalityReached"));
  CHECK(contains(res.output, "iterations:"));
}

TEST_CASE("usage errors exit with the usage code") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("solve-convex").exit_code == 2);  // --problem is required

  auto bad_gamma = run_cli("solve-convex --problem quartic-box --gamma1 1.5");
  INFO(bad_gamma.output);
  CHECK(bad_gamma.exit_code == 2);

  auto unknown = run_cli("solve-convex --problem no-such-problem");
  INFO(unknown.output);
  CHECK(unknown.exit_code == 2);
  CHECK(contains(unknown.output, "quartic-box"));  // lists valid names

  // the convex solver refuses problems with equality constraints
  auto constrained = run_cli("solve-convex --problem circle");
  INFO(constrained.output);
  CHECK(constrained.exit_code == 2);
}

TEST_CASE("trace files round-trip through check-trace") {
  const auto trace = temp_file("arp_cli_trace.jsonl");
  auto solve = run_cli("solve-convex --problem quartic-box --trace-out " +
                       trace.string());
  INFO(solve.output);
  REQUIRE(solve.exit_code == 0);

  auto check = run_cli("check-trace " + trace.string());
  INFO(check.output);
  CHECK(check.exit_code == 0);
  CHECK(contains(check.output, "all invariants hold"));
  CHECK(contains(check.output, "pass sigma-update"));

  const auto garbage = temp_file("arp_cli_garbage.jsonl");
  write_file(garbage, "{not json\n");
  auto bad = run_cli("check-trace " + garbage.string());
  INFO(bad.output);
  CHECK(bad.exit_code == 2);
  CHECK(contains(bad.output, "malformed trace"));

  CHECK(run_cli("check-trace /no/such/file.jsonl").exit_code == 2);

  std::filesystem::remove(trace);
  std::filesystem::remove(garbage);
}

TEST_CASE("config files mirror flags and explicit flags win") {
  const auto cfg = temp_file("arp_cli_config.ini");
  write_file(cfg,
             "# solver settings\n"
             "problem = \"rosenbrock\"\n"
             "p = 3\n"
             "eps = 1e-5\n");

  auto from_file = run_cli("solve-convex --config " + cfg.string());
  INFO(from_file.output);
  CHECK(from_file.exit_code == 0);
  CHECK(contains(from_file.output, "target 1e-05"));

  auto overridden =
      run_cli("solve-convex --config " + cfg.string() + " --eps 1e-3");
  INFO(overridden.output);
  CHECK(overridden.exit_code == 0);
  CHECK(contains(overridden.output, "target 0.001"));

  CHECK(run_cli("solve-convex --config /no/such/config.ini").exit_code == 2);

  const auto bad_key = temp_file("arp_cli_badkey.ini");
  write_file(bad_key, "problem = quartic-box\nunknown_key = 1\n");
  CHECK(run_cli("solve-convex --config " + bad_key.string()).exit_code == 2);

  std::filesystem::remove(cfg);
  std::filesystem::remove(bad_key);
}

TEST_CASE("solve-general certifies the circle problem") {
  auto res = run_cli(
      "solve-general --problem circle --eps-p 1e-3 --eps-d 1e-3 --delta 2");
  INFO(res.output);
  CHECK(res.exit_code == 0);
  CHECK(contains(res.output, "status: ScaledKKT"));
  CHECK(contains(res.output, "certificate verification: ok"));

  auto infe = run_cli("solve-general --problem infeasible");
  INFO(infe.output);
  CHECK(infe.exit_code == 0);
  CHECK(contains(infe.output, "status: InfeasibleCritical"));
  CHECK(contains(infe.output, "certificate verification: ok"));
}

TEST_CASE("sweep prints the scaling table and slope verdict") {
  auto res = run_cli(
      "sweep --problem quartic-box --p 2 --eps-grid 1e-2,1e-3,1e-4,1e-5");
  INFO(res.output);
  CHECK(res.exit_code == 0);
  CHECK(contains(res.output, "log-log slope"));
  CHECK(contains(res.output, "within"));

  // grids must span at least two decades
  auto narrow = run_cli(
      "sweep --problem quartic-box --eps-grid 1e-2,8e-3,6e-3,4e-3");
  INFO(narrow.output);
  CHECK(narrow.exit_code == 2);
}

TEST_CASE("list-problems names every registry entry") {
  auto res = run_cli("list-problems");
  CHECK(res.exit_code == 0);
  for (const char* name : {"quartic-box", "rosenbrock", "linear-box", "circle",
                           "powell-equality", "infeasible"}) {
    INFO(name);
    CHECK(contains(res.output, name));
  }
}
