#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Dir {
  fs::path path;
  Dir() : path(fs::temp_directory_path() / ("rscma_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~Dir() { fs::remove_all(path); }
};

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome cli(const Dir& dir, const std::string& args) {
  const fs::path out = dir.path / "stdout.txt";
  const std::string cmd = std::string(RSCMA_CLI) + " " + args + " > " + out.string() + " 2> " +
                          (dir.path / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  o.out = ss.str();
  return o;
}

std::string write_spec(const Dir& dir, const std::string& name, json scenario_patch) {
  json scenario = {{"num_rrh", 2},
                   {"power_caps_w", {20.0, 3.0}},
                   {"fronthaul_caps_bps_per_hz", {20.0, 5.0}},
                   {"num_users", 3},
                   {"num_subcarriers", 4},
                   {"num_codebooks", 4},
                   {"antennas", 2},
                   {"pathloss_reference_m", 100.0},
                   {"noise_power_w", 10.0},
                   {"error_bound", 0.05}};
  scenario.update(scenario_patch);
  const json j = {{"name", name}, {"scenario", scenario}, {"seeds", 2}, {"threads", 1}};
  const fs::path p = dir.path / (name + ".json");
  std::ofstream(p) << j.dump(2);
  return p.string();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("validate accepts the shipped scenarios") {
  Dir dir;
  const Outcome o = cli(dir, "validate --spec " + std::string(RSCMA_SCENARIO_DIR) + "/desk.json");
  CHECK(o.code == 0);
  CHECK(o.out.rfind("ok: desk", 0) == 0);
  CHECK(o.out.find("NoC1=") != std::string::npos);
}

TEST_CASE("validate rejects a broken spec with status 1") {
  Dir dir;
  const std::string spec = write_spec(dir, "broken", {{"error_bound", -1.0}});
  CHECK(cli(dir, "validate --spec " + spec).code == 1);
}

TEST_CASE("run prints the summary and writes both CSV files") {
  Dir dir;
  const std::string spec = write_spec(dir, "small", json::object());
  const fs::path out = dir.path / "summary.csv";
  const Outcome o = cli(dir, "run --spec " + spec + " --out " + out.string());
  CHECK(o.code == 0);
  CHECK(o.out.rfind("point,variant,runs,feasible,mean_sum_rate,std_error,mean_iterations\n", 0) == 0);
  REQUIRE(fs::exists(out));
  REQUIRE(fs::exists(dir.path / "summary.runs.csv"));
  std::ifstream runs(dir.path / "summary.runs.csv");
  std::stringstream ss;
  ss << runs.rdbuf();
  CHECK(count_lines(ss.str()) == 3);
}

TEST_CASE("--seeds and --json") {
  Dir dir;
  const std::string spec = write_spec(dir, "small", json::object());
  const Outcome o = cli(dir, "run --spec " + spec + " --seeds 3 --json");
  REQUIRE(o.code == 0);
  const json j = json::parse(o.out);
  CHECK(j["runs"].size() == 3);
  CHECK(j["points"][0]["runs"] == 3);
}

TEST_CASE("--strict exits with status 2 on an infeasible point") {
  Dir dir;
  const std::string spec = write_spec(dir, "hard", {{"slice_min_rate_bps_per_hz", 500.0}});
  CHECK(cli(dir, "run --spec " + spec).code == 0);
  CHECK(cli(dir, "run --spec " + spec + " --strict").code == 2);
  const std::string easy = write_spec(dir, "easy", json::object());
  CHECK(cli(dir, "run --spec " + easy + " --strict").code == 0);
}

TEST_CASE("comparison subcommands") {
  Dir dir;
  const std::string spec = write_spec(dir, "small", json::object());
  const Outcome access = cli(dir, "compare-access --spec " + spec);
  CHECK(access.code == 0);
  CHECK(access.out.find(",scma,") != std::string::npos);
  CHECK(access.out.find(",ofdma,") != std::string::npos);
  const Outcome assoc = cli(dir, "compare-assoc --spec " + spec);
  CHECK(assoc.code == 0);
  CHECK(assoc.out.find(",nearest,") != std::string::npos);
  // Imperfect CSI is refused by the channel comparison.
  CHECK(cli(dir, "compare-channel --spec " + spec).code == 1);
  const std::string perfect = write_spec(dir, "perfect", {{"error_bound", 0.0}});
  const Outcome channel = cli(dir, "compare-channel --spec " + perfect);
  CHECK(channel.code == 0);
  CHECK(channel.out.find(",rician,") != std::string::npos);
}

TEST_CASE("usage errors") {
  Dir dir;
  CHECK(cli(dir, "").code != 0);
  CHECK(cli(dir, "run").code != 0);
  CHECK(cli(dir, "run --spec /nonexistent.json").code != 0);
  CHECK(cli(dir, "frobnicate").code != 0);
}
