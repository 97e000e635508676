#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "sigctl/scenario_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kScenario = fs::path(SIGCTL_SOURCE_DIR) / "scenarios" / "two_junction.json";

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("sigctl_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + SIGCTL_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string sim_args(const fs::path& out, const std::string& extra = "") {
  return "simulate --scenario \"" + kScenario.string() + "\" --out \"" + out.string() + "\" --horizon 120 " + extra;
}

}  // namespace

TEST(Cli, SimulateWritesFourArtifacts) {
  const auto out = scratch("simulate");
  ASSERT_EQ(run(sim_args(out)), 0);
  for (const char* f : {"metrics.csv", "metrics.json", "qsigma.svg", "manifest.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["subcommand"], "simulate");
  EXPECT_EQ(manifest["scenario"]["run"]["horizon"], 120);
}

TEST(Cli, SameSeedSameCsv) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run(sim_args(a, "--seed 5")), 0);
  ASSERT_EQ(run(sim_args(b, "--seed 5")), 0);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "qsigma.svg"), slurp(b / "qsigma.svg"));
}

TEST(Cli, ManifestReproducesTheRun) {
  const auto a = scratch("replay_a"), b = scratch("replay_b");
  ASSERT_EQ(run(sim_args(a, "--policy greedy --slot 15 --seed 9")), 0);
  ASSERT_EQ(run("simulate --scenario \"" + (a / "manifest.json").string() + "\" --out \"" + b.string() + "\""), 0);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
}

TEST(Cli, MissingScenarioIsAConfigError) {
  const auto out = scratch("missing");
  EXPECT_EQ(run("simulate --scenario /nonexistent.json --out \"" + out.string() + "\""), 2);
  EXPECT_EQ(run("simulate --out \"" + out.string() + "\""), 2);
}

TEST(Cli, BadOverridesAreConfigErrors) {
  const auto out = scratch("overrides");
  EXPECT_EQ(run(sim_args(out, "--policy fixed")), 2);
  EXPECT_EQ(run(sim_args(out, "--eta -1")), 2);
  EXPECT_EQ(run(sim_args(out, "--mode quantum")), 2);
  EXPECT_EQ(run(sim_args(out, "--policy bp --slot 7")), 2);
  EXPECT_EQ(run(sim_args(out, "--cycle 0")), 2);
}

TEST(Cli, InvalidTopologyExitsThree) {
  auto n = fixtures::blank({1, 1});
  fixtures::phase(n, 0, {{0, 1.0}});
  fixtures::phase(n, 1, {{1, 1.0}});
  fixtures::link(n, 0, 1, 1.0);
  fixtures::link(n, 1, 0, 1.0);
  sigctl::Scenario s;
  s.name = "loop";
  s.topology = n.topo;
  s.turning = n.turning;
  s.horizon = 10;
  s.seed = 1;
  const auto dir = scratch("invalid");
  sigctl::io::write_file(dir / "loop.json", sigctl::io::serialize(s));
  EXPECT_EQ(run("simulate --scenario \"" + (dir / "loop.json").string() + "\" --out \"" + (dir / "out").string() +
                "\""),
            3);
}

TEST(Cli, SweepCoversTheGrid) {
  const auto out = scratch("sweep");
  ASSERT_EQ(run("sweep --scenario \"" + kScenario.string() + "\" --out \"" + out.string() + "\" --horizon 60"), 0);
  const auto csv = slurp(out / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);
  const auto again = scratch("sweep_again");
  ASSERT_EQ(run("sweep --scenario \"" + kScenario.string() + "\" --out \"" + again.string() + "\" --horizon 60"), 0);
  EXPECT_EQ(csv, slurp(again / "sweep.csv"));
}

TEST(Cli, EmptySweepGrid) {
  const auto out = scratch("sweep_empty");
  EXPECT_EQ(run("sweep --scenario \"" + kScenario.string() + "\" --out \"" + out.string() + "\" --policies \"\""), 2);
}

TEST(Cli, StabilityReport) {
  const auto out = scratch("stability");
  ASSERT_EQ(run("stability --scenario \"" + kScenario.string() + "\" --out \"" + out.string() + "\""), 0);
  const auto j = nlohmann::json::parse(slurp(out / "stability.json"));
  EXPECT_TRUE(j.contains("segments"));
  for (const auto& seg : j["segments"]) {
    EXPECT_TRUE(seg["feasible"].get<bool>());
    EXPECT_LE(seg["epsilon_star"].get<double>(), seg["minmax_bound"].get<double>() + 1e-9);
  }
}

TEST(Cli, CompareRanksAllPolicies) {
  const auto out = scratch("compare");
  ASSERT_EQ(run("compare --scenario \"" + kScenario.string() + "\" --out \"" + out.string() + "\" --horizon 200"), 0);
  const auto csv = slurp(out / "compare.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_TRUE(fs::exists(out / "compare.svg"));
}

TEST(Cli, InputFileIsNotModified) {
  const auto before = slurp(kScenario);
  const auto time = fs::last_write_time(kScenario);
  const auto out = scratch("untouched");
  ASSERT_EQ(run(sim_args(out, "--policy bp --cycle 60")), 0);
  EXPECT_EQ(slurp(kScenario), before);
  EXPECT_EQ(fs::last_write_time(kScenario), time);
}

TEST(Cli, OutputDirFromEnvironment) {
  const auto out = scratch("env");
  const std::string cmd = "SIGCTL_OUT_DIR=\"" + out.string() + "\" \"" + SIGCTL_CLI + "\" simulate --scenario \"" +
                          kScenario.string() + "\" --horizon 20 >/dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(out / "metrics.csv"));
}
