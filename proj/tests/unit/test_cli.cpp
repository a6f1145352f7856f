#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "crom/numerics/serialize.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CROM_CLI_PATH) + " -q " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST(Cli, UnknownSubcommandIsValidationFailure) { EXPECT_EQ(run_cli("frobnicate"), 2); }

TEST(Cli, MissingSubcommandIsValidationFailure) { EXPECT_EQ(run_cli(""), 2); }

TEST(Cli, UnknownConfigKey) {
  const fs::path dir = scratch("crom_cli_key");
  const fs::path cfg = write_config(dir, R"({"experiment": "thermo", "smaples": 3})");
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --out " + dir.string() + " config"), 2);
}

TEST(Cli, UnderdeterminedSamplesRejected) {
  const fs::path dir = scratch("crom_cli_wp");
  const fs::path cfg = write_config(dir, R"({"experiment": "thermo", "sampling": {"mode": "uniform", "samples": 10}})");
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --out " + dir.string() + " rom-run"), 2);
  EXPECT_FALSE(fs::exists(dir / "data"));
}

TEST(Cli, UnknownPaperPreset) { EXPECT_EQ(run_cli("--paper-config heat config"), 2); }

TEST(Cli, ConfigEchoesSeed) {
  const fs::path dir = scratch("crom_cli_seed");
  const std::string cmd = std::string(CROM_CLI_PATH) + " --experiment advection --seed 5 config > " +
                          (dir / "out.json").string();
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  const crom::json j = crom::read_json(dir / "out.json");
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["train"]["seed"], 5);
  EXPECT_EQ(j["experiment"], "advection");
}

TEST(Cli, TinyEvalWritesArtifacts) {
  const fs::path dir = scratch("crom_cli_eval");
  const fs::path cfg = write_config(dir, R"({"experiment": "advection", "points": 40, "steps": 5,
                                             "train": {"epochs_per_stage": 2}})");
  const std::string base = "--config " + cfg.string() + " --out " + (dir / "run").string();
  EXPECT_EQ(run_cli(base + " eval"), 0);
  for (const char* f : {"report.json", "errors.csv", "samples.json", "model/manifest.json", "pod/manifest.json"})
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  const crom::json rep = crom::read_json(dir / "run" / "report.json");
  EXPECT_EQ(rep["status"], "ok");
  EXPECT_EQ(rep["reduction"]["dimension_reduction_rounded"], 40);
  EXPECT_EQ(run_cli(base + " sweep-dt"), 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "sweep.csv"));
  fs::remove_all(dir);
}

TEST(Cli, StagedSubcommands) {
  const fs::path dir = scratch("crom_cli_stages");
  const fs::path cfg = write_config(dir, R"({"experiment": "thermo", "points": 41, "steps": 4,
                                             "train": {"r": 2, "beta": 3, "epochs_per_stage": 1, "points_per_snapshot": 0},
                                             "sampling": {"samples": 3}, "pod": {"r": 2}})");
  const std::string base = "--config " + cfg.string() + " --out " + (dir / "run").string();
  EXPECT_EQ(run_cli(base + " simulate"), 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "data" / "train" / "manifest.json"));
  EXPECT_EQ(run_cli(base + " train"), 0);
  EXPECT_EQ(run_cli(base + " select-samples"), 0);
  EXPECT_EQ(run_cli(base + " rom-run"), 0);
  EXPECT_EQ(run_cli(base + " pod"), 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "pod_report.json"));
  fs::remove_all(dir);
}
