#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"
#include "pipeline.hpp"
#include "rdfluct/config.hpp"
#include "rdfluct/csv.hpp"

namespace rdfluct::tools {
namespace {

namespace fs = std::filesystem;

constexpr const char* kSmallConfig = R"([numerics]
voxels = 32
modes = 64
basis_modes = 30
t_end = 0.1
save_interval = 0.05
[ensemble]
crdme_trials = 12
spide_trials = 40
gammas = 100,200,400
)";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("rdfluct_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& text, const std::string& name = "run.ini") {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  int run(const std::string& cmd, const fs::path& cfg, const fs::path& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{cmd, "--config", cfg.string(), "--out", out.string(), "--quiet"};
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

TEST_F(CliTest, FullPipelineProducesDocumentedArtifacts) {
  const auto cfg = write_config(kSmallConfig);
  const auto out = dir_ / "out";
  ASSERT_EQ(run("solve-meanfield", cfg, out), kOk);
  ASSERT_EQ(run("simulate-crdme", cfg, out), kOk);
  ASSERT_EQ(run("solve-fluctuation", cfg, out), kOk);
  ASSERT_EQ(run("compare", cfg, out), kOk);

  const auto mf = read_csv(out / "meanfield" / "masses.csv");
  EXPECT_EQ(mf.header, (std::vector<std::string>{"time", "mass_A", "mass_B", "mass_C"}));
  EXPECT_EQ(mf.rows.size(), 3u);
  EXPECT_TRUE(fs::exists(out / "meanfield" / "snap_0.050.csv"));
  const auto crdme = read_csv(out / "crdme" / "gamma_200" / "masses.csv");
  EXPECT_EQ(crdme.header, (std::vector<std::string>{"trial_id", "time", "species", "molar_mass"}));
  EXPECT_EQ(crdme.rows.size(), 12u * 3u * 3u);
  const auto samples = read_csv(out / "fluctuation" / "samples.csv");
  EXPECT_EQ(samples.rows.size(), 40u * 3u);
  EXPECT_NO_THROW(read_csv(out / "fluctuation" / "composed_gamma_400.csv").column("mass_Cgamma"));
  const auto cmp = read_csv(out / "comparison.csv");
  EXPECT_EQ(cmp.header,
            (std::vector<std::string>{"time", "V_SPIDE", "se_SPIDE", "gamma", "V_CRDME_scaled", "se_CRDME", "gap"}));
  EXPECT_EQ(cmp.rows.size(), 9u);
  const auto hist = read_csv(out / "histogram.csv");
  EXPECT_EQ(hist.header, (std::vector<std::string>{"bin_left", "density", "model", "gamma"}));
  const auto rates = read_csv(out / "rates.csv");
  EXPECT_EQ(rates.rows.size(), 3u);

  const auto manifest = nlohmann::json::parse(slurp(out / "crdme" / "gamma_100" / "manifest.json"));
  EXPECT_EQ(manifest["stage"], "simulate-crdme");
  const auto restored = parse_config(manifest["config"].get<std::string>());
  EXPECT_EQ(config_hash(restored), manifest["config_hash"].get<std::string>());
}

TEST_F(CliTest, RunsAreReproducibleAcrossWorkerCounts) {
  const auto cfg = write_config(kSmallConfig);
  ASSERT_EQ(run("simulate-crdme", cfg, dir_ / "a", {"--seed", "99"}), kOk);
  ASSERT_EQ(run("simulate-crdme", cfg, dir_ / "b", {"--seed", "99", "--workers", "3"}), kOk);
  ASSERT_EQ(run("simulate-crdme", cfg, dir_ / "c", {"--seed", "100"}), kOk);
  const auto a = slurp(dir_ / "a" / "crdme" / "gamma_400" / "masses.csv");
  EXPECT_EQ(a, slurp(dir_ / "b" / "crdme" / "gamma_400" / "masses.csv"));
  EXPECT_NE(a, slurp(dir_ / "c" / "crdme" / "gamma_400" / "masses.csv"));
}

TEST_F(CliTest, SnapshotsAreOptional) {
  const auto cfg = write_config(std::string(kSmallConfig) + "[output]\nsnapshots = true\n");
  ASSERT_EQ(run("simulate-crdme", cfg, dir_ / "s"), kOk);
  const auto snap = read_csv(dir_ / "s" / "crdme" / "gamma_100" / "run_3" / "snap_0.100.csv");
  EXPECT_EQ(snap.rows.size(), 32u);
  EXPECT_EQ(snap.header, (std::vector<std::string>{"voxel", "A", "B", "C"}));
}

TEST_F(CliTest, NoReactionsLeaveNoFluctuationsInC) {
  const auto cfg = write_config(std::string(kSmallConfig) + "[reaction]\nlambda = 0\nmu = 0\n");
  const auto out = dir_ / "out";
  ASSERT_EQ(run("solve-meanfield", cfg, out), kOk);
  ASSERT_EQ(run("simulate-crdme", cfg, out), kOk);
  ASSERT_EQ(run("solve-fluctuation", cfg, out), kOk);
  ASSERT_EQ(run("compare", cfg, out), kOk);
  const auto cmp = read_csv(out / "comparison.csv");
  // C starts empty, so only the factorization jitter feeds the SPIDE side.
  for (double g : cmp.numeric_column("gap")) EXPECT_LT(std::abs(g), 1e-9);
  for (double v : cmp.numeric_column("V_CRDME_scaled")) EXPECT_EQ(v, 0.0);
}

TEST_F(CliTest, MissingInputsExitWithCodeThree) {
  const auto cfg = write_config(kSmallConfig);
  EXPECT_EQ(run("solve-fluctuation", cfg, dir_ / "empty"), kMissingArtifact);
  EXPECT_EQ(run("compare", cfg, dir_ / "empty"), kMissingArtifact);
  EXPECT_EQ(run("report", cfg, dir_ / "empty"), kMissingArtifact);
}

TEST_F(CliTest, ConfigAndUsageErrors) {
  const auto bad = write_config("[reaction]\nlambda = lots\n", "bad.ini");
  EXPECT_EQ(run("solve-meanfield", bad, dir_ / "o"), kConfigInvalid);
  EXPECT_EQ(run("solve-meanfield", dir_ / "absent.ini", dir_ / "o"), kConfigInvalid);
  EXPECT_EQ(run_cli({}), kUsage);
  EXPECT_EQ(run_cli({"frobnicate"}), kUsage);
  EXPECT_EQ(run_cli({"compare"}), kUsage);
}

TEST_F(CliTest, InstabilityExitsWithCodeFour) {
  const auto cfg = write_config(std::string(kSmallConfig) + "[reaction]\nlambda = 100000\n");
  EXPECT_EQ(run("solve-meanfield", cfg, dir_ / "o"), kInstability);
}

}  // namespace
}  // namespace rdfluct::tools
