#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "elcap_cli/commands.hpp"
#include "elcap_cli/config.hpp"

using namespace elcap;
using namespace elcap::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("elcap_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_config(const std::string& text) {
    const std::string path = (dir_ / "scenario.conf").string();
    std::ofstream(path) << text;
    return path;
  }

  int run(std::vector<std::string> args) {
    std::vector<const char*> argv{"elcap"};
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

const char* kAnnulus =
    "dim = 2\ncapacity.mode = relative\ncapacity.conductor.radius = 0.25\ncapacity.domain.radius = 1\n"
    "grid.h = 0.0078125\n";

}  // namespace

TEST(ConfigFile, ParsesCommentsAndRejectsDuplicates) {
  std::istringstream ok("# comment\n a.b = 1 2 3  # trailing\n\nname=x\n");
  const ConfigFile f = ConfigFile::parse(ok);
  EXPECT_EQ(f.get("a.b"), "1 2 3");
  EXPECT_EQ(f.get("name"), "x");
  EXPECT_EQ(f.line_of("name"), 4);
  std::istringstream dup("x = 1\nx = 2\n");
  EXPECT_THROW((void)ConfigFile::parse(dup), Error);
  std::istringstream bad("just words\n");
  EXPECT_THROW((void)ConfigFile::parse(bad), Error);
}

TEST(ScenarioConfig, FieldLevelMessages) {
  std::istringstream in("body.demo = disk_in_disk\nmaterial.q = 1.5\ncharge = -1\ngrid.h = 0\ncolour = red\n");
  try {
    (void)load_scenario(ConfigFile::parse(in, "t.conf"));
    FAIL() << "expected ConfigInvalid";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
    const std::string msg = e.what();
    for (const char* key : {"material.q", "charge", "grid.h", "colour"}) {
      EXPECT_NE(msg.find(key), std::string::npos) << key;
    }
  }
}

TEST(ScenarioConfig, DemoImpliesDimensionAndDefaults) {
  std::istringstream in("body.demo = ball_in_cube\nfunctional = F1\nseed = 7\n");
  const ScenarioConfig c = load_scenario(ConfigFile::parse(in));
  EXPECT_EQ(c.dim, 3);
  EXPECT_EQ(c.material.q, 4.0);
  EXPECT_EQ(c.material.s, 3.0);
  EXPECT_EQ(c.optimizer.seed, 7u);
  std::istringstream flat("body.demo = disk_in_disk\nfunctional = F1\n");
  EXPECT_THROW((void)load_scenario(ConfigFile::parse(flat)), Error);
}

TEST(ScenarioConfig, SchemaCoversEveryKeyOnce) {
  std::set<std::string> seen;
  for (const auto& [k, d] : config_schema()) {
    EXPECT_TRUE(seen.insert(k).second) << k;
    EXPECT_FALSE(d.empty());
  }
}

TEST_F(CliTest, CapacityAnnulusAndDeterminism) {
  const std::string cfg = write_config(kAnnulus);
  ASSERT_EQ(run({"capacity", "--config", cfg, "--out", (dir_ / "a").string()}), kOk) << err_.str();
  ASSERT_EQ(run({"capacity", "--config", cfg, "--out", (dir_ / "b").string(), "--threads", "1"}), kOk);
  const std::string a = read(dir_ / "a" / "capacity.txt");
  EXPECT_EQ(a, read(dir_ / "b" / "capacity.txt"));
  EXPECT_EQ(read(dir_ / "a" / "potential.bin"), read(dir_ / "b" / "potential.bin"));
  std::istringstream in(a);
  const CapacityRecord rec = read_capacity_record(in);
  const double exact = 2.0 * M_PI / std::log(4.0);
  EXPECT_NEAR(rec.value, exact, 0.02 * exact);
}

TEST_F(CliTest, DegenerateSeparationWritesNothing) {
  const std::string cfg = write_config(
      "dim = 2\ncapacity.conductor.radius = 0.5\ncapacity.domain.radius = 0.5\ngrid.h = 0.03125\n");
  EXPECT_EQ(run({"capacity", "--config", cfg, "--out", (dir_ / "o").string()}), kPrecondition);
  EXPECT_NE(err_.str().find("DegenerateSeparation"), std::string::npos) << err_.str();
  EXPECT_FALSE(fs::exists(dir_ / "o"));
}

TEST_F(CliTest, UsageAndConfigErrors) {
  const std::string cfg = write_config(kAnnulus);
  EXPECT_EQ(run({"capacity"}), kUsage);
  EXPECT_EQ(run({"frobnicate", "--config", cfg}), kUsage);
  EXPECT_EQ(run({"verify", "--config", cfg, "--select", "nonsense"}), kUsage);
  EXPECT_EQ(run({"capacity", "--config", (dir_ / "missing.conf").string()}), kIo);
  const std::string bad = write_config("dim = 2\nmaterial.s = 0.5\n");
  EXPECT_EQ(run({"capacity", "--config", bad}), kConfigInvalid);
  EXPECT_NE(err_.str().find("material.s"), std::string::npos);
}

TEST_F(CliTest, EnergyIdentityAndInfinity) {
  const std::string cfg =
      write_config("body.demo = disk_in_disk\nfunctional = F2\ncharge = 0\ngrid.h = 0.03125\n");
  ASSERT_EQ(run({"energy", "--config", cfg, "--out", (dir_ / "e").string()}), kOk) << err_.str();
  const std::string rec = read(dir_ / "e" / "energy.txt");
  EXPECT_NE(rec.find("elastic 0\n"), std::string::npos);
  EXPECT_NE(rec.find("total 0\n"), std::string::npos);

  // fold one free vertex across its neighbours
  auto mesh = std::make_shared<const ReferenceDomain>(demo::disk_in_disk(1));
  Deformation bad(mesh);
  const int v = mesh->free_vertices()[30];
  bad.set_position(v, mesh->vertex(v) + Vec::Constant(2, 0.5));
  const std::string path = (dir_ / "bad.def").string();
  save_deformation(path, bad);
  EXPECT_EQ(run({"energy", "--config", cfg, "--deformation", path, "--out", (dir_ / "f").string()}),
            kInfiniteEnergy);
  EXPECT_NE(read(dir_ / "f" / "energy.txt").find("total inf\n"), std::string::npos);
}

TEST_F(CliTest, MinimizeWritesTrajectory) {
  const std::string cfg = write_config(
      "body.demo = disk_in_disk\ncharge = 0\ngrid.h = 0.03125\noptimizer.max_iterations = 10\n"
      "bump.center = 0.2 0.1\nbump.radius = 0.5\nbump.amplitude = 0.05\n");
  ASSERT_EQ(run({"minimize", "--config", cfg, "--out", (dir_ / "m").string(), "--seed", "5"}), kOk) << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "m" / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "m" / "final_deformation.txt"));
  EXPECT_NE(read(dir_ / "m" / "summary.txt").find("seed 5\n"), std::string::npos);
}

TEST_F(CliTest, VerifySelectorsAndSequence) {
  const std::string cfg = write_config(
      "body.demo = disk_in_disk\ngrid.h = 0.015625\nverify.trials = 2\nverify.h = 0.015625\n"
      "verify.koch.max_level = 2\nverify.koch.h = 0.0078125\nverify.koch.area_tolerance = 0.05\n"
      "bump.center = 0.2 0.1\nbump.radius = 0.5\nbump.amplitude = 0.05\nbump.mode = radial\n"
      "sequence.n_max = 3\n");
  EXPECT_EQ(run({"verify", "--config", cfg, "--select", "monotone-conductor", "--out", (dir_ / "v").string()}), kOk);
  EXPECT_NE(out_.str().find("PASS monotone-conductor"), std::string::npos);
  EXPECT_EQ(run({"verify", "--config", cfg, "--select", "koch", "--out", (dir_ / "k").string()}), kOk);
  EXPECT_TRUE(fs::exists(dir_ / "k" / "koch.csv"));
  EXPECT_EQ(run({"verify", "--config", cfg, "--select", "regularity-slit", "--out", (dir_ / "s").string()}),
            kPropertyViolated);
  const int rc = run({"sequence", "--config", cfg, "--out", (dir_ / "q").string()});
  EXPECT_TRUE(rc == kOk || rc == kPropertyViolated) << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "q" / "sequence.csv"));
}
