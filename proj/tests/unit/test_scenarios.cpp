#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "elcap_cli/commands.hpp"
#include "elcap_cli/config.hpp"

using namespace elcap::cli;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = ELCAP_SCENARIO_DIR;

// energy.txt holds one "key value" pair per line
std::map<std::string, double> identity_energy(const std::string& name) {
  const fs::path out = fs::temp_directory_path() / ("elcap_scenario_" + name);
  fs::remove_all(out);
  const std::string config = kScenarios + "/" + name + ".conf";
  const std::string dir = out.string();
  std::vector<const char*> argv{"elcap", "--config", config.c_str(), "--out", dir.c_str(), "energy"};
  std::ostringstream o, e;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  EXPECT_EQ(rc, 0) << e.str();
  std::map<std::string, double> values;
  std::ifstream in(out / "energy.txt");
  std::string key, value;
  while (in >> key >> value) {
    try {
      values[key] = std::stod(value);
    } catch (const std::exception&) {
    }
  }
  fs::remove_all(out);
  return values;
}

ConfigFile expected(const std::string& name) { return ConfigFile::load(kScenarios + "/expected/" + name + ".expected"); }

}  // namespace

TEST(Scenario, DiskInSquareIdentityEnergyBetweenDiskBounds) {
  const ConfigFile exp = expected("disk_in_square_f2");
  const auto v = identity_energy("disk_in_square_f2");
  ASSERT_TRUE(v.count("total"));
  EXPECT_DOUBLE_EQ(v.at("elastic"), 0.0);
  EXPECT_GE(v.at("total"), std::stod(exp.get("identity_total_min")));
  EXPECT_LE(v.at("total"), std::stod(exp.get("identity_total_max")));
}

TEST(Scenario, BallInCubeIdentityCapacityMatchesCube) {
  const ConfigFile exp = expected("ball_in_cube_f1");
  const auto v = identity_energy("ball_in_cube_f1");
  ASSERT_TRUE(v.count("capacity"));
  const double ref = std::stod(exp.get("capacity"));
  EXPECT_LE(std::abs(v.at("capacity") / ref - 1.0), std::stod(exp.get("rel_tol"))) << v.at("capacity");
  EXPECT_NEAR(v.at("total"), 0.5 / v.at("capacity"), 1e-12);
}
