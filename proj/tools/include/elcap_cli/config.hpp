#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "elcap/optimize.hpp"
#include "elcap/verify.hpp"

namespace elcap::cli {

/// Flat "key = value" text with dotted section names. '#' starts a comment.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& source = "<config>");
  static ConfigFile load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  std::vector<std::string> keys() const;
  const std::string& source() const noexcept { return source_; }
  int line_of(const std::string& key) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::string source_;
  std::map<std::string, Entry> entries_;
};

/// Ball {|x - center| < radius} used by standalone capacity problems.
struct BallSpec {
  Vec center;
  double radius = 0.0;
};

struct VerifySettings {
  std::string selector = "monotonicity";
  MonotonicityOptions monotonicity;
  KochOptions koch;
  SemicontinuityOptions sequence;
  double regularity_b = 0.3;
  double regularity_r0 = 0.1;
  double regularity_slack = 1.0;
  int regularity_members = 6;
};

struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int dim = 2;

  // Body: a built-in demo mesh or a mesh file, optionally deformed.
  std::string demo;
  int level = 1;
  std::string mesh_path;
  std::string deformation_path;

  MaterialModel material;
  double charge = 0.0;
  FunctionalKind kind = FunctionalKind::F2;

  bool has_grid_box = false;
  Vec grid_lo, grid_hi;
  double grid_h = 1.0 / 64.0;
  CapacitySchedule schedule;

  // Standalone capacity problem on balls, used when no body is configured.
  std::string capacity_mode = "relative";
  BallSpec conductor;
  BallSpec domain;

  OptimizerConfig optimizer;
  std::optional<Bump> bump;
  VerifySettings verify;

  bool has_body() const { return !demo.empty() || !mesh_path.empty(); }
};

/// Validates every field and throws ConfigInvalid listing all problems, one
/// "key: message" per line. Unknown keys are rejected.
ScenarioConfig load_scenario(const ConfigFile& file);

/// Every accepted key with a one-line description, for documentation.
const std::vector<std::pair<std::string, std::string>>& config_schema();

}  // namespace elcap::cli
