#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "elcap/error.hpp"
#include "elcap_cli/config.hpp"

namespace elcap::cli {

/// Process exit codes; stable across releases.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigInvalid = 2,
  kPrecondition = 3,
  kSolverDiverged = 4,
  kIo = 5,
  kInfiniteEnergy = 6,
  kPropertyViolated = 7,
};

int exit_code_for(ErrorCode code);

/// Bad command line or selector; maps to kUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommandOptions {
  std::string out_dir;      ///< overrides output.dir when nonempty
  std::string deformation;  ///< energy: overrides body.deformation when nonempty
  std::string selector;     ///< verify: overrides verify.select when nonempty
};

/// Each command computes everything first and writes its files only on
/// success. Returns an ExitCode; throws elcap::Error on failures.
int cmd_capacity(const ScenarioConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_energy(const ScenarioConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_minimize(const ScenarioConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_verify(const ScenarioConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_sequence(const ScenarioConfig& cfg, const CommandOptions& opt, std::ostream& log);

/// True for selectors accepted by cmd_verify.
bool known_selector(const std::string& selector);

/// Full command line front end.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace elcap::cli
