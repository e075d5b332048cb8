#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "elcap/energy.hpp"

namespace elcap {

enum class OptimizerMethod { PatternSearch, GradientHybrid };
std::string to_string(OptimizerMethod m);
OptimizerMethod optimizer_method_from_string(const std::string& s);

struct OptimizerConfig {
  OptimizerMethod method = OptimizerMethod::PatternSearch;
  double initial_step = 0.02;
  double step_shrink = 0.5;
  double min_step = 1e-4;
  int max_iterations = 5000;
  /// Candidate moves of vertices that shape the images are screened with a
  /// fresh capacity solve every this many iterations; in between the
  /// electrostatic term is frozen during screening.
  int capacity_refresh = 1;
  std::uint64_t seed = 1;
  /// Stop when this many consecutive iterations accept nothing after the
  /// step has stopped shrinking; 0 disables the check.
  int stagnation_iterations = 0;
  /// Smoothing radius (in cells) for the boundary flux used by the shape force.
  double flux_window = 2.0;

  /// Throws InvalidArgument unless 0 < min_step < initial_step,
  /// 0 < step_shrink < 1, max_iterations >= 0 and capacity_refresh >= 1.
  void validate() const;
};

enum class Termination { StepConverged, IterationCap, Stagnation };
std::string to_string(Termination t);

struct TrajectoryEntry {
  int iteration = 0;
  EnergyBreakdown energy;
  double step = 0.0;
  /// Largest vertex displacement from the previous accepted iterate.
  double max_displacement = 0.0;
};

struct Trajectory {
  /// The start followed by every accepted iterate.
  std::vector<TrajectoryEntry> iterates;
  Deformation final_deformation;
  Termination termination = Termination::StepConverged;
  int iterations = 0;

  std::size_t accepted_steps() const noexcept { return iterates.empty() ? 0 : iterates.size() - 1; }
};

/// Descent on the total energy over admissible deformations. Only strict
/// decreases of the fully re-evaluated energy are accepted, and only for
/// iterates with positive dets and no overlapping elements. Throws
/// Inadmissible when def0 is not admissible and InfeasibleStart when its
/// energy is infinite.
Trajectory minimize(const Deformation& def0, const MaterialModel& model, double charge, FunctionalKind kind,
                    const EulerianGrid& grid, const CapacitySchedule& schedule, const OptimizerConfig& config);

/// -grad(elastic) plus the shape force Q^2 / (2 cap^2) |grad v|^2 n A_v on
/// vertices of the deformed conductor boundary, where n is the outward
/// normal and A_v the share of boundary measure at the vertex. Zero on
/// clamped vertices.
std::vector<Vec> gradient_step_direction(const Deformation& def, const MaterialModel& model, double charge,
                                         const CapacityResult& capacity, double flux_window = 2.0);

/// Columns: iteration, elastic, capacity, electrostatic, total, step,
/// max_displacement.
void write_trajectory_csv(std::ostream& out, const Trajectory& t);

}  // namespace elcap
