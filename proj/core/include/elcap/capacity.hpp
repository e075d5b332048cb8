#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "elcap/grid.hpp"

namespace elcap {

struct SolverOptions {
  double tolerance = 1e-10;  ///< relative residual
  int max_iterations = 0;    ///< 0 selects 50 * sqrt(free cells)
  int smoothing_sweeps = 2;
};

/// Checks the pair (E, D): same grid, E nonempty, E inside D, and every E
/// cell separated from the complement of D (and the grid boundary) by at
/// least one free cell across each face.
void validate_capacity_problem(const SetMask& conductor, const SetMask& domain);

struct ExtrapolationPair {
  double radius = 0.0;
  double capacity = 0.0;
};

struct CapacityResult {
  double value = 0.0;
  PotentialField potential;
  double residual = 0.0;
  int iterations = 0;
  /// Raw (R, cap(E; B_R)) pairs for self-capacity; empty otherwise.
  std::vector<ExtrapolationPair> extrapolation;
  std::vector<std::string> warnings;
  /// The pair the potential was solved for (the last radius for self-capacity).
  SetMask conductor;
  SetMask domain;
};

/// Discrete capacitary potential: v = 1 on E, v = 0 off D, harmonic for the
/// 2d+1 point stencil on D \ E. Throws DegenerateSeparation or
/// SolverDiverged.
PotentialField solve_potential(const SetMask& conductor, const SetMask& domain, const SolverOptions& options = {});

/// h^(d-2) times the sum over grid faces touching D of the squared potential
/// jump. Faces on the grid boundary see the value 0 outside.
double dirichlet_energy(const PotentialField& potential, const SetMask& domain);

/// cap(E; D) for a bounded open D.
CapacityResult relative_capacity(const SetMask& conductor, const SetMask& domain, const SolverOptions& options = {});

/// Produces the conductor on a given grid.
using ConductorRasterizer = std::function<SetMask(const EulerianGrid&)>;

struct Enclosure {
  Vec center;
  double radius = 0.0;
};

/// Center of the bounding box of the occupied cells and the largest distance
/// from it to an occupied cell corner.
Enclosure enclosing_ball(const SetMask& mask);

/// {2, 4, 8} times the given circumradius.
std::vector<double> default_radii(double circumradius);

/// Self-capacity in three dimensions by exhaustion with balls B_R(center).
/// Each radius gets its own grid with `cells_per_axis` cells, so the spacing
/// grows with R. 1 / cap(E; B_R) is fitted linearly in 1 / R over the last
/// three radii and the limit R -> infinity is returned as `value`.
CapacityResult self_capacity(const ConductorRasterizer& conductor, const Vec& center, const std::vector<double>& radii,
                             int cells_per_axis = 96, const SolverOptions& options = {});

/// Same, for a conductor given as a mask; each grid samples the mask at its
/// cell centers. Empty `radii` selects default_radii(enclosing_ball(E)).
CapacityResult self_capacity(const SetMask& conductor, std::vector<double> radii = {}, int cells_per_axis = 96,
                             const SolverOptions& options = {});

/// One grid face between a conductor cell and a free cell.
struct FluxSample {
  std::size_t conductor_cell = 0;
  std::size_t free_cell = 0;
  Vec point;   ///< face midpoint
  Vec normal;  ///< unit axis vector pointing out of the conductor
  /// One-sided difference quotient (1 - v_free) / h. The sum of these times
  /// h^(d-1) equals the capacity value.
  double normal_derivative = 0.0;
  /// Outward unit normal of the conductor surface near the face.
  Vec surface_normal;
  /// |grad v|^2 on the conductor surface near the face.
  double density = 0.0;
};

/// Per-face flux field. Staircase faces are averaged with weights
/// (1 - t^2)^2, t = distance / (window * h): the weighted flux divided by the
/// length of the weighted vector area gives the normal derivative per unit
/// true surface area, whose square is the density.
std::vector<FluxSample> boundary_flux_density(const CapacityResult& result, double window = 10.0);

/// Sum of normal_derivative * h^(d-1) over all samples.
double total_flux(const std::vector<FluxSample>& samples, const EulerianGrid& grid);

/// Range of potential values seen by every solve in this process.
struct PotentialStatistics {
  std::size_t solves = 0;
  double min_value = 0.0;
  double max_value = 0.0;
};
PotentialStatistics potential_statistics();
void reset_potential_statistics();

/// Structured text record: value, residual, iterations, extrapolation pairs
/// and warnings.
void write_capacity_record(std::ostream& out, const CapacityResult& result);

struct CapacityRecord {
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::vector<ExtrapolationPair> extrapolation;
  std::vector<std::string> warnings;
};
CapacityRecord read_capacity_record(std::istream& in);

}  // namespace elcap
