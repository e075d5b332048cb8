#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "elcap/capacity.hpp"
#include "elcap/deformation.hpp"
#include "elcap/energy.hpp"

namespace elcap {

/// One checked instance. For pair properties `value` is the capacity that
/// must not exceed `reference`; for chains `index` is the chain position,
/// `value` the chain capacity and `reference` the direct capacity of the
/// limit set. `excess` is the amount by which the property failed (0 if it
/// held).
struct TrialRecord {
  int trial = 0;
  int index = 0;
  double value = 0.0;
  double reference = 0.0;
  double excess = 0.0;
};

struct PropertyReport {
  std::string id;
  std::string description;
  int trials = 0;
  int violations = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  std::vector<TrialRecord> records;
  std::vector<std::string> notes;

  bool passed() const noexcept { return violations == 0; }
  /// Adds a record; counts a violation when excess > tolerance.
  void record(const TrialRecord& r);
  /// Adds a record with an explicit verdict.
  void add(const TrialRecord& r, bool violated);
};

// ---------------------------------------------------------------------------
// Monotonicity and continuity of the discrete capacity

struct MonotonicityOptions {
  int trials = 100;
  std::uint64_t seed = 1;
  double h = 1.0 / 128.0;
  double box_half_width = 0.5;  ///< sets live in [-w, w]^2
  int chain_length = 6;         ///< eps_k = eps0 2^-k for k < chain_length
  double eps0_cells = 4.0;      ///< eps0 in units of h
  double residual_factor = 2.0; ///< tolerance = factor * solver tolerance * value
};

/// Property ids, in suite order.
const std::vector<std::string>& monotonicity_property_ids();

/// Runs one sub-property: "monotone-conductor", "monotone-domain",
/// "outer-continuity", "inner-continuity" or "domain-exhaustion".
PropertyReport check_monotonicity_property(const std::string& id, const MonotonicityOptions& options);

std::vector<PropertyReport> check_monotonicity_suite(const MonotonicityOptions& options);

// ---------------------------------------------------------------------------
// Koch snowflake prefractals

using Point2 = std::array<double, 2>;

/// Counter-clockwise vertices of the level-j prefractal of the snowflake
/// built on an equilateral triangle with the given side and centroid.
std::vector<Point2> koch_polygon(int level, double side, const Point2& center);

/// Classical area (sqrt(3)/4) side^2 (1 + (1/3) sum_{k=1}^{j} (4/9)^(k-1)).
double koch_area(int level, double side);

/// Largest level whose segments (side / 3^j) span at least two cells.
int koch_max_level(double side, double h);

/// Cells whose centers lie inside the polygon (even-odd rule).
SetMask rasterize_polygon(const std::vector<Point2>& polygon, const EulerianGrid& grid, SetKind kind);

/// Masks of levels 0..max_level. Throws FeatureBelowResolution when
/// max_level exceeds koch_max_level.
std::vector<SetMask> koch_prefractal_masks(int max_level, const EulerianGrid& grid, double side = 1.0,
                                           const Point2& center = {0.0, 0.0});

struct KochLevel {
  int level = 0;
  double mask_area = 0.0;
  double series_area = 0.0;
  double capacity = 0.0;
  double increment = 0.0;        ///< capacity - previous capacity (0 for level 0)
  double increment_ratio = 0.0;  ///< increment / previous increment (levels >= 2)
  bool nested = true;            ///< previous mask is a subset of this one
};

struct KochStudy {
  std::vector<KochLevel> levels;
  /// Checks nesting, strictly increasing capacities, increment ratios < 1
  /// from level 2 and the area series within `area_tolerance`.
  PropertyReport report;
};

struct KochOptions {
  int max_level = 5;
  double h = 1.0 / 512.0;
  double side = 1.0;
  double enclosing_radius = 0.8;
  double area_tolerance = 0.01;
  SolverOptions solver;
};

/// Prefractals are placed with a small irrational offset so no cell center
/// lies on an edge; capacities are relative to the disk of radius
/// enclosing_radius around the centroid.
KochStudy run_koch_study(const KochOptions& options);

// ---------------------------------------------------------------------------
// Continuity of the capacity along converging deformations

struct SequenceRecord {
  int n = 0;
  double delta = 0.0;  ///< max vertex displacement to the limit deformation
  double capacity = 0.0;
  double gap = 0.0;    ///< capacity - limit capacity (signed)
};

/// Mean over r in {0.2, 0.25, 0.3} of |cap_h(disk r; disk 1) - 2 pi / ln(1/r)|
/// divided by h * 2 pi r, on a grid of spacing h.
double calibrate_grid_constant(double h, const SolverOptions& solver = {});

/// Length (d = 2) or area (d = 3) of the deformed conductor boundary.
double conductor_perimeter(const Deformation& def);

struct SemicontinuityOptions {
  double decay = 0.5;
  int n_max = 8;
  /// Constant C in tau(h) = C h P; <= 0 calibrates it with calibrate_grid_constant.
  double grid_constant = 0.0;
  CapacitySchedule schedule;
};

struct SemicontinuityResult {
  std::vector<SequenceRecord> sequence;
  double limit_capacity = 0.0;
  double perimeter = 0.0;
  double grid_constant = 0.0;
  double tau = 0.0;
  /// Passes when |gap| at the last index is at most tau; also counts
  /// admissibility failures.
  PropertyReport report;
};

/// y^n = limit + delta_n bump with delta_n = amplitude * decay^n, n = 0..n_max.
/// F2 uses cap(y(conductor); y(body)) on `grid`, F1 the self-capacity.
SemicontinuityResult check_semicontinuity(const Deformation& limit, const Bump& bump, FunctionalKind kind,
                                          const EulerianGrid& grid, const SemicontinuityOptions& options = {});

// ---------------------------------------------------------------------------
// Regularity of images

/// Checks every member's regularity density against b (violations recorded
/// with index = member) and the limit against b - slack * h / r0 (index =
/// -1).
PropertyReport check_regularity_closure(const std::vector<SetMask>& members, const SetMask& limit, double b, double r0,
                                        double slack = 1.0);

/// Disk of radius `radius` minus the slot {x > 0, |y| < w_n / 2} with
/// w_n = w0 2^-n (n = 0..count-1), followed by the limit slit one cell wide.
std::vector<SetMask> slit_sequence(const EulerianGrid& grid, double radius, double w0, int count);

// ---------------------------------------------------------------------------
// Serialization

/// Structured text block for one report.
void write_report(std::ostream& out, const PropertyReport& report);
/// CSV of per-trial records: property,trial,index,value,reference,excess.
void write_report_csv(std::ostream& out, const std::vector<PropertyReport>& reports);
/// CSV: n,delta,capacity,gap.
void write_sequence_csv(std::ostream& out, const std::vector<SequenceRecord>& sequence);
/// CSV: level,mask_area,series_area,capacity,increment,increment_ratio,nested.
void write_koch_csv(std::ostream& out, const KochStudy& study);

}  // namespace elcap
