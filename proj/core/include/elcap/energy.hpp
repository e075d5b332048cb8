#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "elcap/capacity.hpp"
#include "elcap/deformation.hpp"
#include "elcap/mesh.hpp"

namespace elcap {

/// An energy that is either a finite number or +infinity.
class EnergyValue {
 public:
  constexpr EnergyValue() = default;
  constexpr explicit EnergyValue(double v) : value_(v) {}
  static constexpr EnergyValue infinite() {
    EnergyValue e;
    e.infinite_ = true;
    return e;
  }

  constexpr bool is_finite() const noexcept { return !infinite_; }
  /// The finite value; throws InvalidArgument on +infinity.
  double value() const;
  /// The finite value or `fallback`.
  constexpr double value_or(double fallback) const noexcept { return infinite_ ? fallback : value_; }

  friend EnergyValue operator+(EnergyValue a, EnergyValue b) {
    if (a.infinite_ || b.infinite_) return infinite();
    return EnergyValue(a.value_ + b.value_);
  }
  friend bool operator<(EnergyValue a, EnergyValue b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }
  friend bool operator==(EnergyValue a, EnergyValue b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

std::string to_string(EnergyValue e);
EnergyValue energy_from_string(const std::string& s);

struct RegionParameters {
  double a = 1.0;  ///< coefficient of |F|^q
  double b = 1.0;  ///< coefficient of |F|^(ds) / det(F)^s
  double c = 1.0;  ///< coefficient of (det F - 1)^2
  /// Dead-load force density; empty means zero.
  Vec force;
};

/// W(x, F) = a (|F|^q - d^(q/2)) + b (|F|^(ds) / det(F)^s - d^(ds/2))
///           + c (det F - 1)^2, and +infinity for det F <= 0.
struct MaterialModel {
  RegionParameters conductor;
  RegionParameters insulator;
  double q = 4.0;
  double s = 2.5;

  /// q = d + 1, s = d, unit coefficients in both regions.
  static MaterialModel standard(int dim);

  const RegionParameters& of(Region r) const { return r == Region::Conductor ? conductor : insulator; }

  /// Throws InvalidArgument unless q > d, s > d - 1, a, b > 0, c >= 0 and
  /// every force has d components (or none).
  void validate(int dim) const;

  /// A constant c_W with W >= c_W (|F|^q + |F|^(ds) / det^s) - 1 / c_W:
  /// min(a, b, 1 / (a d^(q/2) + b d^(ds/2))) over both regions.
  double growth_constant(int dim) const;
};

EnergyValue density(const MaterialModel& model, Region region, const Mat& F);

/// dW/dF; requires det F > 0.
Mat stress(const MaterialModel& model, Region region, const Mat& F);

/// Sum over elements of vol_e W(F_e) minus the dead-load work
/// sum_e f_e . integral_e (y - x).
EnergyValue elastic_energy(const Deformation& def, const MaterialModel& model);

/// Derivative of elastic_energy with respect to the vertex positions; rows of
/// clamped vertices are zero. Throws Inadmissible when some det <= 0.
std::vector<Vec> elastic_gradient(const Deformation& def, const MaterialModel& model);

/// Elastic energy of the elements around one vertex.
EnergyValue local_elastic_energy(const Deformation& def, const MaterialModel& model, std::size_t vertex);

enum class FunctionalKind { F1, F2 };
std::string to_string(FunctionalKind kind);
FunctionalKind functional_kind_from_string(const std::string& s);

/// How the capacity term is computed.
struct CapacitySchedule {
  std::vector<double> radii;  ///< F1 truncation radii; empty selects the default schedule
  int cells_per_axis = 96;    ///< F1 cells per axis on each truncation grid
  SolverOptions solver;
  double distortion_p = 0.0;  ///< order for the distortion report; <= 0 selects d
};

struct EnergyBreakdown {
  FunctionalKind kind = FunctionalKind::F2;
  double charge = 0.0;
  EnergyValue elastic;
  double capacity_value = 0.0;
  EnergyValue electrostatic;
  EnergyValue total;
  AdmissibilityReport admissibility;
  /// Empty for a finite total, otherwise the error code and message that made
  /// it infinite.
  std::string reason;
};

struct EnergyEvaluation {
  EnergyBreakdown breakdown;
  std::optional<CapacityResult> capacity;
};

/// Capacity of the deformed conductor: relative to the deformed body for F2,
/// the extrapolated self-capacity for F1. Throws on degenerate images.
CapacityResult conductor_capacity(const Deformation& def, FunctionalKind kind, const EulerianGrid& grid,
                                  const CapacitySchedule& schedule = {});

/// F1: elastic + Q^2 / (2 cap(y(conductor))), three dimensions only.
/// F2: elastic + Q^2 / (2 cap(y(conductor); y(body))).
/// Failures of rasterization or of the solve give total = +infinity with a
/// reason instead of throwing. F1 in two dimensions throws InvalidArgument.
/// For F2, `previous` is reused without a new solve when both rasterized
/// images coincide with its masks.
EnergyEvaluation evaluate_energy(const Deformation& def, const MaterialModel& model, double charge,
                                 FunctionalKind kind, const EulerianGrid& grid,
                                 const CapacitySchedule& schedule = {}, const CapacityResult* previous = nullptr);

EnergyBreakdown total_energy(const Deformation& def, const MaterialModel& model, double charge, FunctionalKind kind,
                             const EulerianGrid& grid, const CapacitySchedule& schedule = {});

/// Flat "key value" lines.
void write_energy_record(std::ostream& out, const EnergyBreakdown& e);

}  // namespace elcap
