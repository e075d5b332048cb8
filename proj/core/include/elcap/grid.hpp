#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "elcap/linalg.hpp"

namespace elcap {

using CellIndex = std::array<int, 3>;

/// Uniform Cartesian background grid with isotropic spacing.
///
/// Cell (i, j, k) spans [origin + (i, j, k) h, origin + (i+1, j+1, k+1) h]
/// and is represented by its center. Linear indices run x fastest, then y,
/// then z. In 2D the third extent is 1.
class EulerianGrid {
 public:
  EulerianGrid(int dim, const Vec& origin, double spacing, CellIndex dims);

  /// Smallest grid of spacing h whose interior contains the box [lo, hi] with
  /// `margin` additional cells on every side.
  static EulerianGrid covering(const Vec& lo, const Vec& hi, double h, int margin = 2);

  /// Grid of n cells per axis centered at `center` with spacing h.
  static EulerianGrid centered(const Vec& center, double h, int cells_per_axis, int dim);

  int dim() const noexcept { return dim_; }
  const Vec& origin() const noexcept { return origin_; }
  double spacing() const noexcept { return h_; }
  const CellIndex& dims() const noexcept { return dims_; }
  std::size_t cell_count() const noexcept { return count_; }
  double cell_volume() const noexcept;

  std::size_t index(const CellIndex& c) const noexcept {
    return static_cast<std::size_t>(c[0]) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(c[1]) +
                static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(c[2]));
  }
  CellIndex coords(std::size_t idx) const noexcept;
  bool in_range(const CellIndex& c) const noexcept;

  Vec center(const CellIndex& c) const;
  Vec center(std::size_t idx) const { return center(coords(idx)); }
  Vec lower() const { return origin_; }
  Vec upper() const;

  /// Cell containing p, if p lies in the grid box.
  std::optional<CellIndex> cell_of(const Vec& p) const;

  /// True if the cell lies in the outermost layer of the grid.
  bool on_outer_layer(const CellIndex& c) const noexcept;

  /// Range of cells whose centers may lie in the box [lo, hi] (clamped).
  std::pair<CellIndex, CellIndex> cell_range(const Vec& lo, const Vec& hi) const;

  bool operator==(const EulerianGrid& other) const;

 private:
  int dim_;
  Vec origin_;
  double h_;
  CellIndex dims_;
  std::size_t count_;
};

enum class SetKind { Compact, Open };

std::string to_string(SetKind kind);
SetKind set_kind_from_string(const std::string& s);

/// Rasterized set: a cell belongs to the set iff its center does.
class SetMask {
 public:
  SetMask(EulerianGrid grid, SetKind kind);
  SetMask(EulerianGrid grid, SetKind kind, std::vector<std::uint8_t> occupancy);

  static SetMask from_predicate(const EulerianGrid& grid, SetKind kind,
                                const std::function<bool(const Vec&)>& inside);

  const EulerianGrid& grid() const noexcept { return grid_; }
  SetKind kind() const noexcept { return kind_; }
  std::span<const std::uint8_t> data() const noexcept { return occ_; }

  bool at(std::size_t idx) const noexcept { return occ_[idx] != 0; }
  bool at(const CellIndex& c) const noexcept { return occ_[grid_.index(c)] != 0; }
  void set(std::size_t idx, bool value) noexcept { occ_[idx] = value ? 1 : 0; }

  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  double volume() const noexcept { return static_cast<double>(count()) * grid_.cell_volume(); }
  bool touches_outer_layer() const noexcept;

  SetMask with_kind(SetKind kind) const;
  SetMask complement(SetKind kind) const;
  SetMask unite(const SetMask& other) const;
  SetMask intersect(const SetMask& other) const;
  SetMask minus(const SetMask& other) const;
  bool subset_of(const SetMask& other) const;
  std::size_t symmetric_difference(const SetMask& other) const;

  bool operator==(const SetMask& other) const;

 private:
  void require_same_grid(const SetMask& other) const;

  EulerianGrid grid_;
  SetKind kind_;
  std::vector<std::uint8_t> occ_;
};

/// One double per cell. Used for distances and for capacitary potentials.
class ScalarField {
 public:
  ScalarField(EulerianGrid grid, double fill = 0.0);
  ScalarField(EulerianGrid grid, std::vector<double> values);

  const EulerianGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t idx) const noexcept { return values_[idx]; }
  double& operator[](std::size_t idx) noexcept { return values_[idx]; }
  double at(const CellIndex& c) const noexcept { return values_[grid_.index(c)]; }

  /// Value of the cell containing p (nearest-cell sampling).
  std::optional<double> sample(const Vec& p) const;

  bool operator==(const ScalarField& other) const;

 private:
  EulerianGrid grid_;
  std::vector<double> values_;
};

using DistanceField = ScalarField;
using PotentialField = ScalarField;

// Portable storage: a short text header followed by a flat byte (mask) or
// little-endian float64 (field) array in linear index order.
void write_mask(std::ostream& out, const SetMask& mask);
SetMask read_mask(std::istream& in);
void write_field(std::ostream& out, const ScalarField& field);
ScalarField read_field(std::istream& in);

void save_mask(const std::string& path, const SetMask& mask);
SetMask load_mask(const std::string& path);
void save_field(const std::string& path, const ScalarField& field);
ScalarField load_field(const std::string& path);

}  // namespace elcap
