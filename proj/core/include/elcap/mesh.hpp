#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "elcap/linalg.hpp"

namespace elcap {

enum class Region : std::uint8_t { Insulator = 0, Conductor = 1 };

/// Vertex indices of a triangle (first three used) or tetrahedron.
using Simplex = std::array<int, 4>;

/// A boundary facet (segment in 2D, triangle in 3D) with the element it
/// belongs to.
struct Facet {
  std::array<int, 3> v{-1, -1, -1};
  int element = -1;
};

/// Conforming simplicial mesh of the reference body Omega, tagged into
/// conductor and insulator elements, with clamped vertices Gamma0.
class ReferenceDomain {
 public:
  ReferenceDomain(int dim, std::vector<Vec> vertices, std::vector<Simplex> elements,
                  std::vector<Region> regions, std::vector<int> gamma0);

  int dim() const noexcept { return dim_; }
  std::size_t vertex_count() const noexcept { return vertices_.size(); }
  std::size_t element_count() const noexcept { return elements_.size(); }

  const Vec& vertex(std::size_t i) const { return vertices_[i]; }
  const std::vector<Vec>& vertices() const noexcept { return vertices_; }
  const Simplex& element(std::size_t e) const { return elements_[e]; }
  Region region(std::size_t e) const { return regions_[e]; }

  std::span<const int> gamma0() const noexcept { return gamma0_; }
  bool is_clamped(std::size_t v) const { return clamped_[v] != 0; }
  std::vector<int> free_vertices() const;

  /// Inverse of the reference edge matrix [x1 - x0, ..., xd - x0].
  const Mat& reference_inverse(std::size_t e) const { return ref_inverse_[e]; }
  double reference_volume(std::size_t e) const { return ref_volume_[e]; }
  double total_volume() const noexcept;
  double region_volume(Region r) const noexcept;

  std::span<const int> elements_of_vertex(std::size_t v) const;

  /// Facets on the boundary of Omega.
  const std::vector<Facet>& outer_facets() const noexcept { return outer_facets_; }
  /// Facets separating conductor from insulator, owned by the conductor side.
  const std::vector<Facet>& conductor_facets() const noexcept { return conductor_facets_; }

  /// Vertices whose motion can change the deformed conductor or body shape.
  const std::vector<int>& interface_vertices() const noexcept { return interface_vertices_; }

 private:
  void build_topology();

  int dim_;
  std::vector<Vec> vertices_;
  std::vector<Simplex> elements_;
  std::vector<Region> regions_;
  std::vector<int> gamma0_;
  std::vector<std::uint8_t> clamped_;
  std::vector<Mat> ref_inverse_;
  std::vector<double> ref_volume_;
  std::vector<int> vertex_elem_offsets_;
  std::vector<int> vertex_elems_;
  std::vector<Facet> outer_facets_;
  std::vector<Facet> conductor_facets_;
  std::vector<int> interface_vertices_;
};

/// Built-in demo meshes. `level` in {1, 2, 3} selects the refinement.
namespace demo {

/// Omega = disk of radius 1, conductor = disk of radius 0.25, whole outer
/// circle clamped.
ReferenceDomain disk_in_disk(int level);

/// Omega = square [-1, 1]^2, conductor = disk of radius 0.25.
ReferenceDomain disk_in_square(int level);

/// Omega = cube [-1, 1]^3, conductor = elements with centroid inside the
/// ball of radius 0.5. At level 1 these fill the cube [-0.5, 0.5]^3.
ReferenceDomain ball_in_cube(int level);

/// Lookup by id: "disk_in_disk", "disk_in_square", "ball_in_cube".
ReferenceDomain by_name(const std::string& name, int level);

}  // namespace demo

void write_mesh(std::ostream& out, const ReferenceDomain& mesh);
ReferenceDomain read_mesh(std::istream& in);
void save_mesh(const std::string& path, const ReferenceDomain& mesh);
ReferenceDomain load_mesh(const std::string& path);

}  // namespace elcap
