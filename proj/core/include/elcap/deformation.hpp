#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "elcap/grid.hpp"
#include "elcap/mesh.hpp"

namespace elcap {

/// Continuous piecewise-affine map given by deformed vertex positions.
/// Clamped vertices always sit at their reference positions.
class Deformation {
 public:
  /// The identity map.
  explicit Deformation(std::shared_ptr<const ReferenceDomain> domain);
  Deformation(std::shared_ptr<const ReferenceDomain> domain, std::vector<Vec> positions);

  const ReferenceDomain& domain() const noexcept { return *domain_; }
  const std::shared_ptr<const ReferenceDomain>& domain_ptr() const noexcept { return domain_; }
  int dim() const noexcept { return domain_->dim(); }

  const std::vector<Vec>& positions() const noexcept { return positions_; }
  const Vec& position(std::size_t v) const { return positions_[v]; }
  /// Moves a free vertex. Throws InvalidArgument for clamped vertices.
  void set_position(std::size_t v, const Vec& p);

  double max_displacement_from(const Deformation& other) const;

 private:
  std::shared_ptr<const ReferenceDomain> domain_;
  std::vector<Vec> positions_;
};

/// Constant gradient of the deformation on element e.
Mat element_gradient(const Deformation& def, std::size_t e);

/// det of the element gradient, computed from the deformed edge matrix.
double element_det(const Deformation& def, std::size_t e);

/// Outer p-distortion |F| / det(F)^(1/p) per element (Frobenius norm);
/// zero where det F <= 0.
std::vector<double> outer_distortion(const Deformation& def, double p);

struct AdmissibilityReport {
  double min_det = 0.0;
  bool all_dets_positive = false;
  double distortion_order = 0.0;
  double max_distortion_p = 0.0;
  std::size_t overlap_cells = 0;
  double gamma0_violation = 0.0;

  bool admissible() const noexcept {
    return all_dets_positive && overlap_cells == 0 && gamma0_violation == 0.0;
  }
};

/// Diagnostic; never throws. `p <= 0` selects p = d.
AdmissibilityReport check_admissibility(const Deformation& def, const EulerianGrid& grid, double p = 0.0);

enum class ImageRegion { ConductorClosure, WholeDomain };

/// Cells whose centers lie in the deformed region. The conductor image is a
/// compact mask padded by every cell within h/2 of the deformed conductor;
/// the body image is an open mask.
SetMask rasterize_image(const Deformation& def, ImageRegion region, const EulerianGrid& grid);

/// Smooth compactly supported perturbation, phi(t) = (1 - t^2)^2 for
/// t = |x - center| / radius < 1.
struct Bump {
  enum class Mode { Translate, Radial };
  Vec center;
  double radius = 0.5;
  double amplitude = 0.0;
  Mode mode = Mode::Translate;
  Vec direction;  ///< unit direction for Translate

  /// Displacement at x: amplitude * phi * direction (Translate) or
  /// amplitude * phi * (x - center) / radius (Radial).
  Vec displacement(const Vec& x) const;
};

/// base + bump evaluated at reference positions; clamped vertices untouched.
Deformation perturbed(const Deformation& base, const Bump& bump);

void write_deformation(std::ostream& out, const Deformation& def);
Deformation read_deformation(std::istream& in, std::shared_ptr<const ReferenceDomain> domain);
void save_deformation(const std::string& path, const Deformation& def);
Deformation load_deformation(const std::string& path, std::shared_ptr<const ReferenceDomain> domain);

}  // namespace elcap
