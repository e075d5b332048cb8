#include "elcap/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "elcap/error.hpp"
#include "text_io.hpp"

namespace elcap {

Deformation::Deformation(std::shared_ptr<const ReferenceDomain> domain)
    : domain_(std::move(domain)), positions_(domain_->vertices()) {}

Deformation::Deformation(std::shared_ptr<const ReferenceDomain> domain, std::vector<Vec> positions)
    : domain_(std::move(domain)), positions_(std::move(positions)) {
  if (positions_.size() != domain_->vertex_count()) {
    throw Error(ErrorCode::InvalidArgument, "one position per vertex required");
  }
  for (std::size_t v = 0; v < positions_.size(); ++v) {
    if (positions_[v].size() != domain_->dim()) {
      throw Error(ErrorCode::InvalidArgument, "position of wrong dimension");
    }
    if (domain_->is_clamped(v) && positions_[v] != domain_->vertex(v)) {
      throw Error(ErrorCode::InvalidArgument, "clamped vertex " + std::to_string(v) + " was moved");
    }
  }
}

void Deformation::set_position(std::size_t v, const Vec& p) {
  if (domain_->is_clamped(v)) throw Error(ErrorCode::InvalidArgument, "cannot move a clamped vertex");
  positions_[v] = p;
}

double Deformation::max_displacement_from(const Deformation& other) const {
  double m = 0.0;
  for (std::size_t v = 0; v < positions_.size(); ++v) {
    m = std::max(m, (positions_[v] - other.positions_[v]).norm());
  }
  return m;
}

namespace {

Mat deformed_edges(const Deformation& def, std::size_t e) {
  const int d = def.dim();
  const auto& s = def.domain().element(e);
  Mat m(d, d);
  for (int j = 0; j < d; ++j) m.col(j) = def.position(s[j + 1]) - def.position(s[0]);
  return m;
}

Mat displacement_edges(const Deformation& def, std::size_t e) {
  const int d = def.dim();
  const auto& dom = def.domain();
  const auto& s = dom.element(e);
  Mat m(d, d);
  for (int j = 0; j < d; ++j) {
    m.col(j) = (def.position(s[j + 1]) - dom.vertex(s[j + 1])) - (def.position(s[0]) - dom.vertex(s[0]));
  }
  return m;
}

// Affine map onto barycentric coordinates of a deformed element.
struct DeformedSimplex {
  Vec base;
  Mat inverse;
  Vec lo, hi;
};

DeformedSimplex deformed_simplex(const Deformation& def, std::size_t e) {
  const int d = def.dim();
  const auto& s = def.domain().element(e);
  DeformedSimplex out;
  out.base = def.position(s[0]);
  out.inverse = deformed_edges(def, e).inverse();
  out.lo = out.base;
  out.hi = out.base;
  for (int k = 1; k <= d; ++k) {
    out.lo = out.lo.cwiseMin(def.position(s[k]));
    out.hi = out.hi.cwiseMax(def.position(s[k]));
  }
  return out;
}

// Smallest barycentric coordinate of x.
double min_barycentric(const DeformedSimplex& s, const Vec& x) {
  const Vec lam = s.inverse * (x - s.base);
  return std::min(1.0 - lam.sum(), lam.minCoeff());
}

double point_segment_distance(const Vec& p, const Vec& a, const Vec& b) {
  const Vec ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// Closest point on a triangle (Ericson, Real-Time Collision Detection 5.1.5).
double point_triangle_distance(const Vec& p, const Vec& a, const Vec& b, const Vec& c) {
  const Vec ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return ap.norm();
  const Vec bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return bp.norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return (p - (a + d1 / (d1 - d3) * ab)).norm();
  const Vec cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return cp.norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return (p - (a + d2 / (d2 - d6) * ac)).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return (p - (a + v * ab + w * ac)).norm();
}

template <typename F>
void for_cells_in_box(const EulerianGrid& grid, const Vec& lo, const Vec& hi, F&& f) {
  const auto [first, last] = grid.cell_range(lo, hi);
  for (int k = first[2]; k <= last[2]; ++k) {
    for (int j = first[1]; j <= last[1]; ++j) {
      for (int i = first[0]; i <= last[0]; ++i) f(CellIndex{i, j, k});
    }
  }
}

constexpr double kBaryTol = 1e-12;

}  // namespace

Mat element_gradient(const Deformation& def, std::size_t e) {
  const auto& dom = def.domain();
  if (e >= dom.element_count()) throw Error(ErrorCode::InvalidArgument, "element index out of range");
  const int d = def.dim();
  // F = I + grad(u); exactly the identity when the displacement vanishes
  return Mat::Identity(d, d) + displacement_edges(def, e) * dom.reference_inverse(e);
}

double element_det(const Deformation& def, std::size_t e) {
  return element_gradient(def, e).determinant();
}

std::vector<double> outer_distortion(const Deformation& def, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "distortion order must be >= 1");
  std::vector<double> out(def.domain().element_count(), 0.0);
  for (std::size_t e = 0; e < out.size(); ++e) {
    const Mat f = element_gradient(def, e);
    const double det = f.determinant();
    if (det > 0.0 && std::isfinite(det)) out[e] = f.norm() / std::pow(det, 1.0 / p);
  }
  return out;
}

AdmissibilityReport check_admissibility(const Deformation& def, const EulerianGrid& grid, double p) {
  AdmissibilityReport rep;
  const auto& dom = def.domain();
  const int d = def.dim();
  rep.distortion_order = p > 0.0 ? p : static_cast<double>(d);
  rep.min_det = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < dom.element_count(); ++e) {
    rep.min_det = std::min(rep.min_det, element_det(def, e));
  }
  rep.all_dets_positive = rep.min_det > 0.0;
  for (double k : outer_distortion(def, rep.distortion_order)) rep.max_distortion_p = std::max(rep.max_distortion_p, k);
  for (int v : dom.gamma0()) {
    rep.gamma0_violation = std::max(rep.gamma0_violation, (def.position(v) - dom.vertex(v)).norm());
  }
  if (grid.dim() != d) return rep;

  std::vector<std::uint8_t> hits(grid.cell_count(), 0);
  for (std::size_t e = 0; e < dom.element_count(); ++e) {
    const Mat edges = deformed_edges(def, e);
    if (edges.determinant() == 0.0) continue;
    const auto s = deformed_simplex(def, e);
    for_cells_in_box(grid, s.lo, s.hi, [&](const CellIndex& c) {
      if (min_barycentric(s, grid.center(c)) > kBaryTol) {
        auto& h = hits[grid.index(c)];
        if (h < 2) ++h;
      }
    });
  }
  rep.overlap_cells = static_cast<std::size_t>(std::count(hits.begin(), hits.end(), std::uint8_t{2}));
  return rep;
}

SetMask rasterize_image(const Deformation& def, ImageRegion region, const EulerianGrid& grid) {
  const auto& dom = def.domain();
  const int d = def.dim();
  if (grid.dim() != d) throw Error(ErrorCode::InvalidArgument, "grid and mesh dimensions differ");
  const bool conductor = region == ImageRegion::ConductorClosure;
  const double pad = conductor ? 0.5 * grid.spacing() : 0.0;

  Vec lo = Vec::Constant(d, std::numeric_limits<double>::infinity());
  Vec hi = -lo;
  for (std::size_t e = 0; e < dom.element_count(); ++e) {
    if (!(element_det(def, e) > 0.0)) {
      throw Error(ErrorCode::Inadmissible, "element " + std::to_string(e) + " has non-positive det");
    }
    if (conductor && dom.region(e) != Region::Conductor) continue;
    const auto& s = dom.element(e);
    for (int k = 0; k <= d; ++k) {
      lo = lo.cwiseMin(def.position(s[k]));
      hi = hi.cwiseMax(def.position(s[k]));
    }
  }
  const Vec glo = grid.lower(), ghi = grid.upper();
  for (int a = 0; a < d; ++a) {
    if (!(lo[a] - pad > glo[a]) || !(hi[a] + pad < ghi[a])) {
      throw Error(ErrorCode::OutOfBounds, "deformed image leaves the grid box");
    }
  }

  SetMask mask(grid, conductor ? SetKind::Compact : SetKind::Open);
  for (std::size_t e = 0; e < dom.element_count(); ++e) {
    if (conductor && dom.region(e) != Region::Conductor) continue;
    const auto s = deformed_simplex(def, e);
    for_cells_in_box(grid, s.lo, s.hi, [&](const CellIndex& c) {
      if (min_barycentric(s, grid.center(c)) >= -kBaryTol) mask.set(grid.index(c), true);
    });
  }
  if (conductor) {
    const Vec padv = Vec::Constant(d, pad);
    for (const auto& f : dom.conductor_facets()) {
      const Vec& a = def.position(f.v[0]);
      const Vec& b = def.position(f.v[1]);
      Vec flo = a.cwiseMin(b), fhi = a.cwiseMax(b);
      if (d == 3) {
        flo = flo.cwiseMin(def.position(f.v[2]));
        fhi = fhi.cwiseMax(def.position(f.v[2]));
      }
      for_cells_in_box(grid, flo - padv, fhi + padv, [&](const CellIndex& c) {
        const std::size_t idx = grid.index(c);
        if (mask.at(idx)) return;
        const Vec x = grid.center(c);
        const double dist =
            d == 2 ? point_segment_distance(x, a, b) : point_triangle_distance(x, a, b, def.position(f.v[2]));
        if (dist <= pad) mask.set(idx, true);
      });
    }
  }
  if (mask.touches_outer_layer()) throw Error(ErrorCode::OutOfBounds, "deformed image reaches the grid boundary");
  return mask;
}

Vec Bump::displacement(const Vec& x) const {
  const double t = (x - center).norm() / radius;
  if (t >= 1.0) return Vec::Zero(x.size());
  const double phi = (1.0 - t * t) * (1.0 - t * t);
  if (mode == Mode::Translate) return amplitude * phi * direction;
  return amplitude * phi * (x - center) / radius;
}

Deformation perturbed(const Deformation& base, const Bump& bump) {
  auto pos = base.positions();
  const auto& dom = base.domain();
  for (std::size_t v = 0; v < pos.size(); ++v) {
    if (dom.is_clamped(v)) continue;
    pos[v] += bump.displacement(dom.vertex(v));
  }
  return Deformation(base.domain_ptr(), std::move(pos));
}

void write_deformation(std::ostream& out, const Deformation& def) {
  const int d = def.dim();
  out << "DEFORMATION " << def.positions().size() << ' ' << d << '\n';
  for (std::size_t v = 0; v < def.positions().size(); ++v) {
    out << v;
    for (int a = 0; a < d; ++a) out << ' ' << detail::fmt(def.position(v)[a]);
    out << '\n';
  }
}

Deformation read_deformation(std::istream& in, std::shared_ptr<const ReferenceDomain> domain) {
  detail::expect_token(in, "DEFORMATION");
  const auto n = detail::read_value<std::size_t>(in, "vertex count");
  const int d = detail::read_value<int>(in, "dimension");
  if (n != domain->vertex_count() || d != domain->dim()) {
    throw Error(ErrorCode::Io, "deformation does not match the mesh");
  }
  std::vector<Vec> pos(n, Vec::Zero(d));
  for (std::size_t v = 0; v < n; ++v) {
    const auto idx = detail::read_value<std::size_t>(in, "vertex index");
    if (idx != v) throw Error(ErrorCode::Io, "deformation rows must be consecutive from 0");
    for (int a = 0; a < d; ++a) pos[v][a] = detail::read_double(in, "position");
  }
  return Deformation(std::move(domain), std::move(pos));
}

void save_deformation(const std::string& path, const Deformation& def) {
  auto out = detail::open_out(path);
  write_deformation(out, def);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

Deformation load_deformation(const std::string& path, std::shared_ptr<const ReferenceDomain> domain) {
  auto in = detail::open_in(path);
  return read_deformation(in, std::move(domain));
}

}  // namespace elcap
