#include "elcap/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "elcap/error.hpp"
#include "text_io.hpp"

namespace elcap {

double EnergyValue::value() const {
  if (infinite_) throw Error(ErrorCode::InvalidArgument, "energy is infinite");
  return value_;
}

std::string to_string(EnergyValue e) { return e.is_finite() ? detail::fmt(e.value()) : std::string("inf"); }

EnergyValue energy_from_string(const std::string& s) {
  if (s == "inf") return EnergyValue::infinite();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error(ErrorCode::Io, "malformed energy value '" + s + "'");
  return EnergyValue(v);
}

MaterialModel MaterialModel::standard(int dim) {
  MaterialModel m;
  m.q = dim + 1.0;
  m.s = dim;
  return m;
}

void MaterialModel::validate(int dim) const {
  if (dim != 2 && dim != 3) throw Error(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  if (!(q > dim)) throw Error(ErrorCode::InvalidArgument, "q must exceed the dimension");
  if (!(s > dim - 1)) throw Error(ErrorCode::InvalidArgument, "s must exceed d - 1");
  for (const RegionParameters* r : {&conductor, &insulator}) {
    if (!(r->a > 0.0) || !(r->b > 0.0)) throw Error(ErrorCode::InvalidArgument, "a and b must be positive");
    if (!(r->c >= 0.0)) throw Error(ErrorCode::InvalidArgument, "c must be nonnegative");
    if (r->force.size() != 0 && r->force.size() != dim) {
      throw Error(ErrorCode::InvalidArgument, "force density must have d components");
    }
  }
}

double MaterialModel::growth_constant(int dim) const {
  double cw = std::numeric_limits<double>::infinity();
  for (const RegionParameters* r : {&conductor, &insulator}) {
    const double k = r->a * std::pow(dim, q / 2.0) + r->b * std::pow(dim, dim * s / 2.0);
    cw = std::min({cw, r->a, r->b, 1.0 / k});
  }
  return cw;
}

EnergyValue density(const MaterialModel& model, Region region, const Mat& F) {
  const double det = F.determinant();
  if (!(det > 0.0)) return EnergyValue::infinite();
  const RegionParameters& p = model.of(region);
  const double d = static_cast<double>(F.rows());
  const double n2 = F.squaredNorm();
  const double ds = d * model.s;
  const double w = p.a * (std::pow(n2, model.q / 2.0) - std::pow(d, model.q / 2.0)) +
                   p.b * (std::pow(n2, ds / 2.0) / std::pow(det, model.s) - std::pow(d, ds / 2.0)) +
                   p.c * (det - 1.0) * (det - 1.0);
  return EnergyValue(w);
}

Mat stress(const MaterialModel& model, Region region, const Mat& F) {
  const double det = F.determinant();
  if (!(det > 0.0)) throw Error(ErrorCode::Inadmissible, "stress requires det F > 0");
  const RegionParameters& p = model.of(region);
  const double d = static_cast<double>(F.rows());
  const double n2 = F.squaredNorm();
  const double ds = d * model.s;
  const Mat Finv_t = F.inverse().transpose();
  const double dets = std::pow(det, -model.s);
  Mat P = p.a * model.q * std::pow(n2, (model.q - 2.0) / 2.0) * F;
  P += p.b * (ds * std::pow(n2, (ds - 2.0) / 2.0) * dets) * F;
  P -= p.b * (model.s * std::pow(n2, ds / 2.0) * dets) * Finv_t;
  P += 2.0 * p.c * (det - 1.0) * det * Finv_t;
  return P;
}

namespace {

// Dead-load work of element e: f . integral_e (y - x).
double dead_load_work(const Deformation& def, const MaterialModel& model, std::size_t e) {
  const ReferenceDomain& m = def.domain();
  const Vec& f = model.of(m.region(e)).force;
  if (f.size() == 0) return 0.0;
  const int d = m.dim();
  Vec mean = zero_vec(d);
  for (int i = 0; i <= d; ++i) {
    const auto v = static_cast<std::size_t>(m.element(e)[i]);
    mean += def.position(v) - m.vertex(v);
  }
  mean /= d + 1;
  return m.reference_volume(e) * f.dot(mean);
}

EnergyValue element_energy(const Deformation& def, const MaterialModel& model, std::size_t e) {
  const ReferenceDomain& m = def.domain();
  const EnergyValue w = density(model, m.region(e), element_gradient(def, e));
  if (!w.is_finite()) return w;
  return EnergyValue(m.reference_volume(e) * w.value() - dead_load_work(def, model, e));
}

}  // namespace

EnergyValue elastic_energy(const Deformation& def, const MaterialModel& model) {
  const ReferenceDomain& m = def.domain();
  const std::size_t ne = m.element_count();
  std::vector<double> per(ne, 0.0);
  std::vector<std::uint8_t> bad(ne, 0);
#ifdef ELCAP_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long e = 0; e < static_cast<long>(ne); ++e) {
    const EnergyValue w = element_energy(def, model, static_cast<std::size_t>(e));
    if (w.is_finite()) {
      per[static_cast<std::size_t>(e)] = w.value();
    } else {
      bad[static_cast<std::size_t>(e)] = 1;
    }
  }
  double total = 0.0;
  for (std::size_t e = 0; e < ne; ++e) {
    if (bad[e]) return EnergyValue::infinite();
    total += per[e];
  }
  return EnergyValue(total);
}

EnergyValue local_elastic_energy(const Deformation& def, const MaterialModel& model, std::size_t vertex) {
  EnergyValue total(0.0);
  for (int e : def.domain().elements_of_vertex(vertex)) {
    total = total + element_energy(def, model, static_cast<std::size_t>(e));
    if (!total.is_finite()) break;
  }
  return total;
}

std::vector<Vec> elastic_gradient(const Deformation& def, const MaterialModel& model) {
  const ReferenceDomain& m = def.domain();
  const int d = m.dim();
  std::vector<Vec> grad(m.vertex_count(), zero_vec(d));
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const Mat F = element_gradient(def, e);
    if (!(F.determinant() > 0.0)) {
      throw Error(ErrorCode::Inadmissible, "element " + std::to_string(e) + " has det <= 0");
    }
    const Mat P = stress(model, m.region(e), F);
    const Mat& Rinv = m.reference_inverse(e);
    const double vol = m.reference_volume(e);
    const Simplex& s = m.element(e);
    Vec g0 = zero_vec(d);
    for (int i = 1; i <= d; ++i) {
      const Vec gi = vol * (P * Rinv.row(i - 1).transpose());
      grad[static_cast<std::size_t>(s[i])] += gi;
      g0 -= gi;
    }
    grad[static_cast<std::size_t>(s[0])] += g0;
    const Vec& f = model.of(m.region(e)).force;
    if (f.size() != 0) {
      for (int i = 0; i <= d; ++i) grad[static_cast<std::size_t>(s[i])] -= (vol / (d + 1)) * f;
    }
  }
  for (int v : m.gamma0()) grad[static_cast<std::size_t>(v)].setZero();
  return grad;
}

std::string to_string(FunctionalKind kind) { return kind == FunctionalKind::F1 ? "F1" : "F2"; }

FunctionalKind functional_kind_from_string(const std::string& s) {
  if (s == "F1" || s == "f1") return FunctionalKind::F1;
  if (s == "F2" || s == "f2") return FunctionalKind::F2;
  throw Error(ErrorCode::InvalidArgument, "unknown functional '" + s + "'");
}

CapacityResult conductor_capacity(const Deformation& def, FunctionalKind kind, const EulerianGrid& grid,
                                  const CapacitySchedule& schedule) {
  const int d = def.dim();
  if (kind == FunctionalKind::F2) {
    return relative_capacity(rasterize_image(def, ImageRegion::ConductorClosure, grid),
                             rasterize_image(def, ImageRegion::WholeDomain, grid), schedule.solver);
  }
  if (d != 3) throw Error(ErrorCode::InvalidArgument, "F1 needs the self-capacity, which is defined for d = 3 only");
  const ReferenceDomain& m = def.domain();
  Vec lo = Vec::Constant(d, std::numeric_limits<double>::infinity());
  Vec hi = -lo;
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    if (m.region(e) != Region::Conductor) continue;
    for (int i = 0; i <= d; ++i) {
      const Vec& p = def.position(static_cast<std::size_t>(m.element(e)[i]));
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  const Vec center = 0.5 * (lo + hi);
  const double radius = 0.5 * (hi - lo).norm();
  const std::vector<double> radii = schedule.radii.empty() ? default_radii(radius) : schedule.radii;
  auto raster = [&def](const EulerianGrid& g) { return rasterize_image(def, ImageRegion::ConductorClosure, g); };
  return self_capacity(raster, center, radii, schedule.cells_per_axis, schedule.solver);
}

EnergyEvaluation evaluate_energy(const Deformation& def, const MaterialModel& model, double charge,
                                 FunctionalKind kind, const EulerianGrid& grid, const CapacitySchedule& schedule,
                                 const CapacityResult* previous) {
  const int d = def.dim();
  model.validate(d);
  if (kind == FunctionalKind::F1 && d != 3) {
    throw Error(ErrorCode::InvalidArgument, "F1 needs the self-capacity, which is defined for d = 3 only");
  }
  if (grid.dim() != d) throw Error(ErrorCode::MixedGrids, "grid and mesh dimensions differ");

  EnergyEvaluation out;
  EnergyBreakdown& br = out.breakdown;
  br.kind = kind;
  br.charge = charge;
  br.elastic = elastic_energy(def, model);
  br.admissibility = check_admissibility(def, grid, schedule.distortion_p);
  auto fail = [&](const std::string& why) {
    br.electrostatic = EnergyValue::infinite();
    br.total = EnergyValue::infinite();
    br.reason = why;
    return out;
  };
  if (!br.elastic.is_finite()) return fail("Inadmissible: an element has det <= 0");

  try {
    if (kind == FunctionalKind::F2 && previous != nullptr) {
      SetMask E = rasterize_image(def, ImageRegion::ConductorClosure, grid);
      SetMask D = rasterize_image(def, ImageRegion::WholeDomain, grid);
      if (previous->conductor == E && previous->domain == D) {
        out.capacity = *previous;
      } else {
        out.capacity = relative_capacity(E, D, schedule.solver);
      }
    } else {
      out.capacity = conductor_capacity(def, kind, grid, schedule);
    }
  } catch (const Error& e) {
    return fail(e.what());
  }
  br.capacity_value = out.capacity->value;
  br.electrostatic = EnergyValue(charge * charge / (2.0 * br.capacity_value));
  br.total = br.elastic + br.electrostatic;
  return out;
}

EnergyBreakdown total_energy(const Deformation& def, const MaterialModel& model, double charge, FunctionalKind kind,
                             const EulerianGrid& grid, const CapacitySchedule& schedule) {
  return evaluate_energy(def, model, charge, kind, grid, schedule).breakdown;
}

void write_energy_record(std::ostream& out, const EnergyBreakdown& e) {
  out << "functional " << to_string(e.kind) << "\n";
  out << "charge " << detail::fmt(e.charge) << "\n";
  out << "elastic " << to_string(e.elastic) << "\n";
  out << "capacity " << detail::fmt(e.capacity_value) << "\n";
  out << "electrostatic " << to_string(e.electrostatic) << "\n";
  out << "total " << to_string(e.total) << "\n";
  out << "min_det " << detail::fmt(e.admissibility.min_det) << "\n";
  out << "max_distortion " << detail::fmt(e.admissibility.max_distortion_p) << "\n";
  out << "distortion_order " << detail::fmt(e.admissibility.distortion_order) << "\n";
  out << "overlap_cells " << e.admissibility.overlap_cells << "\n";
  out << "gamma0_violation " << detail::fmt(e.admissibility.gamma0_violation) << "\n";
  out << "reason " << (e.reason.empty() ? std::string("none") : e.reason) << "\n";
}

}  // namespace elcap
