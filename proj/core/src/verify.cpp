#include "elcap/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>

#include "elcap/error.hpp"
#include "elcap/morphology.hpp"
#include "text_io.hpp"

namespace elcap {

void PropertyReport::record(const TrialRecord& r) { add(r, r.excess > tolerance); }

void PropertyReport::add(const TrialRecord& r, bool violated) {
  records.push_back(r);
  if (violated) {
    ++violations;
    max_violation = std::max(max_violation, r.excess);
  }
}

namespace {

struct Disk {
  double x, y, r;
};

class TrialRng {
 public:
  TrialRng(std::uint64_t seed, const std::string& id, int trial)
      : gen_(seed ^ (std::hash<std::string>{}(id) * 0x9e3779b97f4a7c15ull) ^
             (static_cast<std::uint64_t>(trial) * 0xbf58476d1ce4e5b9ull)) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  int integer(int lo, int hi) { return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1)); }

  /// Disk with radius in [rmin, rmax] fully inside the disk of radius `within`.
  Disk disk_inside(double rmin, double rmax, double within) {
    const double r = uniform(rmin, std::min(rmax, 0.5 * within));
    const double rho = std::sqrt(uniform(0.0, 1.0)) * (within - r);
    const double phi = uniform(0.0, 2.0 * M_PI);
    return {rho * std::cos(phi), rho * std::sin(phi), r};
  }

 private:
  std::mt19937_64 gen_;
};

SetMask disks_mask(const EulerianGrid& g, SetKind kind, const std::vector<Disk>& disks) {
  return SetMask::from_predicate(g, kind, [&](const Vec& p) {
    for (const Disk& d : disks) {
      const double dx = p[0] - d.x, dy = p[1] - d.y;
      if (kind == SetKind::Compact ? dx * dx + dy * dy <= d.r * d.r : dx * dx + dy * dy < d.r * d.r) return true;
    }
    return false;
  });
}

bool separated(const SetMask& E, const SetMask& D) {
  try {
    validate_capacity_problem(E, D);
    return true;
  } catch (const Error&) {
    return false;
  }
}

double capacity_or_zero(const SetMask& E, const SetMask& D) {
  if (E.empty()) return 0.0;
  return relative_capacity(E, D).value;
}

constexpr int kMaxResample = 200;

class Suite {
 public:
  explicit Suite(const MonotonicityOptions& o)
      : opt_(o),
        grid_(EulerianGrid::covering(Vec::Constant(2, -o.box_half_width), Vec::Constant(2, o.box_half_width), o.h, 2)),
        rmin_(4.0 * o.h),
        rmax_(0.2 * 2.0 * o.box_half_width),
        outer_(0.9 * o.box_half_width) {}

  PropertyReport run(const std::string& id) {
    PropertyReport rep;
    rep.id = id;
    rep.tolerance = opt_.residual_factor * SolverOptions{}.tolerance;
    rep.notes.push_back("d = 2, h = " + detail::fmt(opt_.h) + ", box [-" + detail::fmt(opt_.box_half_width) + ", " +
                        detail::fmt(opt_.box_half_width) + "]^2, seed " + std::to_string(opt_.seed));
    rep.notes.push_back("tolerance is relative to the larger capacity of each comparison");
    for (int t = 0; t < opt_.trials; ++t) {
      TrialRng rng(opt_.seed, id, t);
      if (id == "monotone-conductor") {
        rep.description = "E1 subset E2 implies cap(E1; D) <= cap(E2; D)";
        monotone_conductor(rep, rng, t);
      } else if (id == "monotone-domain") {
        rep.description = "D1 subset D2 implies cap(E; D2) <= cap(E; D1)";
        monotone_domain(rep, rng, t);
      } else if (id == "outer-continuity") {
        rep.description = "thickenings E_k decrease to E: cap(E_k; D) nonincreasing, equal to cap(E; D) once eps < h/2";
        outer_continuity(rep, rng, t);
      } else if (id == "inner-continuity") {
        rep.description = "erosions E_k increase to E: cap(E_k; D) nondecreasing, equal to cap(E; D) once eps < h/2";
        inner_continuity(rep, rng, t);
      } else if (id == "domain-exhaustion") {
        rep.description = "thinnings D_k increase to D: cap(E; D_k) nonincreasing, equal to cap(E; D) once eps < h/2";
        domain_exhaustion(rep, rng, t);
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown property '" + id + "'");
      }
      ++rep.trials;
    }
    return rep;
  }

 private:
  double tol(double a, double b) const {
    return opt_.residual_factor * SolverOptions{}.tolerance * std::max({std::abs(a), std::abs(b), 1.0});
  }

  // Excess of `lo <= hi`, normalized so the report tolerance is relative.
  double excess(double lo, double hi) const {
    return std::max(0.0, (lo - hi) / std::max({std::abs(lo), std::abs(hi), 1.0}));
  }

  std::vector<Disk> random_disks(TrialRng& rng, int count, double within) {
    std::vector<Disk> out;
    for (int i = 0; i < count; ++i) out.push_back(rng.disk_inside(rmin_, rmax_, within));
    return out;
  }

  SetMask base_domain(TrialRng& rng, double core) {
    std::vector<Disk> disks{{0.0, 0.0, core}};
    const int extra = rng.integer(0, 2);
    for (int i = 0; i < extra; ++i) disks.push_back(rng.disk_inside(rmin_, rmax_, outer_));
    return disks_mask(grid_, SetKind::Open, disks);
  }

  void monotone_conductor(PropertyReport& rep, TrialRng& rng, int t) {
    const SetMask D = disks_mask(grid_, SetKind::Open, {{0.0, 0.0, outer_}});
    for (int attempt = 0; attempt < kMaxResample; ++attempt) {
      const int k = rng.integer(1, 4);
      const int j = rng.integer(1, k);
      const std::vector<Disk> all = random_disks(rng, k, outer_ - 2.0 * opt_.h);
      const SetMask E2 = disks_mask(grid_, SetKind::Compact, all);
      const SetMask E1 = disks_mask(grid_, SetKind::Compact, std::vector<Disk>(all.begin(), all.begin() + j));
      if (E1.empty() || !separated(E2, D)) continue;
      const double c1 = relative_capacity(E1, D).value;
      const double c2 = relative_capacity(E2, D).value;
      rep.record({t, j == k ? 1 : 0, c1, c2, excess(c1, c2)});
      return;
    }
    rep.notes.push_back("trial " + std::to_string(t) + ": no separated instance found");
  }

  void monotone_domain(PropertyReport& rep, TrialRng& rng, int t) {
    for (int attempt = 0; attempt < kMaxResample; ++attempt) {
      const double core = rng.uniform(0.6, 0.8) * outer_;
      const SetMask D1 = base_domain(rng, core);
      std::vector<Disk> more;
      const int extra = rng.integer(1, 3);
      for (int i = 0; i < extra; ++i) more.push_back(rng.disk_inside(rmin_, rmax_, outer_));
      const SetMask D2 = D1.unite(disks_mask(grid_, SetKind::Open, more));
      const SetMask E = disks_mask(grid_, SetKind::Compact, random_disks(rng, rng.integer(1, 4), core - 2.0 * opt_.h));
      if (E.empty() || !separated(E, D1)) continue;
      const double c1 = relative_capacity(E, D1).value;
      const double c2 = relative_capacity(E, D2).value;
      rep.record({t, 0, c2, c1, excess(c2, c1)});
      return;
    }
    rep.notes.push_back("trial " + std::to_string(t) + ": no separated instance found");
  }

  // Common chain bookkeeping: values[k] must be monotone (decreasing when
  // `decreasing`), and equal to the limit once eps_k < h/2.
  void check_chain(PropertyReport& rep, int t, const std::vector<double>& values, const std::vector<bool>& same_mask,
                   double limit, bool decreasing) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double eps = opt_.eps0_cells * opt_.h * std::pow(0.5, static_cast<double>(k));
      double ex = 0.0;
      if (k > 0) {
        ex = decreasing ? excess(values[k], values[k - 1]) : excess(values[k - 1], values[k]);
      }
      // every chain member lies on the correct side of the limit
      ex = std::max(ex, decreasing ? excess(limit, values[k]) : excess(values[k], limit));
      bool violated = ex > rep.tolerance;
      if (eps < 0.5 * opt_.h) {
        const double gap = std::abs(values[k] - limit) / std::max(std::abs(limit), 1.0);
        ex = std::max(ex, gap);
        violated = violated || !same_mask[k] || gap > rep.tolerance;
      }
      rep.add({t, static_cast<int>(k), values[k], limit, ex}, violated);
    }
  }

  double eps(int k) const { return opt_.eps0_cells * opt_.h * std::pow(0.5, k); }

  void outer_continuity(PropertyReport& rep, TrialRng& rng, int t) {
    const double margin = eps(0) + 3.0 * opt_.h;
    for (int attempt = 0; attempt < kMaxResample; ++attempt) {
      const SetMask D = base_domain(rng, outer_);
      const SetMask E = disks_mask(grid_, SetKind::Compact, random_disks(rng, rng.integer(1, 4), outer_ - margin));
      if (E.empty()) continue;
      const SetMask E0 = thicken(E, eps(0));
      if (!separated(E0, D)) continue;
      const double limit = relative_capacity(E, D).value;
      std::vector<double> values;
      std::vector<bool> same;
      for (int k = 0; k < opt_.chain_length; ++k) {
        const SetMask Ek = k == 0 ? E0 : thicken(E, eps(k));
        values.push_back(relative_capacity(Ek, D).value);
        same.push_back(Ek == E);
      }
      check_chain(rep, t, values, same, limit, true);
      return;
    }
    rep.notes.push_back("trial " + std::to_string(t) + ": no separated instance found");
  }

  void inner_continuity(PropertyReport& rep, TrialRng& rng, int t) {
    for (int attempt = 0; attempt < kMaxResample; ++attempt) {
      const SetMask D = base_domain(rng, outer_);
      const SetMask E = disks_mask(grid_, SetKind::Compact, random_disks(rng, rng.integer(1, 4), outer_ - 2.0 * opt_.h));
      if (E.empty() || !separated(E, D)) continue;
      const double limit = relative_capacity(E, D).value;
      std::vector<double> values;
      std::vector<bool> same;
      for (int k = 0; k < opt_.chain_length; ++k) {
        const SetMask Ek = thin(E.with_kind(SetKind::Open), eps(k)).with_kind(SetKind::Compact);
        values.push_back(capacity_or_zero(Ek, D));
        same.push_back(Ek == E);
      }
      check_chain(rep, t, values, same, limit, false);
      return;
    }
    rep.notes.push_back("trial " + std::to_string(t) + ": no separated instance found");
  }

  void domain_exhaustion(PropertyReport& rep, TrialRng& rng, int t) {
    const double margin = eps(0) + 3.0 * opt_.h;
    for (int attempt = 0; attempt < kMaxResample; ++attempt) {
      const SetMask D = base_domain(rng, outer_);
      const SetMask E = disks_mask(grid_, SetKind::Compact, random_disks(rng, rng.integer(1, 4), outer_ - margin));
      if (E.empty()) continue;
      const SetMask D0 = thin(D, eps(0));
      if (!separated(E, D0)) continue;
      const double limit = relative_capacity(E, D).value;
      std::vector<double> values;
      std::vector<bool> same;
      for (int k = 0; k < opt_.chain_length; ++k) {
        const SetMask Dk = k == 0 ? D0 : thin(D, eps(k));
        values.push_back(relative_capacity(E, Dk).value);
        same.push_back(Dk == D);
      }
      check_chain(rep, t, values, same, limit, true);
      return;
    }
    rep.notes.push_back("trial " + std::to_string(t) + ": no separated instance found");
  }

  MonotonicityOptions opt_;
  EulerianGrid grid_;
  double rmin_, rmax_, outer_;
};

}  // namespace

const std::vector<std::string>& monotonicity_property_ids() {
  static const std::vector<std::string> ids{"monotone-conductor", "monotone-domain", "outer-continuity",
                                            "inner-continuity", "domain-exhaustion"};
  return ids;
}

PropertyReport check_monotonicity_property(const std::string& id, const MonotonicityOptions& options) {
  if (options.trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be at least 1");
  const auto& ids = monotonicity_property_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    throw Error(ErrorCode::InvalidArgument, "unknown property '" + id + "'");
  }
  Suite suite(options);
  return suite.run(id);
}

std::vector<PropertyReport> check_monotonicity_suite(const MonotonicityOptions& options) {
  std::vector<PropertyReport> out;
  for (const auto& id : monotonicity_property_ids()) out.push_back(check_monotonicity_property(id, options));
  return out;
}

double calibrate_grid_constant(double h, const SolverOptions& solver) {
  const EulerianGrid g = EulerianGrid::covering(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), h, 2);
  const SetMask D = SetMask::from_predicate(g, SetKind::Open, [](const Vec& x) { return x.squaredNorm() < 1.0; });
  double sum = 0.0;
  const double radii[] = {0.2, 0.25, 0.3};
  for (double r : radii) {
    const SetMask E = SetMask::from_predicate(g, SetKind::Compact, [r](const Vec& x) { return x.squaredNorm() <= r * r; });
    const double exact = 2.0 * M_PI / std::log(1.0 / r);
    sum += std::abs(relative_capacity(E, D, solver).value - exact) / (h * 2.0 * M_PI * r);
  }
  return sum / 3.0;
}

double conductor_perimeter(const Deformation& def) {
  const ReferenceDomain& m = def.domain();
  double total = 0.0;
  for (const Facet& f : m.conductor_facets()) {
    const Vec& p0 = def.position(static_cast<std::size_t>(f.v[0]));
    const Vec& p1 = def.position(static_cast<std::size_t>(f.v[1]));
    if (m.dim() == 2) {
      total += (p1 - p0).norm();
    } else {
      const Vec& p2 = def.position(static_cast<std::size_t>(f.v[2]));
      const Vec a = p1 - p0, b = p2 - p0;
      const double cx = a[1] * b[2] - a[2] * b[1];
      const double cy = a[2] * b[0] - a[0] * b[2];
      const double cz = a[0] * b[1] - a[1] * b[0];
      total += 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
    }
  }
  return total;
}

SemicontinuityResult check_semicontinuity(const Deformation& limit, const Bump& bump, FunctionalKind kind,
                                          const EulerianGrid& grid, const SemicontinuityOptions& opt) {
  if (!(opt.decay > 0.0 && opt.decay < 1.0)) throw Error(ErrorCode::InvalidArgument, "decay must lie in (0, 1)");
  if (opt.n_max < 0) throw Error(ErrorCode::InvalidArgument, "n_max must be nonnegative");
  const MaterialModel probe = MaterialModel::standard(limit.dim());
  auto capacity_of = [&](const Deformation& y) {
    return evaluate_energy(y, probe, 0.0, kind, grid, opt.schedule).breakdown;
  };

  SemicontinuityResult res;
  PropertyReport& rep = res.report;
  rep.id = "semicontinuity";
  rep.description = "capacity of y^n images converges to that of the limit image within tau(h) = C h P";
  const AdmissibilityReport adm = check_admissibility(limit, grid, opt.schedule.distortion_p);
  if (!adm.admissible()) throw Error(ErrorCode::Inadmissible, "limit deformation is not admissible");
  const EnergyBreakdown lim = capacity_of(limit);
  if (!lim.total.is_finite()) throw Error(ErrorCode::InfeasibleStart, "limit capacity unavailable: " + lim.reason);
  res.limit_capacity = lim.capacity_value;
  res.perimeter = conductor_perimeter(limit);
  res.grid_constant = opt.grid_constant > 0.0 ? opt.grid_constant : calibrate_grid_constant(grid.spacing(), opt.schedule.solver);
  res.tau = res.grid_constant * grid.spacing() * res.perimeter;
  rep.tolerance = res.tau;
  rep.notes.push_back("h = " + detail::fmt(grid.spacing()) + ", C = " + detail::fmt(res.grid_constant) +
                      ", P = " + detail::fmt(res.perimeter) + ", tau = " + detail::fmt(res.tau));

  std::string signs;
  for (int n = 0; n <= opt.n_max; ++n) {
    Bump b = bump;
    b.amplitude = bump.amplitude * std::pow(opt.decay, n);
    const Deformation y = perturbed(limit, b);
    const EnergyBreakdown e = capacity_of(y);
    ++rep.trials;
    if (!e.admissibility.admissible() || !e.total.is_finite()) {
      rep.notes.push_back("sequence truncated at n = " + std::to_string(n) + ": " +
                          (e.reason.empty() ? std::string("overlapping elements") : e.reason));
      rep.add({n, n, 0.0, res.limit_capacity, 0.0}, true);
      break;
    }
    SequenceRecord s;
    s.n = n;
    s.delta = y.max_displacement_from(limit);
    s.capacity = e.capacity_value;
    s.gap = s.capacity - res.limit_capacity;
    res.sequence.push_back(s);
    signs += s.gap > 0.0 ? '+' : (s.gap < 0.0 ? '-' : '0');
    const double ex = std::max(0.0, std::abs(s.gap) - res.tau);
    rep.add({n, n, s.capacity, res.limit_capacity, ex}, n == opt.n_max && ex > 0.0);
  }
  rep.notes.push_back("gap signs by n: " + signs);
  // a zero bump gives the constant sequence, whose displacements are all 0
  for (std::size_t k = 1; bump.amplitude != 0.0 && k < res.sequence.size(); ++k) {
    if (!(res.sequence[k].delta < res.sequence[k - 1].delta)) {
      rep.notes.push_back("displacements are not strictly decreasing at n = " + std::to_string(k));
      rep.add({static_cast<int>(k), static_cast<int>(k), res.sequence[k].delta, res.sequence[k - 1].delta, 0.0}, true);
    }
  }
  return res;
}

PropertyReport check_regularity_closure(const std::vector<SetMask>& members, const SetMask& limit, double b, double r0,
                                        double slack) {
  PropertyReport rep;
  rep.id = "regularity";
  rep.description = "members have complement density >= b; the limit keeps density >= b - slack h / r0";
  const double h = limit.grid().spacing();
  const double tau_b = slack * h / r0;
  rep.tolerance = tau_b;
  rep.notes.push_back("b = " + detail::fmt(b) + ", r0 = " + detail::fmt(r0) + ", slack tau_b = " + detail::fmt(tau_b));
  for (std::size_t n = 0; n < members.size(); ++n) {
    const RegularityResult r = regularity_density(members[n], r0);
    ++rep.trials;
    rep.add({static_cast<int>(n), static_cast<int>(n), r.min_density, b, std::max(0.0, b - r.min_density)},
            r.min_density < b);
  }
  const RegularityResult r = regularity_density(limit, r0);
  ++rep.trials;
  rep.add({static_cast<int>(members.size()), -1, r.min_density, b - tau_b, std::max(0.0, b - tau_b - r.min_density)},
          r.min_density < b - tau_b);
  return rep;
}

std::vector<SetMask> slit_sequence(const EulerianGrid& grid, double radius, double w0, int count) {
  if (grid.dim() != 2) throw Error(ErrorCode::InvalidArgument, "slit sequence needs a 2D grid");
  std::vector<SetMask> out;
  const double h = grid.spacing();
  auto slotted = [&](double w) {
    return SetMask::from_predicate(grid, SetKind::Open, [&](const Vec& x) {
      if (x.squaredNorm() >= radius * radius) return false;
      return !(x[0] > 0.0 && std::abs(x[1]) < 0.5 * w);
    });
  };
  for (int n = 0; n < count; ++n) out.push_back(slotted(w0 * std::pow(0.5, n)));
  out.push_back(slotted(1.01 * h));
  return out;
}

void write_report(std::ostream& out, const PropertyReport& r) {
  out << "property " << r.id << "\n";
  out << "description " << r.description << "\n";
  out << "trials " << r.trials << "\n";
  out << "violations " << r.violations << "\n";
  out << "max_violation " << detail::fmt(r.max_violation) << "\n";
  out << "tolerance " << detail::fmt(r.tolerance) << "\n";
  out << "status " << (r.passed() ? "PASS" : "FAIL") << "\n";
  for (const auto& n : r.notes) out << "note " << n << "\n";
  out << "end\n";
}

void write_report_csv(std::ostream& out, const std::vector<PropertyReport>& reports) {
  out << "property,trial,index,value,reference,excess\n";
  for (const auto& r : reports) {
    for (const auto& t : r.records) {
      out << r.id << "," << t.trial << "," << t.index << "," << detail::fmt(t.value) << "," << detail::fmt(t.reference)
          << "," << detail::fmt(t.excess) << "\n";
    }
  }
}

void write_sequence_csv(std::ostream& out, const std::vector<SequenceRecord>& sequence) {
  out << "n,delta,capacity,gap\n";
  for (const auto& s : sequence) {
    out << s.n << "," << detail::fmt(s.delta) << "," << detail::fmt(s.capacity) << "," << detail::fmt(s.gap) << "\n";
  }
}

}  // namespace elcap
