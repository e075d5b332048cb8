#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "elcap/grid.hpp"

namespace elcap::oracle {

/// O(n^2) distance from every cell center to the nearest occupied center.
inline std::vector<double> brute_distance(const SetMask& m) {
  const EulerianGrid& g = m.grid();
  std::vector<double> out(g.cell_count(), std::numeric_limits<double>::infinity());
  // exact squared index offsets, so ties at eps = k h are not blurred by rounding
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const CellIndex ci = g.coords(i);
    long best = -1;
    for (std::size_t j = 0; j < g.cell_count(); ++j) {
      if (!m.at(j)) continue;
      const CellIndex cj = g.coords(j);
      long s = 0;
      for (int a = 0; a < 3; ++a) s += static_cast<long>(ci[a] - cj[a]) * (ci[a] - cj[a]);
      if (best < 0 || s < best) best = s;
    }
    if (best >= 0) out[i] = std::sqrt(static_cast<double>(best)) * g.spacing();
  }
  return out;
}

/// Successive over-relaxation for the discrete capacitary potential:
/// v = 1 on E, v = 0 off D and beyond the grid, 2d+1 point mean on D \ E.
inline std::vector<double> sor_potential(const SetMask& E, const SetMask& D, double tol = 1e-14) {
  const EulerianGrid& g = E.grid();
  const int d = g.dim();
  const auto& n = g.dims();
  std::vector<double> v(g.cell_count(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = E.at(i) ? 1.0 : 0.0;
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (E.at(i) || !D.at(i)) continue;
      const CellIndex c = g.coords(i);
      double sum = 0.0;
      for (int a = 0; a < d; ++a) {
        for (int s = -1; s <= 1; s += 2) {
          CellIndex nb = c;
          nb[a] += s;
          if (nb[a] >= 0 && nb[a] < n[a]) sum += v[g.index(nb)];
        }
      }
      const double next = v[i] + 1.9 * (sum / (2.0 * d) - v[i]);
      change = std::max(change, std::abs(next - v[i]));
      v[i] = next;
    }
    if (change < tol) break;
  }
  return v;
}

/// Flux form of the capacity: h^(d-2) sum over conductor faces of (1 - v_nb).
inline double flux_capacity(const SetMask& E, const std::vector<double>& v) {
  const EulerianGrid& g = E.grid();
  const int d = g.dim();
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!E.at(i)) continue;
    const CellIndex c = g.coords(i);
    for (int a = 0; a < d; ++a) {
      for (int s = -1; s <= 1; s += 2) {
        CellIndex nb = c;
        nb[a] += s;
        const double vn = g.in_range(nb) ? v[g.index(nb)] : 0.0;
        sum += 1.0 - vn;
      }
    }
  }
  return std::pow(g.spacing(), d - 2) * sum;
}

inline SetMask disk(const EulerianGrid& g, SetKind kind, const Vec& c, double r) {
  return SetMask::from_predicate(g, kind, [&](const Vec& x) {
    const double d2 = (x - c).squaredNorm();
    return kind == SetKind::Compact ? d2 <= r * r : d2 < r * r;
  });
}

inline EulerianGrid square_grid(double half, double h, int dim = 2) {
  return EulerianGrid::covering(Vec::Constant(dim, -half), Vec::Constant(dim, half), h, 2);
}

}  // namespace elcap::oracle

#include "elcap/deformation.hpp"
#include "elcap/energy.hpp"

namespace elcap::oracle {

/// Shortest reference edge of the mesh.
inline double min_edge(const ReferenceDomain& m) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const auto& s = m.element(e);
    for (int i = 0; i <= m.dim(); ++i) {
      for (int j = i + 1; j <= m.dim(); ++j) best = std::min(best, (m.vertex(s[i]) - m.vertex(s[j])).norm());
    }
  }
  return best;
}

/// Free vertices moved by independent uniform offsets of size <= scale times
/// the shortest edge, resampled until every det is positive.
inline Deformation random_admissible(const std::shared_ptr<const ReferenceDomain>& m, std::mt19937_64& rng,
                                     double scale = 0.2) {
  const double s = scale * min_edge(*m);
  std::uniform_real_distribution<double> u(-s, s);
  for (;;) {
    Deformation def(m);
    for (int v : m->free_vertices()) {
      Vec p = m->vertex(v);
      for (int a = 0; a < m->dim(); ++a) p[a] += u(rng);
      def.set_position(v, p);
    }
    bool ok = true;
    for (std::size_t e = 0; e < m->element_count() && ok; ++e) ok = element_det(def, e) > 0.0;
    if (ok) return def;
  }
}

/// Central differences of the total elastic energy in every free coordinate.
inline std::vector<Vec> fd_elastic_gradient(const Deformation& def, const MaterialModel& model, double step) {
  const ReferenceDomain& m = def.domain();
  std::vector<Vec> g(m.vertex_count(), Vec::Zero(m.dim()));
  Deformation work = def;
  for (int v : m.free_vertices()) {
    for (int a = 0; a < m.dim(); ++a) {
      Vec p = def.position(v);
      p[a] += step;
      work.set_position(v, p);
      const double plus = elastic_energy(work, model).value();
      p[a] -= 2.0 * step;
      work.set_position(v, p);
      const double minus = elastic_energy(work, model).value();
      work.set_position(v, def.position(v));
      g[v][a] = (plus - minus) / (2.0 * step);
    }
  }
  return g;
}

/// ||a - b|| / ||b|| over all vertex rows.
inline double relative_error(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]).squaredNorm();
    den += b[i].squaredNorm();
  }
  return std::sqrt(num / den);
}

}  // namespace elcap::oracle
