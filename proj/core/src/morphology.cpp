#include "elcap/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "elcap/error.hpp"

namespace elcap {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher); exact for the
// squared Euclidean distance on integer lattices. Entries equal to +inf are
// not sources.
void squared_edt_1d(std::vector<double>& f, std::vector<int>& v, std::vector<double>& z,
                    std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    const double fq = f[q] + static_cast<double>(q) * q;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = (fq - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates everywhere
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = static_cast<double>(q - v[j]);
    out[q] = dq * dq + f[v[j]];
  }
}

// Squared distances in cell units on a raw lattice with extents `dims`.
std::vector<double> squared_edt(const std::vector<std::uint8_t>& source, const CellIndex& dims) {
  const std::size_t total = source.size();
  std::vector<double> g(total);
  for (std::size_t i = 0; i < total; ++i) g[i] = source[i] ? 0.0 : kInf;

  const std::size_t stride[3] = {1, static_cast<std::size_t>(dims[0]),
                                 static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1])};
  for (int axis = 0; axis < 3; ++axis) {
    const int n = dims[axis];
    if (n == 1) continue;
    std::vector<double> f(n), out(n), z(n + 1);
    std::vector<int> v(n);
    for (std::size_t base = 0; base < total; ++base) {
      // visit each line once, from its first element
      const std::size_t pos = (base / stride[axis]) % static_cast<std::size_t>(n);
      if (pos != 0) continue;
      for (int q = 0; q < n; ++q) f[q] = g[base + q * stride[axis]];
      squared_edt_1d(f, v, z, out);
      for (int q = 0; q < n; ++q) g[base + q * stride[axis]] = out[q];
    }
  }
  return g;
}

}  // namespace

DistanceField distance_transform(const SetMask& mask) {
  if (mask.empty()) throw Error(ErrorCode::EmptySet, "distance transform of an empty mask");
  const auto& grid = mask.grid();
  std::vector<std::uint8_t> src(mask.data().begin(), mask.data().end());
  auto sq = squared_edt(src, grid.dims());
  const double h = grid.spacing();
  for (auto& v : sq) v = std::sqrt(v) * h;
  return DistanceField(grid, std::move(sq));
}

DistanceField distance_to_complement(const SetMask& mask) {
  const auto& grid = mask.grid();
  const int d = grid.dim();
  // Pad by one layer of complement cells so the outside of the box counts.
  CellIndex pd = grid.dims();
  for (int a = 0; a < d; ++a) pd[a] += 2;
  const std::size_t padded = static_cast<std::size_t>(pd[0]) * pd[1] * pd[2];
  std::vector<std::uint8_t> src(padded, 1);
  const int off = 1;
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const auto c = grid.coords(i);
    const std::size_t j = static_cast<std::size_t>(c[0] + off) +
                          static_cast<std::size_t>(pd[0]) *
                              (static_cast<std::size_t>(c[1] + off) +
                               static_cast<std::size_t>(pd[1]) * static_cast<std::size_t>(c[2] + (d == 3 ? off : 0)));
    src[j] = mask.at(i) ? 0 : 1;
  }
  const auto sq = squared_edt(src, pd);
  std::vector<double> out(grid.cell_count());
  const double h = grid.spacing();
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const auto c = grid.coords(i);
    const std::size_t j = static_cast<std::size_t>(c[0] + off) +
                          static_cast<std::size_t>(pd[0]) *
                              (static_cast<std::size_t>(c[1] + off) +
                               static_cast<std::size_t>(pd[1]) * static_cast<std::size_t>(c[2] + (d == 3 ? off : 0)));
    out[i] = std::sqrt(sq[j]) * h;
  }
  return DistanceField(grid, std::move(out));
}

SetMask thicken(const SetMask& compact, double eps) {
  if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidArgument, "thickening radius must be >= 0");
  const auto dist = distance_transform(compact);
  const auto& grid = compact.grid();
  // compare in squared cell units so integer distances are exact
  const double lim = eps / grid.spacing();
  const double lim2 = lim * lim * (1.0 + 1e-12);
  SetMask out(grid, SetKind::Compact);
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const double r = dist[i] / grid.spacing();
    out.set(i, compact.at(i) || r * r <= lim2);
  }
  if (out.touches_outer_layer()) {
    throw Error(ErrorCode::BoundaryClipped, "thickening reaches the grid boundary");
  }
  return out;
}

SetMask thin(const SetMask& open, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "thinning radius must be > 0");
  const auto dist = distance_to_complement(open);
  const auto& grid = open.grid();
  const double lim = eps / grid.spacing();
  const double lim2 = lim * lim * (1.0 + 1e-12);
  SetMask out(grid, SetKind::Open);
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const double r = dist[i] / grid.spacing();
    out.set(i, open.at(i) && r * r > lim2);
  }
  return out;
}

RegularityResult regularity_density(const SetMask& domain, double r0) {
  const auto& grid = domain.grid();
  const double h = grid.spacing();
  if (r0 < h) throw Error(ErrorCode::RadiusTooSmall, "r0 must be at least one cell");
  const std::size_t inside = domain.count();
  if (inside == 0) throw Error(ErrorCode::EmptySet, "regularity of an empty domain");
  if (inside == grid.cell_count()) throw Error(ErrorCode::EmptySet, "domain has no complement in the grid");

  const int d = grid.dim();
  const int kmax = static_cast<int>(std::floor(r0 / h + 1e-9));
  const int reach = kmax + 1;

  // For each face direction, the lattice offsets (relative to the inside cell)
  // within distance kmax of the face midpoint, sorted by distance.
  struct Offset {
    CellIndex o;
    double r2;
  };
  std::vector<std::vector<Offset>> stencils(2 * d);
  for (int axis = 0; axis < d; ++axis) {
    for (int sgn = 0; sgn < 2; ++sgn) {
      const double shift = sgn == 0 ? -0.5 : 0.5;
      auto& st = stencils[2 * axis + sgn];
      const int zr = d == 3 ? reach : 0;
      for (int k = -zr; k <= zr; ++k) {
        for (int j = -reach; j <= reach; ++j) {
          for (int i = -reach; i <= reach; ++i) {
            const CellIndex o{i, j, k};
            double r2 = 0.0;
            for (int a = 0; a < d; ++a) {
              const double x = o[a] - (a == axis ? shift : 0.0);
              r2 += x * x;
            }
            if (r2 <= kmax * kmax + 1e-9) st.push_back({o, r2});
          }
        }
      }
      std::stable_sort(st.begin(), st.end(), [](const Offset& a, const Offset& b) { return a.r2 < b.r2; });
    }
  }

  auto outside = [&](const CellIndex& c) { return !grid.in_range(c) || !domain.at(c); };

  RegularityResult best;
  best.worst_point = Vec::Zero(d);
  for (std::size_t idx = 0; idx < grid.cell_count(); ++idx) {
    if (!domain.at(idx)) continue;
    const CellIndex c = grid.coords(idx);
    for (int axis = 0; axis < d; ++axis) {
      for (int sgn = 0; sgn < 2; ++sgn) {
        CellIndex nb = c;
        nb[axis] += sgn == 0 ? -1 : 1;
        if (!outside(nb)) continue;
        const auto& st = stencils[2 * axis + sgn];
        std::size_t total = 0, comp = 0, pos = 0;
        for (int k = 1; k <= kmax; ++k) {
          const double lim = static_cast<double>(k) * k + 1e-9;
          while (pos < st.size() && st[pos].r2 <= lim) {
            const CellIndex q{c[0] + st[pos].o[0], c[1] + st[pos].o[1], c[2] + st[pos].o[2]};
            ++total;
            comp += outside(q) ? 1 : 0;
            ++pos;
          }
          const double frac = static_cast<double>(comp) / static_cast<double>(total);
          if (frac < best.min_density) {
            best.min_density = frac;
            Vec z = grid.center(c);
            z[axis] += (sgn == 0 ? -0.5 : 0.5) * h;
            best.worst_point = z;
            best.worst_radius = k * h;
          }
        }
      }
    }
  }
  return best;
}

}  // namespace elcap
