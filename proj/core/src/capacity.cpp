#include "elcap/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>

#include "elcap/error.hpp"
#include "multigrid.hpp"
#include "text_io.hpp"

namespace elcap {
namespace {

std::mutex stats_mutex;
PotentialStatistics stats;

void record_statistics(const PotentialField& v) {
  const auto vals = v.values();
  const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
  std::lock_guard<std::mutex> lock(stats_mutex);
  if (stats.solves == 0) {
    stats.min_value = *lo;
    stats.max_value = *hi;
  } else {
    stats.min_value = std::min(stats.min_value, *lo);
    stats.max_value = std::max(stats.max_value, *hi);
  }
  ++stats.solves;
}

std::size_t stride(const EulerianGrid& g, int axis) {
  std::size_t s = 1;
  for (int a = 0; a < axis; ++a) s *= static_cast<std::size_t>(g.dims()[a]);
  return s;
}

struct Solution {
  PotentialField potential;
  double residual;
  int iterations;
};

Solution solve(const SetMask& E, const SetMask& D, const SolverOptions& options) {
  validate_capacity_problem(E, D);
  const EulerianGrid& g = E.grid();
  const std::size_t n = g.cell_count();
  std::vector<std::uint8_t> free(n, 0);
  std::size_t nfree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (D.at(i) && !E.at(i)) {
      free[i] = 1;
      ++nfree;
    }
  }
  if (nfree == 0) throw Error(ErrorCode::DegenerateSeparation, "no free cells between conductor and domain boundary");

  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!free[i]) continue;
    const CellIndex c = g.coords(i);
    for (int a = 0; a < g.dim(); ++a) {
      const std::size_t s = stride(g, a);
      if (c[a] + 1 < g.dims()[a] && E.at(i + s)) b[i] += 1.0;
      if (c[a] > 0 && E.at(i - s)) b[i] += 1.0;
    }
  }

  detail::MultigridPreconditioner pre(detail::GridOperator::laplacian(g, free), options.smoothing_sweeps);
  const int cap = options.max_iterations > 0
                      ? options.max_iterations
                      : std::max(50, static_cast<int>(std::ceil(50.0 * std::sqrt(static_cast<double>(nfree)))));
  std::vector<double> x(n, 0.0);
  const detail::CgStats st = detail::pcg(pre, b, x, options.tolerance, cap);
  if (!st.converged || !std::isfinite(st.relative_residual)) {
    throw SolverDivergedError(st.relative_residual, st.iterations);
  }
  PotentialField v(g, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (E.at(i)) {
      v[i] = 1.0;
    } else if (free[i]) {
      v[i] = x[i];
    }
  }
  record_statistics(v);
  return {std::move(v), st.relative_residual, st.iterations};
}

CapacityResult make_result(const SetMask& E, const SetMask& D, Solution sol) {
  const double value = dirichlet_energy(sol.potential, D);
  return CapacityResult{value, std::move(sol.potential), sol.residual, sol.iterations, {}, {}, E, D};
}

}  // namespace

void validate_capacity_problem(const SetMask& E, const SetMask& D) {
  if (!(E.grid() == D.grid())) throw Error(ErrorCode::MixedGrids, "conductor and domain live on different grids");
  if (E.empty()) throw Error(ErrorCode::EmptySet, "conductor is empty");
  if (!E.subset_of(D)) throw Error(ErrorCode::InvalidArgument, "conductor is not contained in the domain");
  const EulerianGrid& g = E.grid();
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    if (!E.at(i)) continue;
    const CellIndex c = g.coords(i);
    for (int a = 0; a < g.dim(); ++a) {
      const std::size_t s = stride(g, a);
      const bool up_ok = c[a] + 1 < g.dims()[a] && D.at(i + s);
      const bool down_ok = c[a] > 0 && D.at(i - s);
      if (!up_ok || !down_ok) {
        throw Error(ErrorCode::DegenerateSeparation, "conductor touches the complement of the domain");
      }
    }
  }
}

PotentialField solve_potential(const SetMask& conductor, const SetMask& domain, const SolverOptions& options) {
  return solve(conductor, domain, options).potential;
}

double dirichlet_energy(const PotentialField& v, const SetMask& D) {
  const EulerianGrid& g = v.grid();
  if (!(g == D.grid())) throw Error(ErrorCode::MixedGrids, "potential and domain live on different grids");
  const auto& dims = g.dims();
  const long lines = static_cast<long>(dims[1]) * dims[2];
  std::vector<double> partial(static_cast<std::size_t>(lines), 0.0);
#ifdef ELCAP_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long line = 0; line < lines; ++line) {
    const int j = static_cast<int>(line % dims[1]);
    const int k = static_cast<int>(line / dims[1]);
    const std::size_t base = static_cast<std::size_t>(line) * static_cast<std::size_t>(dims[0]);
    double s = 0.0;
    for (int i = 0; i < dims[0]; ++i) {
      const std::size_t idx = base + static_cast<std::size_t>(i);
      const int c[3] = {i, j, k};
      for (int a = 0; a < g.dim(); ++a) {
        const std::size_t st = stride(g, a);
        // face toward +e_a (or toward the exterior of the grid)
        if (c[a] + 1 < dims[a]) {
          if (D.at(idx) || D.at(idx + st)) {
            const double dv = v[idx + st] - v[idx];
            s += dv * dv;
          }
        } else if (D.at(idx)) {
          s += v[idx] * v[idx];
        }
        if (c[a] == 0 && D.at(idx)) s += v[idx] * v[idx];
      }
    }
    partial[static_cast<std::size_t>(line)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total * std::pow(g.spacing(), g.dim() - 2);
}

CapacityResult relative_capacity(const SetMask& conductor, const SetMask& domain, const SolverOptions& options) {
  return make_result(conductor, domain, solve(conductor, domain, options));
}

Enclosure enclosing_ball(const SetMask& mask) {
  if (mask.empty()) throw Error(ErrorCode::EmptySet, "mask is empty");
  const EulerianGrid& g = mask.grid();
  const int d = g.dim();
  CellIndex lo{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};
  CellIndex hi{-1, -1, -1};
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    if (!mask.at(i)) continue;
    const CellIndex c = g.coords(i);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  }
  const double h = g.spacing();
  Vec center(d);
  for (int a = 0; a < d; ++a) center[a] = g.origin()[a] + 0.5 * (lo[a] + hi[a] + 1) * h;
  double r2 = 0.0;
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    if (!mask.at(i)) continue;
    const Vec x = g.center(i);
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      const double da = std::abs(x[a] - center[a]) + 0.5 * h;
      s += da * da;
    }
    r2 = std::max(r2, s);
  }
  return {center, std::sqrt(r2)};
}

std::vector<double> default_radii(double circumradius) {
  if (!(circumradius > 0.0)) throw Error(ErrorCode::InvalidArgument, "circumradius must be positive");
  return {2.0 * circumradius, 4.0 * circumradius, 8.0 * circumradius};
}

CapacityResult self_capacity(const ConductorRasterizer& conductor, const Vec& center, const std::vector<double>& radii,
                             int cells_per_axis, const SolverOptions& options) {
  if (center.size() != 3) throw Error(ErrorCode::InvalidArgument, "self-capacity is defined for d = 3 only");
  if (radii.size() < 3) throw Error(ErrorCode::NeedThreeRadii, "at least three truncation radii are required");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0) || (k > 0 && !(radii[k] > radii[k - 1]))) {
      throw Error(ErrorCode::InvalidArgument, "truncation radii must be positive and increasing");
    }
  }
  if (cells_per_axis < 8) throw Error(ErrorCode::InvalidArgument, "cells_per_axis must be at least 8");

  std::vector<ExtrapolationPair> pairs;
  std::optional<Solution> last;
  std::optional<SetMask> lastE, lastD;
  for (double R : radii) {
    // two spare cells on each side keep the ball away from the grid boundary
    const double h = 2.0 * R / (cells_per_axis - 4);
    const EulerianGrid g = EulerianGrid::centered(center, h, cells_per_axis, 3);
    SetMask E = conductor(g);
    if (!(E.grid() == g)) throw Error(ErrorCode::MixedGrids, "rasterizer returned a mask on another grid");
    E = E.with_kind(SetKind::Compact);
    if (E.empty()) throw Error(ErrorCode::FeatureBelowResolution, "conductor vanishes on the grid for R = " + detail::fmt(R));
    const double R2 = R * R;
    SetMask D = SetMask::from_predicate(g, SetKind::Open, [&](const Vec& x) { return (x - center).squaredNorm() < R2; });
    Solution sol = solve(E, D, options);
    pairs.push_back({R, dirichlet_energy(sol.potential, D)});
    last = std::move(sol);
    lastE = std::move(E);
    lastD = std::move(D);
  }

  std::vector<std::string> warnings;
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    if (pairs[k].capacity > pairs[k - 1].capacity * (1.0 + 2.0 * options.tolerance)) {
      warnings.push_back("ExtrapolationUnreliable: raw capacities are not decreasing in R");
      break;
    }
  }

  // least squares fit of 1/cap = alpha + beta / R over the last three radii
  const std::size_t m = pairs.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = m - 3; k < m; ++k) {
    const double xk = 1.0 / pairs[k].radius;
    const double yk = 1.0 / pairs[k].capacity;
    sx += xk;
    sy += yk;
    sxx += xk * xk;
    sxy += xk * yk;
  }
  const double beta = (3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx);
  const double alpha = (sy - beta * sx) / 3.0;
  double value = pairs.back().capacity;
  if (alpha > 0.0 && std::isfinite(alpha)) {
    value = 1.0 / alpha;
  } else {
    warnings.push_back("ExtrapolationUnreliable: fit has no positive limit; largest-radius value returned");
  }
  CapacityResult result{value, std::move(last->potential), last->residual, last->iterations, std::move(pairs),
                        std::move(warnings), std::move(*lastE), std::move(*lastD)};
  return result;
}

CapacityResult self_capacity(const SetMask& conductor, std::vector<double> radii, int cells_per_axis,
                             const SolverOptions& options) {
  if (conductor.grid().dim() != 3) throw Error(ErrorCode::InvalidArgument, "self-capacity is defined for d = 3 only");
  const Enclosure enc = enclosing_ball(conductor);
  if (radii.empty()) radii = default_radii(enc.radius);
  const SetMask source = conductor;
  auto sampler = [source](const EulerianGrid& g) {
    return SetMask::from_predicate(g, SetKind::Compact, [&](const Vec& x) {
      const auto c = source.grid().cell_of(x);
      return c.has_value() && source.at(*c);
    });
  };
  return self_capacity(sampler, enc.center, radii, cells_per_axis, options);
}

std::vector<FluxSample> boundary_flux_density(const CapacityResult& result, double window) {
  const PotentialField& v = result.potential;
  const SetMask& E = result.conductor;
  const EulerianGrid& g = v.grid();
  const int d = g.dim();
  const double h = g.spacing();
  const auto& dims = g.dims();
  std::vector<FluxSample> out;
  for (std::size_t b = 0; b < g.cell_count(); ++b) {
    if (!result.domain.at(b) || E.at(b)) continue;
    const CellIndex c = g.coords(b);
    for (int a = 0; a < d; ++a) {
      const std::size_t s = stride(g, a);
      for (int sign : {-1, 1}) {
        const int nc = c[a] + sign;
        if (nc < 0 || nc >= dims[a]) continue;
        const std::size_t e = sign > 0 ? b + s : b - s;
        if (!E.at(e)) continue;
        FluxSample fs;
        fs.conductor_cell = e;
        fs.free_cell = b;
        fs.point = g.center(b);
        fs.point[a] += sign * 0.5 * h;
        fs.normal = zero_vec(d);
        fs.normal[a] = -sign;
        fs.normal_derivative = (1.0 - v[b]) / h;
        out.push_back(std::move(fs));
      }
    }
  }

  // bucket faces by window-sized blocks so each window scan is local
  const double rho = std::max(window, 0.5) * h;
  const double rho2 = rho * rho;
  const int span = static_cast<int>(std::ceil(rho / h));
  CellIndex bdims{1, 1, 1};
  for (int a = 0; a < d; ++a) bdims[a] = dims[a] / span + 1;
  auto bucket_of = [&](const FluxSample& f) {
    const CellIndex c = g.coords(f.free_cell);
    std::size_t idx = 0, mul = 1;
    for (int a = 0; a < d; ++a) {
      idx += mul * static_cast<std::size_t>(c[a] / span);
      mul *= static_cast<std::size_t>(bdims[a]);
    }
    return idx;
  };
  std::size_t nb = 1;
  for (int a = 0; a < d; ++a) nb *= static_cast<std::size_t>(bdims[a]);
  std::vector<std::vector<std::size_t>> buckets(nb);
  for (std::size_t i = 0; i < out.size(); ++i) buckets[bucket_of(out[i])].push_back(i);

  for (auto& f : out) {
    const CellIndex c = g.coords(f.free_cell);
    CellIndex lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      lo[a] = std::max(0, c[a] / span - 1);
      hi[a] = std::min(bdims[a] - 1, c[a] / span + 1);
    }
    double flux = 0.0;
    Vec area = zero_vec(d);
    for (int bz = lo[2]; bz <= hi[2]; ++bz) {
      for (int by = lo[1]; by <= hi[1]; ++by) {
        for (int bx = lo[0]; bx <= hi[0]; ++bx) {
          const std::size_t bi = static_cast<std::size_t>(bx) +
                                 static_cast<std::size_t>(bdims[0]) *
                                     (static_cast<std::size_t>(by) + static_cast<std::size_t>(bdims[1]) * bz);
          for (std::size_t j : buckets[bi]) {
            const FluxSample& o = out[j];
            const double t2 = (o.point - f.point).squaredNorm() / rho2;
            if (t2 >= 1.0) continue;
            const double w = (1.0 - t2) * (1.0 - t2);
            flux += w * o.normal_derivative;
            area += w * o.normal;
          }
        }
      }
    }
    const double len = area.norm();
    if (len > 0.0) {
      f.surface_normal = area / len;
      const double q = flux / len;
      f.density = q * q;
    } else {
      f.surface_normal = f.normal;
      f.density = f.normal_derivative * f.normal_derivative;
    }
  }
  return out;
}

double total_flux(const std::vector<FluxSample>& samples, const EulerianGrid& grid) {
  double s = 0.0;
  for (const auto& f : samples) s += f.normal_derivative;
  return s * std::pow(grid.spacing(), grid.dim() - 1);
}

PotentialStatistics potential_statistics() {
  std::lock_guard<std::mutex> lock(stats_mutex);
  return stats;
}

void reset_potential_statistics() {
  std::lock_guard<std::mutex> lock(stats_mutex);
  stats = PotentialStatistics{};
}

void write_capacity_record(std::ostream& out, const CapacityResult& r) {
  out << "elcap-capacity 1\n";
  out << "value " << detail::fmt(r.value) << "\n";
  out << "residual " << detail::fmt(r.residual) << "\n";
  out << "iterations " << r.iterations << "\n";
  out << "extrapolation " << r.extrapolation.size() << "\n";
  for (const auto& p : r.extrapolation) out << detail::fmt(p.radius) << " " << detail::fmt(p.capacity) << "\n";
  out << "warnings " << r.warnings.size() << "\n";
  for (const auto& w : r.warnings) out << w << "\n";
}

CapacityRecord read_capacity_record(std::istream& in) {
  CapacityRecord rec;
  detail::expect_token(in, "elcap-capacity");
  detail::expect_token(in, "1");
  detail::expect_token(in, "value");
  rec.value = detail::read_double(in, "value");
  detail::expect_token(in, "residual");
  rec.residual = detail::read_double(in, "residual");
  detail::expect_token(in, "iterations");
  rec.iterations = detail::read_value<int>(in, "iterations");
  detail::expect_token(in, "extrapolation");
  const auto n = detail::read_value<std::size_t>(in, "extrapolation count");
  for (std::size_t k = 0; k < n; ++k) {
    ExtrapolationPair p;
    p.radius = detail::read_double(in, "radius");
    p.capacity = detail::read_double(in, "capacity");
    rec.extrapolation.push_back(p);
  }
  detail::expect_token(in, "warnings");
  const auto w = detail::read_value<std::size_t>(in, "warning count");
  std::string line;
  std::getline(in, line);
  for (std::size_t k = 0; k < w; ++k) {
    if (!std::getline(in, line)) throw Error(ErrorCode::Io, "truncated warning list");
    rec.warnings.push_back(line);
  }
  return rec;
}

}  // namespace elcap
