#include <algorithm>
#include <cmath>
#include <ostream>

#include "elcap/error.hpp"
#include "elcap/verify.hpp"
#include "text_io.hpp"

namespace elcap {

std::vector<Point2> koch_polygon(int level, double side, const Point2& center) {
  if (level < 0) throw Error(ErrorCode::InvalidArgument, "level must be nonnegative");
  if (!(side > 0.0)) throw Error(ErrorCode::InvalidArgument, "side must be positive");
  const double R = side / std::sqrt(3.0);
  std::vector<Point2> poly;
  for (int k = 0; k < 3; ++k) {
    const double theta = M_PI / 2.0 + k * 2.0 * M_PI / 3.0;
    poly.push_back({center[0] + R * std::cos(theta), center[1] + R * std::sin(theta)});
  }
  const double peak = std::sqrt(3.0) / 6.0;
  for (int j = 0; j < level; ++j) {
    std::vector<Point2> next;
    next.reserve(poly.size() * 4);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Point2& a = poly[i];
      const Point2& b = poly[(i + 1) % poly.size()];
      const double tx = b[0] - a[0], ty = b[1] - a[1];
      next.push_back(a);
      next.push_back({a[0] + tx / 3.0, a[1] + ty / 3.0});
      // outward normal of a counter-clockwise edge is (ty, -tx)
      next.push_back({a[0] + tx / 2.0 + peak * ty, a[1] + ty / 2.0 - peak * tx});
      next.push_back({a[0] + 2.0 * tx / 3.0, a[1] + 2.0 * ty / 3.0});
    }
    poly = std::move(next);
  }
  return poly;
}

double koch_area(int level, double side) {
  double sum = 0.0;
  for (int k = 1; k <= level; ++k) sum += std::pow(4.0 / 9.0, k - 1);
  return std::sqrt(3.0) / 4.0 * side * side * (1.0 + sum / 3.0);
}

int koch_max_level(double side, double h) {
  int j = 0;
  while (side / std::pow(3.0, j + 1) >= 2.0 * h) ++j;
  return j;
}

SetMask rasterize_polygon(const std::vector<Point2>& polygon, const EulerianGrid& grid, SetKind kind) {
  if (grid.dim() != 2) throw Error(ErrorCode::InvalidArgument, "polygon rasterization needs a 2D grid");
  SetMask mask(grid, kind);
  const double h = grid.spacing();
  const Vec& o = grid.origin();
  const auto& dims = grid.dims();
  std::vector<double> xs;
  for (int j = 0; j < dims[1]; ++j) {
    const double y = o[1] + (j + 0.5) * h;
    xs.clear();
    for (std::size_t i = 0; i < polygon.size(); ++i) {
      const Point2& p = polygon[i];
      const Point2& q = polygon[(i + 1) % polygon.size()];
      if ((p[1] > y) != (q[1] > y)) xs.push_back(p[0] + (y - p[1]) * (q[0] - p[0]) / (q[1] - p[1]));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int i0 = std::max(0, static_cast<int>(std::floor((xs[k] - o[0]) / h - 0.5)));
      const int i1 = std::min(dims[0] - 1, static_cast<int>(std::ceil((xs[k + 1] - o[0]) / h - 0.5)));
      for (int i = i0; i <= i1; ++i) {
        const double x = o[0] + (i + 0.5) * h;
        if (x > xs[k] && x < xs[k + 1]) mask.set(grid.index({i, j, 0}), true);
      }
    }
  }
  return mask;
}

std::vector<SetMask> koch_prefractal_masks(int max_level, const EulerianGrid& grid, double side, const Point2& center) {
  const int admissible = koch_max_level(side, grid.spacing());
  if (max_level > admissible) {
    throw Error(ErrorCode::FeatureBelowResolution,
                "level " + std::to_string(max_level) + " has segments below two cells; max admissible level is " +
                    std::to_string(admissible));
  }
  std::vector<SetMask> out;
  for (int j = 0; j <= max_level; ++j) {
    out.push_back(rasterize_polygon(koch_polygon(j, side, center), grid, SetKind::Compact));
  }
  return out;
}

KochStudy run_koch_study(const KochOptions& opt) {
  // irrational offset keeps cell centers off the polygon edges
  const Point2 center{std::sqrt(2.0) * 1e-4, std::sqrt(3.0) * 1e-4};
  Vec c(2);
  c << center[0], center[1];
  const Vec r = Vec::Constant(2, opt.enclosing_radius);
  const EulerianGrid grid = EulerianGrid::covering(c - r, c + r, opt.h, 2);
  const std::vector<SetMask> masks = koch_prefractal_masks(opt.max_level, grid, opt.side, center);
  const double R2 = opt.enclosing_radius * opt.enclosing_radius;
  const SetMask D = SetMask::from_predicate(grid, SetKind::Open, [&](const Vec& x) { return (x - c).squaredNorm() < R2; });

  KochStudy study;
  PropertyReport& rep = study.report;
  rep.id = "koch";
  rep.description = "Koch prefractals: nested masks, strictly increasing capacities, contracting increments, area series";
  rep.tolerance = opt.area_tolerance;
  rep.notes.push_back("h = " + detail::fmt(opt.h) + ", enclosing disk radius " + detail::fmt(opt.enclosing_radius));
  for (int j = 0; j <= opt.max_level; ++j) {
    KochLevel L;
    L.level = j;
    L.mask_area = masks[static_cast<std::size_t>(j)].volume();
    L.series_area = koch_area(j, opt.side);
    L.capacity = relative_capacity(masks[static_cast<std::size_t>(j)], D, opt.solver).value;
    ++rep.trials;

    const double area_err = std::abs(L.mask_area / L.series_area - 1.0);
    rep.add({j, 0, L.mask_area, L.series_area, std::max(0.0, area_err - opt.area_tolerance)},
            area_err > opt.area_tolerance);
    if (j > 0) {
      const KochLevel& P = study.levels.back();
      L.nested = masks[static_cast<std::size_t>(j - 1)].subset_of(masks[static_cast<std::size_t>(j)]);
      rep.add({j, 1, L.nested ? 1.0 : 0.0, 1.0, L.nested ? 0.0 : 1.0}, !L.nested);
      L.increment = L.capacity - P.capacity;
      rep.add({j, 2, L.capacity, P.capacity, std::max(0.0, -L.increment)}, !(L.increment > 0.0));
      if (j >= 2) {
        L.increment_ratio = L.increment / P.increment;
        rep.add({j, 3, L.increment_ratio, 1.0, std::max(0.0, L.increment_ratio - 1.0)},
                !(L.increment_ratio < 1.0 && L.increment_ratio > 0.0));
      }
    }
    study.levels.push_back(L);
  }
  rep.notes.push_back("record index: 0 area vs series, 1 nesting, 2 capacity increase, 3 increment ratio");
  return study;
}

void write_koch_csv(std::ostream& out, const KochStudy& study) {
  out << "level,mask_area,series_area,capacity,increment,increment_ratio,nested\n";
  for (const auto& L : study.levels) {
    out << L.level << "," << detail::fmt(L.mask_area) << "," << detail::fmt(L.series_area) << ","
        << detail::fmt(L.capacity) << "," << detail::fmt(L.increment) << "," << detail::fmt(L.increment_ratio) << ","
        << (L.nested ? 1 : 0) << "\n";
  }
}

}  // namespace elcap
