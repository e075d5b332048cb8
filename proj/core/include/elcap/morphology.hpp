#pragma once

#include "elcap/grid.hpp"

namespace elcap {

/// Exact Euclidean distance from every cell center to the nearest occupied
/// cell center. Throws EmptySet for an empty mask.
DistanceField distance_transform(const SetMask& mask);

/// Distance from every cell center to the nearest cell center outside the
/// mask, where everything beyond the grid box counts as outside.
DistanceField distance_to_complement(const SetMask& mask);

/// Outer approximation {dist(., K) <= eps}. Throws BoundaryClipped when the
/// result reaches the outermost cell layer.
SetMask thicken(const SetMask& compact, double eps);

/// Inner approximation {dist(., complement of A) > eps}. May return an empty
/// mask.
SetMask thin(const SetMask& open, double eps);

struct RegularityResult {
  double min_density = 1.0;
  Vec worst_point;
  double worst_radius = 0.0;
};

/// Minimum volume fraction of the complement of D in balls B(z, r) centered
/// on boundary faces z of D, over radii r = h, 2h, ..., <= r0.
RegularityResult regularity_density(const SetMask& domain, double r0);

}  // namespace elcap
