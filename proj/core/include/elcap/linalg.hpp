#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

namespace elcap {

// Dimension is a runtime value in {2, 3}; these types never allocate.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline Vec zero_vec(int d) { return Vec::Zero(d); }

}  // namespace elcap
