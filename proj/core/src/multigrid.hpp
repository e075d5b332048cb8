#pragma once

// Masked Dirichlet Laplacian on a uniform grid and its multigrid-
// preconditioned conjugate gradient solver. Internal to the library.

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "elcap/grid.hpp"

namespace elcap::detail {

/// Symmetric 2d+1 point operator on the cells marked free. off[a][i] is the
/// (positive) coupling weight between cell i and cell i + e_a; the matrix
/// entry is -off. Values at non-free cells are ignored and kept at zero.
struct GridOperator {
  int dim = 2;
  CellIndex dims{1, 1, 1};
  std::vector<std::uint8_t> free;
  std::vector<double> diag;
  std::array<std::vector<double>, 3> off;

  std::size_t size() const noexcept { return free.size(); }
  std::size_t free_count() const noexcept;
  void apply(const std::vector<double>& x, std::vector<double>& y) const;

  /// Graph Laplacian with unit weights; every free cell has diagonal 2d.
  static GridOperator laplacian(const EulerianGrid& grid, const std::vector<std::uint8_t>& free);
};

/// Symmetric V-cycle with red-black Gauss-Seidel smoothing, piecewise
/// constant transfer and Galerkin coarse operators (scaled by 1/2 to match
/// rediscretization), exact dense solve on the coarsest level.
class MultigridPreconditioner {
 public:
  explicit MultigridPreconditioner(GridOperator fine, int smoothing_sweeps = 2);
  ~MultigridPreconditioner();
  MultigridPreconditioner(MultigridPreconditioner&&) noexcept;
  MultigridPreconditioner& operator=(MultigridPreconditioner&&) noexcept;

  const GridOperator& fine() const;
  int levels() const;
  /// z = M^{-1} r.
  void apply(const std::vector<double>& r, std::vector<double>& z);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct CgStats {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradient on A x = b starting from x.
CgStats pcg(MultigridPreconditioner& pre, const std::vector<double>& b, std::vector<double>& x, double tol,
            int max_iterations);

/// Dot product with a fixed blocked summation order, independent of the
/// number of threads.
double ordered_dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace elcap::detail
