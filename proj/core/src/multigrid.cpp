#include "multigrid.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "elcap/error.hpp"

namespace elcap::detail {
namespace {

constexpr std::size_t kDotBlock = 4096;
constexpr std::size_t kCoarsestFree = 400;

std::array<std::size_t, 3> strides(const CellIndex& dims) {
  return {1, static_cast<std::size_t>(dims[0]), static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1])};
}

// Calls f(line_start_index, j, k) for every x-line of the grid.
template <typename F>
void for_lines(const CellIndex& dims, F&& f) {
  const long lines = static_cast<long>(dims[1]) * dims[2];
#ifdef ELCAP_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long line = 0; line < lines; ++line) {
    const int j = static_cast<int>(line % dims[1]);
    const int k = static_cast<int>(line / dims[1]);
    f(static_cast<std::size_t>(line) * static_cast<std::size_t>(dims[0]), j, k);
  }
}

// One colored Gauss-Seidel half sweep: updates free cells with (i+j+k) % 2 == color.
void smooth_color(const GridOperator& A, const std::vector<double>& r, std::vector<double>& z, int color) {
  const auto st = strides(A.dims);
  const int nx = A.dims[0], ny = A.dims[1], nz = A.dims[2];
  for_lines(A.dims, [&](std::size_t base, int j, int k) {
    for (int i = (color + j + k) & 1; i < nx; i += 2) {
      const std::size_t idx = base + static_cast<std::size_t>(i);
      if (!A.free[idx]) continue;
      double s = r[idx];
      if (i + 1 < nx) s += A.off[0][idx] * z[idx + 1];
      if (i > 0) s += A.off[0][idx - 1] * z[idx - 1];
      if (j + 1 < ny) s += A.off[1][idx] * z[idx + st[1]];
      if (j > 0) s += A.off[1][idx - st[1]] * z[idx - st[1]];
      if (A.dim == 3) {
        if (k + 1 < nz) s += A.off[2][idx] * z[idx + st[2]];
        if (k > 0) s += A.off[2][idx - st[2]] * z[idx - st[2]];
      }
      z[idx] = s / A.diag[idx];
    }
  });
}

}  // namespace

std::size_t GridOperator::free_count() const noexcept {
  return static_cast<std::size_t>(std::count(free.begin(), free.end(), std::uint8_t{1}));
}

void GridOperator::apply(const std::vector<double>& x, std::vector<double>& y) const {
  y.resize(size());
  const auto st = strides(dims);
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  for_lines(dims, [&](std::size_t base, int j, int k) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t idx = base + static_cast<std::size_t>(i);
      if (!free[idx]) {
        y[idx] = 0.0;
        continue;
      }
      double s = diag[idx] * x[idx];
      if (i + 1 < nx) s -= off[0][idx] * x[idx + 1];
      if (i > 0) s -= off[0][idx - 1] * x[idx - 1];
      if (j + 1 < ny) s -= off[1][idx] * x[idx + st[1]];
      if (j > 0) s -= off[1][idx - st[1]] * x[idx - st[1]];
      if (dim == 3) {
        if (k + 1 < nz) s -= off[2][idx] * x[idx + st[2]];
        if (k > 0) s -= off[2][idx - st[2]] * x[idx - st[2]];
      }
      y[idx] = s;
    }
  });
}

GridOperator GridOperator::laplacian(const EulerianGrid& grid, const std::vector<std::uint8_t>& free) {
  GridOperator A;
  A.dim = grid.dim();
  A.dims = grid.dims();
  A.free = free;
  const std::size_t n = free.size();
  A.diag.assign(n, 0.0);
  for (int a = 0; a < 3; ++a) A.off[a].assign(n, 0.0);
  const auto st = strides(A.dims);
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (!free[idx]) continue;
    A.diag[idx] = 2.0 * A.dim;
    const CellIndex c = grid.coords(idx);
    for (int a = 0; a < A.dim; ++a) {
      if (c[a] + 1 < A.dims[a] && free[idx + st[a]]) A.off[a][idx] = 1.0;
    }
  }
  return A;
}

double ordered_dot(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  const std::size_t blocks = (n + kDotBlock - 1) / kDotBlock;
  std::vector<double> partial(blocks, 0.0);
#ifdef ELCAP_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long blk = 0; blk < static_cast<long>(blocks); ++blk) {
    const std::size_t lo = static_cast<std::size_t>(blk) * kDotBlock;
    const std::size_t hi = std::min(n, lo + kDotBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
    partial[static_cast<std::size_t>(blk)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

struct MultigridPreconditioner::Impl {
  struct Level {
    GridOperator op;
    std::vector<std::size_t> parent;  // index into the next coarser level
    std::vector<double> r, z, tmp;
  };
  std::vector<Level> levels;
  int sweeps = 2;
  std::vector<std::size_t> coarse_free;
  Eigen::LLT<Eigen::MatrixXd> coarse_llt;
  Eigen::VectorXd coarse_rhs;

  void build(GridOperator fine);
  void vcycle(std::size_t l);
};

namespace {

GridOperator coarsen(const GridOperator& A, std::vector<std::size_t>& parent) {
  GridOperator C;
  C.dim = A.dim;
  for (int a = 0; a < 3; ++a) C.dims[a] = a < A.dim ? (A.dims[a] + 1) / 2 : 1;
  const std::size_t nc = static_cast<std::size_t>(C.dims[0]) * C.dims[1] * C.dims[2];
  C.free.assign(nc, 0);
  C.diag.assign(nc, 0.0);
  for (int a = 0; a < 3; ++a) C.off[a].assign(nc, 0.0);
  parent.assign(A.size(), 0);
  const auto sf = strides(A.dims);
  const auto sc = strides(C.dims);
  for (int k = 0; k < A.dims[2]; ++k) {
    for (int j = 0; j < A.dims[1]; ++j) {
      for (int i = 0; i < A.dims[0]; ++i) {
        const std::size_t idx = i * sf[0] + j * sf[1] + k * sf[2];
        const int ci = i / 2, cj = j / 2, ck = A.dim == 3 ? k / 2 : 0;
        const std::size_t cidx = ci * sc[0] + cj * sc[1] + ck * sc[2];
        parent[idx] = cidx;
        if (!A.free[idx]) continue;
        C.free[cidx] = 1;
        C.diag[cidx] += 0.5 * A.diag[idx];
        const int fc[3] = {i, j, k};
        for (int a = 0; a < A.dim; ++a) {
          const double w = A.off[a][idx];
          if (w == 0.0 || fc[a] + 1 >= A.dims[a]) continue;
          if ((fc[a] & 1) == 0) {
            // both cells share the parent
            C.diag[cidx] -= w;
          } else {
            C.off[a][cidx] += 0.5 * w;
          }
        }
      }
    }
  }
  return C;
}

}  // namespace

void MultigridPreconditioner::Impl::build(GridOperator fine) {
  levels.clear();
  levels.push_back({std::move(fine), {}, {}, {}, {}});
  while (true) {
    Level& cur = levels.back();
    const std::size_t nf = cur.op.free_count();
    bool can_coarsen = nf > kCoarsestFree;
    for (int a = 0; a < cur.op.dim; ++a) can_coarsen = can_coarsen && cur.op.dims[a] > 2;
    if (!can_coarsen) break;
    std::vector<std::size_t> parent;
    GridOperator coarse = coarsen(cur.op, parent);
    cur.parent = std::move(parent);
    levels.push_back({std::move(coarse), {}, {}, {}, {}});
  }
  for (auto& L : levels) {
    L.r.assign(L.op.size(), 0.0);
    L.z.assign(L.op.size(), 0.0);
    L.tmp.assign(L.op.size(), 0.0);
  }
  const GridOperator& C = levels.back().op;
  coarse_free.clear();
  std::vector<long> local(C.size(), -1);
  for (std::size_t i = 0; i < C.size(); ++i) {
    if (C.free[i]) {
      local[i] = static_cast<long>(coarse_free.size());
      coarse_free.push_back(i);
    }
  }
  const auto n = static_cast<Eigen::Index>(coarse_free.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  const auto st = strides(C.dims);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t idx = coarse_free[static_cast<std::size_t>(r)];
    M(r, r) = C.diag[idx];
    for (int a = 0; a < C.dim; ++a) {
      const std::size_t nb = idx + st[a];
      if (nb < C.size() && C.off[a][idx] != 0.0 && local[nb] >= 0) {
        M(r, local[nb]) = -C.off[a][idx];
        M(local[nb], r) = -C.off[a][idx];
      }
    }
  }
  coarse_llt.compute(M);
  if (coarse_llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SolverDiverged, "coarse multigrid operator is not positive definite");
  }
  coarse_rhs.resize(n);
}

void MultigridPreconditioner::Impl::vcycle(std::size_t l) {
  Level& L = levels[l];
  if (l + 1 == levels.size()) {
    for (std::size_t r = 0; r < coarse_free.size(); ++r) coarse_rhs[static_cast<Eigen::Index>(r)] = L.r[coarse_free[r]];
    const Eigen::VectorXd sol = coarse_llt.solve(coarse_rhs);
    std::fill(L.z.begin(), L.z.end(), 0.0);
    for (std::size_t r = 0; r < coarse_free.size(); ++r) L.z[coarse_free[r]] = sol[static_cast<Eigen::Index>(r)];
    return;
  }
  std::fill(L.z.begin(), L.z.end(), 0.0);
  for (int s = 0; s < sweeps; ++s) {
    smooth_color(L.op, L.r, L.z, 0);
    smooth_color(L.op, L.r, L.z, 1);
  }
  L.op.apply(L.z, L.tmp);
  Level& C = levels[l + 1];
  std::fill(C.r.begin(), C.r.end(), 0.0);
  for (std::size_t i = 0; i < L.op.size(); ++i) {
    if (L.op.free[i]) C.r[L.parent[i]] += L.r[i] - L.tmp[i];
  }
  vcycle(l + 1);
  for (std::size_t i = 0; i < L.op.size(); ++i) {
    if (L.op.free[i]) L.z[i] += C.z[L.parent[i]];
  }
  for (int s = 0; s < sweeps; ++s) {
    smooth_color(L.op, L.r, L.z, 1);
    smooth_color(L.op, L.r, L.z, 0);
  }
}

MultigridPreconditioner::MultigridPreconditioner(GridOperator fine, int smoothing_sweeps)
    : impl_(std::make_unique<Impl>()) {
  impl_->sweeps = smoothing_sweeps;
  impl_->build(std::move(fine));
}

MultigridPreconditioner::~MultigridPreconditioner() = default;
MultigridPreconditioner::MultigridPreconditioner(MultigridPreconditioner&&) noexcept = default;
MultigridPreconditioner& MultigridPreconditioner::operator=(MultigridPreconditioner&&) noexcept = default;

const GridOperator& MultigridPreconditioner::fine() const { return impl_->levels.front().op; }

int MultigridPreconditioner::levels() const { return static_cast<int>(impl_->levels.size()); }

void MultigridPreconditioner::apply(const std::vector<double>& r, std::vector<double>& z) {
  auto& L = impl_->levels.front();
  L.r = r;
  impl_->vcycle(0);
  z = L.z;
}

CgStats pcg(MultigridPreconditioner& pre, const std::vector<double>& b, std::vector<double>& x, double tol,
            int max_iterations) {
  const GridOperator& A = pre.fine();
  const std::size_t n = A.size();
  CgStats stats;
  x.resize(n, 0.0);
  std::vector<double> r(n), z(n), p(n), q(n);
  A.apply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = A.free[i] ? b[i] - q[i] : 0.0;
  const double bnorm = std::sqrt(ordered_dot(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    stats.converged = true;
    return stats;
  }
  double rnorm = std::sqrt(ordered_dot(r, r));
  stats.relative_residual = rnorm / bnorm;
  if (stats.relative_residual <= tol) {
    stats.converged = true;
    return stats;
  }
  pre.apply(r, z);
  p = z;
  double rz = ordered_dot(r, z);
  for (int it = 1; it <= max_iterations; ++it) {
    A.apply(p, q);
    const double pq = ordered_dot(p, q);
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    rnorm = std::sqrt(ordered_dot(r, r));
    stats.iterations = it;
    stats.relative_residual = rnorm / bnorm;
    if (stats.relative_residual <= tol) {
      stats.converged = true;
      break;
    }
    pre.apply(r, z);
    const double rz_new = ordered_dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  // report the true residual of the returned iterate
  A.apply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = A.free[i] ? b[i] - q[i] : 0.0;
  stats.relative_residual = std::sqrt(ordered_dot(r, r)) / bnorm;
  return stats;
}

}  // namespace elcap::detail
