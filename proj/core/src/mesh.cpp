#include "elcap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "elcap/error.hpp"
#include "text_io.hpp"

namespace elcap {
namespace {

Mat edge_matrix(const std::vector<Vec>& x, const Simplex& s, int d) {
  Mat m(d, d);
  for (int j = 0; j < d; ++j) m.col(j) = x[s[j + 1]] - x[s[0]];
  return m;
}

double factorial(int d) { return d == 2 ? 2.0 : 6.0; }

}  // namespace

ReferenceDomain::ReferenceDomain(int dim, std::vector<Vec> vertices, std::vector<Simplex> elements,
                                 std::vector<Region> regions, std::vector<int> gamma0)
    : dim_(dim),
      vertices_(std::move(vertices)),
      elements_(std::move(elements)),
      regions_(std::move(regions)),
      gamma0_(std::move(gamma0)) {
  if (dim_ != 2 && dim_ != 3) throw Error(ErrorCode::InvalidArgument, "mesh dimension must be 2 or 3");
  if (regions_.size() != elements_.size()) {
    throw Error(ErrorCode::InvalidArgument, "one region tag per element required");
  }
  if (elements_.empty()) throw Error(ErrorCode::InvalidArgument, "mesh has no elements");
  for (const auto& v : vertices_) {
    if (v.size() != dim_) throw Error(ErrorCode::InvalidArgument, "vertex of wrong dimension");
  }
  const int nv = static_cast<int>(vertices_.size());
  ref_inverse_.reserve(elements_.size());
  ref_volume_.reserve(elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (int k = 0; k <= dim_; ++k) {
      if (elements_[e][k] < 0 || elements_[e][k] >= nv) {
        throw Error(ErrorCode::InvalidArgument, "element " + std::to_string(e) + " references a missing vertex");
      }
    }
    if (dim_ == 2) elements_[e][3] = -1;
    const Mat m = edge_matrix(vertices_, elements_[e], dim_);
    const double det = m.determinant();
    if (std::abs(det) <= 1e-14 * std::pow(m.norm(), dim_)) {
      throw Error(ErrorCode::DegenerateElement, "reference element " + std::to_string(e) + " has zero volume");
    }
    if (det < 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "reference element " + std::to_string(e) + " is negatively oriented");
    }
    ref_inverse_.push_back(m.inverse());
    ref_volume_.push_back(det / factorial(dim_));
  }
  std::sort(gamma0_.begin(), gamma0_.end());
  gamma0_.erase(std::unique(gamma0_.begin(), gamma0_.end()), gamma0_.end());
  if (gamma0_.empty()) throw Error(ErrorCode::InvalidArgument, "Gamma0 must contain at least one vertex");
  clamped_.assign(vertices_.size(), 0);
  for (int v : gamma0_) {
    if (v < 0 || v >= nv) throw Error(ErrorCode::InvalidArgument, "Gamma0 references a missing vertex");
    clamped_[v] = 1;
  }
  build_topology();
}

void ReferenceDomain::build_topology() {
  const std::size_t nv = vertices_.size();
  std::vector<int> count(nv + 1, 0);
  for (const auto& s : elements_) {
    for (int k = 0; k <= dim_; ++k) ++count[s[k] + 1];
  }
  for (std::size_t i = 0; i < nv; ++i) count[i + 1] += count[i];
  vertex_elem_offsets_ = count;
  vertex_elems_.assign(count.back(), -1);
  std::vector<int> fill(count.begin(), count.end() - 1);
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (int k = 0; k <= dim_; ++k) vertex_elems_[fill[elements_[e][k]]++] = static_cast<int>(e);
  }

  // Facets keyed by sorted vertex tuple.
  std::map<std::array<int, 3>, std::vector<int>> facets;
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (int skip = 0; skip <= dim_; ++skip) {
      std::array<int, 3> key{-1, -1, -1};
      int n = 0;
      for (int k = 0; k <= dim_; ++k) {
        if (k != skip) key[n++] = elements_[e][k];
      }
      std::sort(key.begin(), key.begin() + dim_);
      facets[key].push_back(static_cast<int>(e));
    }
  }
  std::vector<std::uint8_t> on_boundary(nv, 0), on_interface(nv, 0);
  for (const auto& [key, owners] : facets) {
    if (owners.size() > 2) throw Error(ErrorCode::InvalidArgument, "mesh is not conforming");
    if (owners.size() == 1) {
      outer_facets_.push_back({key, owners[0]});
      for (int k = 0; k < dim_; ++k) on_boundary[key[k]] = 1;
      if (regions_[owners[0]] == Region::Conductor) {
        throw Error(ErrorCode::InvalidArgument, "conductor element touches the outer boundary");
      }
    } else if (regions_[owners[0]] != regions_[owners[1]]) {
      const int owner = regions_[owners[0]] == Region::Conductor ? owners[0] : owners[1];
      conductor_facets_.push_back({key, owner});
      for (int k = 0; k < dim_; ++k) on_interface[key[k]] = 1;
    }
  }
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    if (regions_[e] != Region::Conductor) continue;
    for (int k = 0; k <= dim_; ++k) {
      if (on_boundary[elements_[e][k]]) {
        throw Error(ErrorCode::InvalidArgument, "conductor closure must stay inside Omega");
      }
    }
  }
  for (int v : gamma0_) {
    if (!on_boundary[v]) throw Error(ErrorCode::InvalidArgument, "Gamma0 vertex not on the boundary");
  }
  for (std::size_t v = 0; v < nv; ++v) {
    if ((on_boundary[v] || on_interface[v]) && !clamped_[v]) interface_vertices_.push_back(static_cast<int>(v));
  }
}

std::vector<int> ReferenceDomain::free_vertices() const {
  std::vector<int> out;
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    if (!clamped_[v]) out.push_back(static_cast<int>(v));
  }
  return out;
}

double ReferenceDomain::total_volume() const noexcept {
  double s = 0.0;
  for (double v : ref_volume_) s += v;
  return s;
}

double ReferenceDomain::region_volume(Region r) const noexcept {
  double s = 0.0;
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    if (regions_[e] == r) s += ref_volume_[e];
  }
  return s;
}

std::span<const int> ReferenceDomain::elements_of_vertex(std::size_t v) const {
  return {vertex_elems_.data() + vertex_elem_offsets_[v],
          static_cast<std::size_t>(vertex_elem_offsets_[v + 1] - vertex_elem_offsets_[v])};
}

namespace demo {
namespace {

constexpr double kConductorRadius = 0.25;

void orient(const std::vector<Vec>& x, Simplex& s, int d) {
  if (edge_matrix(x, s, d).determinant() < 0.0) std::swap(s[1], s[2]);
}

// Concentric rings k = 0..rings with 8k vertices each; `to_square` blends
// the rings outside the conductor into the square [-1, 1]^2.
ReferenceDomain ring_mesh(int level, bool to_square) {
  if (level < 1 || level > 3) throw Error(ErrorCode::InvalidArgument, "demo mesh level must be 1, 2 or 3");
  const int rings = 8 << (level - 1);
  const int conductor_ring = rings / 4;
  std::vector<Vec> x;
  std::vector<int> ring_start(rings + 1);
  x.push_back(Vec::Zero(2));
  ring_start[0] = 0;
  for (int k = 1; k <= rings; ++k) {
    ring_start[k] = static_cast<int>(x.size());
    const int n = 8 * k;
    const double rho = static_cast<double>(k) / rings;
    const double beta = std::clamp((rho - kConductorRadius) / (1.0 - kConductorRadius), 0.0, 1.0);
    for (int j = 0; j < n; ++j) {
      const double th = 2.0 * std::numbers::pi * j / n;
      const double c = std::cos(th), s = std::sin(th);
      double scale = 1.0;
      if (to_square && beta > 0.0) scale = (1.0 - beta) + beta / std::max(std::abs(c), std::abs(s));
      Vec p(2);
      p << rho * scale * c, rho * scale * s;
      if (to_square && k == rings) {
        // snap the outer ring exactly onto the square
        for (int a = 0; a < 2; ++a) {
          if (std::abs(std::abs(p[a]) - 1.0) < 1e-12) p[a] = std::copysign(1.0, p[a]);
        }
      }
      x.push_back(p);
    }
  }
  std::vector<Simplex> elems;
  std::vector<Region> regions;
  auto add = [&](int a, int b, int c, int outer_ring) {
    Simplex s{a, b, c, -1};
    orient(x, s, 2);
    elems.push_back(s);
    regions.push_back(outer_ring <= conductor_ring ? Region::Conductor : Region::Insulator);
  };
  for (int j = 0; j < 8; ++j) add(0, ring_start[1] + j, ring_start[1] + (j + 1) % 8, 1);
  for (int k = 2; k <= rings; ++k) {
    const int nin = 8 * (k - 1), nout = 8 * k;
    const int in0 = ring_start[k - 1], out0 = ring_start[k];
    int i = 0, j = 0;
    while (i < nin || j < nout) {
      // advance along whichever ring has the smaller next angle
      const bool take_outer = j < nout && (i == nin || static_cast<long>(j + 1) * nin <= static_cast<long>(i + 1) * nout);
      if (take_outer) {
        add(in0 + i % nin, out0 + j % nout, out0 + (j + 1) % nout, k);
        ++j;
      } else {
        add(in0 + i % nin, out0 + j % nout, in0 + (i + 1) % nin, k);
        ++i;
      }
    }
  }
  std::vector<int> gamma0;
  for (int j = 0; j < 8 * rings; ++j) gamma0.push_back(ring_start[rings] + j);
  return ReferenceDomain(2, std::move(x), std::move(elems), std::move(regions), std::move(gamma0));
}

}  // namespace

ReferenceDomain disk_in_disk(int level) { return ring_mesh(level, false); }

ReferenceDomain disk_in_square(int level) { return ring_mesh(level, true); }

ReferenceDomain ball_in_cube(int level) {
  if (level < 1 || level > 3) throw Error(ErrorCode::InvalidArgument, "demo mesh level must be 1, 2 or 3");
  const int n = 4 * level;
  const double h = 2.0 / n;
  auto id = [n](int i, int j, int k) { return i + (n + 1) * (j + (n + 1) * k); };
  std::vector<Vec> x;
  x.reserve(static_cast<std::size_t>((n + 1) * (n + 1) * (n + 1)));
  std::vector<int> gamma0;
  for (int k = 0; k <= n; ++k) {
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i <= n; ++i) {
        Vec p(3);
        p << -1.0 + i * h, -1.0 + j * h, -1.0 + k * h;
        if (i == 0 || j == 0 || k == 0 || i == n || j == n || k == n) gamma0.push_back(static_cast<int>(x.size()));
        x.push_back(p);
      }
    }
  }
  static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<Simplex> elems;
  std::vector<Region> regions;
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        for (const auto& p : perms) {
          std::array<int, 3> c{i, j, k};
          Simplex s{};
          s[0] = id(c[0], c[1], c[2]);
          for (int step = 0; step < 3; ++step) {
            ++c[p[step]];
            s[step + 1] = id(c[0], c[1], c[2]);
          }
          Mat m = edge_matrix(x, s, 3);
          if (m.determinant() < 0.0) std::swap(s[1], s[2]);
          Vec centroid = (x[s[0]] + x[s[1]] + x[s[2]] + x[s[3]]) / 4.0;
          elems.push_back(s);
          regions.push_back(centroid.norm() < 0.5 ? Region::Conductor : Region::Insulator);
        }
      }
    }
  }
  return ReferenceDomain(3, std::move(x), std::move(elems), std::move(regions), std::move(gamma0));
}

ReferenceDomain by_name(const std::string& name, int level) {
  if (name == "disk_in_disk") return disk_in_disk(level);
  if (name == "disk_in_square") return disk_in_square(level);
  if (name == "ball_in_cube") return ball_in_cube(level);
  throw Error(ErrorCode::InvalidArgument, "unknown demo mesh '" + name + "'");
}

}  // namespace demo

void write_mesh(std::ostream& out, const ReferenceDomain& mesh) {
  const int d = mesh.dim();
  out << "DIMENSION " << d << '\n';
  out << "VERTICES " << mesh.vertex_count() << '\n';
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    out << i;
    for (int a = 0; a < d; ++a) out << ' ' << detail::fmt(mesh.vertex(i)[a]);
    out << '\n';
  }
  out << "ELEMENTS " << mesh.element_count() << '\n';
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    out << e;
    for (int k = 0; k <= d; ++k) out << ' ' << mesh.element(e)[k];
    out << ' ' << (mesh.region(e) == Region::Conductor ? "conductor" : "insulator") << '\n';
  }
  out << "GAMMA0 " << mesh.gamma0().size() << '\n';
  for (std::size_t i = 0; i < mesh.gamma0().size(); ++i) {
    out << mesh.gamma0()[i] << (i + 1 == mesh.gamma0().size() ? '\n' : ' ');
  }
}

ReferenceDomain read_mesh(std::istream& in) {
  detail::expect_token(in, "DIMENSION");
  const int d = detail::read_value<int>(in, "dimension");
  if (d != 2 && d != 3) throw Error(ErrorCode::Io, "mesh dimension must be 2 or 3");
  detail::expect_token(in, "VERTICES");
  const auto nv = detail::read_value<std::size_t>(in, "vertex count");
  std::vector<Vec> x(nv, Vec::Zero(d));
  for (std::size_t i = 0; i < nv; ++i) {
    const auto idx = detail::read_value<std::size_t>(in, "vertex index");
    if (idx != i) throw Error(ErrorCode::Io, "vertex indices must be consecutive from 0");
    for (int a = 0; a < d; ++a) x[i][a] = detail::read_double(in, "vertex coordinate");
  }
  detail::expect_token(in, "ELEMENTS");
  const auto ne = detail::read_value<std::size_t>(in, "element count");
  std::vector<Simplex> elems(ne, Simplex{-1, -1, -1, -1});
  std::vector<Region> regions(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto idx = detail::read_value<std::size_t>(in, "element index");
    if (idx != e) throw Error(ErrorCode::Io, "element indices must be consecutive from 0");
    for (int k = 0; k <= d; ++k) elems[e][k] = detail::read_value<int>(in, "element vertex");
    const auto tag = detail::read_value<std::string>(in, "region tag");
    if (tag == "conductor") {
      regions[e] = Region::Conductor;
    } else if (tag == "insulator") {
      regions[e] = Region::Insulator;
    } else {
      throw Error(ErrorCode::Io, "unknown region tag '" + tag + "'");
    }
  }
  detail::expect_token(in, "GAMMA0");
  const auto ng = detail::read_value<std::size_t>(in, "Gamma0 count");
  std::vector<int> gamma0(ng);
  for (auto& g : gamma0) g = detail::read_value<int>(in, "Gamma0 vertex");
  return ReferenceDomain(d, std::move(x), std::move(elems), std::move(regions), std::move(gamma0));
}

void save_mesh(const std::string& path, const ReferenceDomain& mesh) {
  auto out = detail::open_out(path);
  write_mesh(out, mesh);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

ReferenceDomain load_mesh(const std::string& path) {
  auto in = detail::open_in(path);
  return read_mesh(in);
}

}  // namespace elcap
