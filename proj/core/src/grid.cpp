#include "elcap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "elcap/error.hpp"
#include "text_io.hpp"

namespace elcap {

EulerianGrid::EulerianGrid(int dim, const Vec& origin, double spacing, CellIndex dims)
    : dim_(dim), origin_(origin), h_(spacing), dims_(dims) {
  if (dim != 2 && dim != 3) throw Error(ErrorCode::InvalidArgument, "grid dimension must be 2 or 3");
  if (origin.size() != dim) throw Error(ErrorCode::InvalidArgument, "grid origin has wrong dimension");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw Error(ErrorCode::InvalidArgument, "grid spacing must be positive");
  }
  if (dim == 2) dims_[2] = 1;
  for (int a = 0; a < dim; ++a) {
    if (dims_[a] < 2) throw Error(ErrorCode::InvalidArgument, "every grid extent must be >= 2");
  }
  count_ = static_cast<std::size_t>(dims_[0]) * static_cast<std::size_t>(dims_[1]) *
           static_cast<std::size_t>(dims_[2]);
}

EulerianGrid EulerianGrid::covering(const Vec& lo, const Vec& hi, double h, int margin) {
  const int d = static_cast<int>(lo.size());
  CellIndex dims{1, 1, 1};
  Vec origin(d);
  for (int a = 0; a < d; ++a) {
    const int n = static_cast<int>(std::ceil((hi[a] - lo[a]) / h - 1e-9)) + 2 * margin;
    dims[a] = std::max(n, 2);
    const double mid = 0.5 * (lo[a] + hi[a]);
    origin[a] = mid - 0.5 * dims[a] * h;
  }
  return EulerianGrid(d, origin, h, dims);
}

EulerianGrid EulerianGrid::centered(const Vec& center, double h, int cells_per_axis, int dim) {
  Vec origin(dim);
  for (int a = 0; a < dim; ++a) origin[a] = center[a] - 0.5 * cells_per_axis * h;
  return EulerianGrid(dim, origin, h, {cells_per_axis, cells_per_axis, dim == 3 ? cells_per_axis : 1});
}

double EulerianGrid::cell_volume() const noexcept { return dim_ == 2 ? h_ * h_ : h_ * h_ * h_; }

CellIndex EulerianGrid::coords(std::size_t idx) const noexcept {
  const auto nx = static_cast<std::size_t>(dims_[0]);
  const auto ny = static_cast<std::size_t>(dims_[1]);
  return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
}

bool EulerianGrid::in_range(const CellIndex& c) const noexcept {
  for (int a = 0; a < 3; ++a) {
    if (c[a] < 0 || c[a] >= dims_[a]) return false;
  }
  return true;
}

Vec EulerianGrid::center(const CellIndex& c) const {
  Vec p(dim_);
  for (int a = 0; a < dim_; ++a) p[a] = origin_[a] + (c[a] + 0.5) * h_;
  return p;
}

Vec EulerianGrid::upper() const {
  Vec p(dim_);
  for (int a = 0; a < dim_; ++a) p[a] = origin_[a] + dims_[a] * h_;
  return p;
}

std::optional<CellIndex> EulerianGrid::cell_of(const Vec& p) const {
  CellIndex c{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    const double t = (p[a] - origin_[a]) / h_;
    if (!(t >= 0.0) || t >= dims_[a]) return std::nullopt;
    c[a] = std::min(static_cast<int>(t), dims_[a] - 1);
  }
  return c;
}

bool EulerianGrid::on_outer_layer(const CellIndex& c) const noexcept {
  for (int a = 0; a < dim_; ++a) {
    if (c[a] == 0 || c[a] == dims_[a] - 1) return true;
  }
  return false;
}

std::pair<CellIndex, CellIndex> EulerianGrid::cell_range(const Vec& lo, const Vec& hi) const {
  CellIndex first{0, 0, 0}, last{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    // centers satisfy origin + (i + 0.5) h in [lo, hi]
    const double i0 = std::ceil((lo[a] - origin_[a]) / h_ - 0.5);
    const double i1 = std::floor((hi[a] - origin_[a]) / h_ - 0.5);
    first[a] = static_cast<int>(std::clamp(i0, 0.0, static_cast<double>(dims_[a])));
    last[a] = static_cast<int>(std::clamp(i1, -1.0, static_cast<double>(dims_[a] - 1)));
  }
  return {first, last};
}

bool EulerianGrid::operator==(const EulerianGrid& other) const {
  return dim_ == other.dim_ && h_ == other.h_ && dims_ == other.dims_ && origin_ == other.origin_;
}

std::string to_string(SetKind kind) { return kind == SetKind::Compact ? "compact" : "open"; }

SetKind set_kind_from_string(const std::string& s) {
  if (s == "compact") return SetKind::Compact;
  if (s == "open") return SetKind::Open;
  throw Error(ErrorCode::Io, "unknown set kind '" + s + "'");
}

SetMask::SetMask(EulerianGrid grid, SetKind kind)
    : grid_(std::move(grid)), kind_(kind), occ_(grid_.cell_count(), 0) {}

SetMask::SetMask(EulerianGrid grid, SetKind kind, std::vector<std::uint8_t> occupancy)
    : grid_(std::move(grid)), kind_(kind), occ_(std::move(occupancy)) {
  if (occ_.size() != grid_.cell_count()) {
    throw Error(ErrorCode::InvalidArgument, "occupancy size does not match grid");
  }
  for (auto& v : occ_) v = v ? 1 : 0;
}

SetMask SetMask::from_predicate(const EulerianGrid& grid, SetKind kind,
                                const std::function<bool(const Vec&)>& inside) {
  SetMask m(grid, kind);
  for (std::size_t i = 0; i < grid.cell_count(); ++i) m.occ_[i] = inside(grid.center(i)) ? 1 : 0;
  return m;
}

std::size_t SetMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(occ_.begin(), occ_.end(), std::uint8_t{1}));
}

bool SetMask::touches_outer_layer() const noexcept {
  for (std::size_t i = 0; i < occ_.size(); ++i) {
    if (occ_[i] && grid_.on_outer_layer(grid_.coords(i))) return true;
  }
  return false;
}

SetMask SetMask::with_kind(SetKind kind) const {
  SetMask m = *this;
  m.kind_ = kind;
  return m;
}

SetMask SetMask::complement(SetKind kind) const {
  SetMask m(grid_, kind);
  for (std::size_t i = 0; i < occ_.size(); ++i) m.occ_[i] = occ_[i] ? 0 : 1;
  return m;
}

void SetMask::require_same_grid(const SetMask& other) const {
  if (!(grid_ == other.grid_)) throw Error(ErrorCode::MixedGrids, "masks live on different grids");
}

SetMask SetMask::unite(const SetMask& other) const {
  require_same_grid(other);
  SetMask m = *this;
  for (std::size_t i = 0; i < occ_.size(); ++i) m.occ_[i] = occ_[i] | other.occ_[i];
  return m;
}

SetMask SetMask::intersect(const SetMask& other) const {
  require_same_grid(other);
  SetMask m = *this;
  for (std::size_t i = 0; i < occ_.size(); ++i) m.occ_[i] = occ_[i] & other.occ_[i];
  return m;
}

SetMask SetMask::minus(const SetMask& other) const {
  require_same_grid(other);
  SetMask m = *this;
  for (std::size_t i = 0; i < occ_.size(); ++i) m.occ_[i] = occ_[i] & (other.occ_[i] ^ 1u);
  return m;
}

bool SetMask::subset_of(const SetMask& other) const {
  require_same_grid(other);
  for (std::size_t i = 0; i < occ_.size(); ++i) {
    if (occ_[i] && !other.occ_[i]) return false;
  }
  return true;
}

std::size_t SetMask::symmetric_difference(const SetMask& other) const {
  require_same_grid(other);
  std::size_t n = 0;
  for (std::size_t i = 0; i < occ_.size(); ++i) n += occ_[i] != other.occ_[i];
  return n;
}

bool SetMask::operator==(const SetMask& other) const {
  return kind_ == other.kind_ && grid_ == other.grid_ && occ_ == other.occ_;
}

ScalarField::ScalarField(EulerianGrid grid, double fill)
    : grid_(std::move(grid)), values_(grid_.cell_count(), fill) {}

ScalarField::ScalarField(EulerianGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.cell_count()) {
    throw Error(ErrorCode::InvalidArgument, "field size does not match grid");
  }
}

std::optional<double> ScalarField::sample(const Vec& p) const {
  const auto c = grid_.cell_of(p);
  if (!c) return std::nullopt;
  return values_[grid_.index(*c)];
}

bool ScalarField::operator==(const ScalarField& other) const {
  return grid_ == other.grid_ && values_ == other.values_;
}

namespace {

void write_grid_header(std::ostream& out, const EulerianGrid& g) {
  out << "dimension " << g.dim() << '\n';
  out << "dims " << g.dims()[0] << ' ' << g.dims()[1] << ' ' << g.dims()[2] << '\n';
  out << "origin";
  for (int a = 0; a < g.dim(); ++a) out << ' ' << detail::fmt(g.origin()[a]);
  out << '\n' << "spacing " << detail::fmt(g.spacing()) << '\n';
}

EulerianGrid read_grid_header(std::istream& in) {
  detail::expect_token(in, "dimension");
  const int d = detail::read_value<int>(in, "dimension");
  if (d != 2 && d != 3) throw Error(ErrorCode::Io, "dimension must be 2 or 3");
  detail::expect_token(in, "dims");
  CellIndex dims{};
  for (auto& n : dims) n = detail::read_value<int>(in, "dims");
  detail::expect_token(in, "origin");
  Vec origin(d);
  for (int a = 0; a < d; ++a) origin[a] = detail::read_double(in, "origin");
  detail::expect_token(in, "spacing");
  const double h = detail::read_double(in, "spacing");
  return EulerianGrid(d, origin, h, dims);
}

void skip_to_payload(std::istream& in) {
  if (in.get() != '\n') throw Error(ErrorCode::Io, "missing newline before payload");
}

}  // namespace

void write_mask(std::ostream& out, const SetMask& mask) {
  out << "elcap-mask 1\n";
  write_grid_header(out, mask.grid());
  out << "kind " << to_string(mask.kind()) << '\n';
  out << "data " << mask.grid().cell_count() << '\n';
  const auto d = mask.data();
  out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size()));
}

SetMask read_mask(std::istream& in) {
  detail::expect_token(in, "elcap-mask");
  detail::expect_token(in, "1");
  EulerianGrid g = read_grid_header(in);
  detail::expect_token(in, "kind");
  const SetKind kind = set_kind_from_string(detail::read_value<std::string>(in, "kind"));
  detail::expect_token(in, "data");
  const auto n = detail::read_value<std::size_t>(in, "cell count");
  if (n != g.cell_count()) throw Error(ErrorCode::Io, "cell count does not match dims");
  skip_to_payload(in);
  std::vector<std::uint8_t> occ(n);
  if (!in.read(reinterpret_cast<char*>(occ.data()), static_cast<std::streamsize>(n))) {
    throw Error(ErrorCode::Io, "truncated mask data");
  }
  for (auto b : occ) {
    if (b > 1) throw Error(ErrorCode::Io, "mask bytes must be 0 or 1");
  }
  return SetMask(std::move(g), kind, std::move(occ));
}

void write_field(std::ostream& out, const ScalarField& field) {
  out << "elcap-field 1\n";
  write_grid_header(out, field.grid());
  out << "data " << field.grid().cell_count() << '\n';
  for (double v : field.values()) detail::write_le_double(out, v);
}

ScalarField read_field(std::istream& in) {
  detail::expect_token(in, "elcap-field");
  detail::expect_token(in, "1");
  EulerianGrid g = read_grid_header(in);
  detail::expect_token(in, "data");
  const auto n = detail::read_value<std::size_t>(in, "cell count");
  if (n != g.cell_count()) throw Error(ErrorCode::Io, "cell count does not match dims");
  skip_to_payload(in);
  std::vector<double> values(n);
  for (auto& v : values) v = detail::read_le_double(in);
  return ScalarField(std::move(g), std::move(values));
}

void save_mask(const std::string& path, const SetMask& mask) {
  auto out = detail::open_out(path, true);
  write_mask(out, mask);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

SetMask load_mask(const std::string& path) {
  auto in = detail::open_in(path, true);
  return read_mask(in);
}

void save_field(const std::string& path, const ScalarField& field) {
  auto out = detail::open_out(path, true);
  write_field(out, field);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

ScalarField load_field(const std::string& path) {
  auto in = detail::open_in(path, true);
  return read_field(in);
}

}  // namespace elcap
