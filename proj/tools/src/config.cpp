#include "elcap_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "elcap/error.hpp"

namespace elcap::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in, const std::string& source) {
  ConfigFile f;
  f.source_ = source;
  std::string line;
  std::vector<std::string> errors;
  for (int n = 1; std::getline(in, line); ++n) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(n);
    if (eq == std::string::npos) {
      errors.push_back(where + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      errors.push_back(where + ": empty key");
    } else if (f.entries_.count(key)) {
      errors.push_back(where + ": duplicate key '" + key + "' (first on line " +
                       std::to_string(f.entries_[key].line) + ")");
    } else {
      f.entries_[key] = {value, n};
    }
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(ErrorCode::ConfigInvalid, "malformed config" + msg);
  }
  return f;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
  return parse(in, path);
}

const std::string& ConfigFile::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCode::ConfigInvalid, "missing key '" + key + "'");
  return it->second.value;
}

void ConfigFile::set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

std::vector<std::string> ConfigFile::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

int ConfigFile::line_of(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

const std::vector<std::pair<std::string, std::string>>& config_schema() {
  static const std::vector<std::pair<std::string, std::string>> schema{
      {"name", "free-form scenario label"},
      {"seed", "random seed for every seeded component (unsigned integer)"},
      {"dim", "spatial dimension 2 or 3; implied by body.demo"},
      {"output.dir", "output directory (overridden by --out)"},
      {"body.demo", "built-in mesh: disk_in_disk, disk_in_square or ball_in_cube"},
      {"body.level", "refinement level of the built-in mesh, 1 to 3"},
      {"body.mesh", "path of a mesh file (alternative to body.demo)"},
      {"body.deformation", "path of a deformation file; identity if absent"},
      {"material.q", "exponent q > d of the stretch term"},
      {"material.s", "exponent s > d - 1 of the distortion term"},
      {"material.conductor.a", "stretch coefficient a > 0 in the conductor"},
      {"material.conductor.b", "distortion coefficient b > 0 in the conductor"},
      {"material.conductor.c", "volumetric coefficient c >= 0 in the conductor"},
      {"material.conductor.force", "dead load per unit volume in the conductor (d numbers)"},
      {"material.insulator.a", "stretch coefficient a > 0 in the insulator"},
      {"material.insulator.b", "distortion coefficient b > 0 in the insulator"},
      {"material.insulator.c", "volumetric coefficient c >= 0 in the insulator"},
      {"material.insulator.force", "dead load per unit volume in the insulator (d numbers)"},
      {"charge", "total charge Q >= 0"},
      {"functional", "F1 (self-capacity, d = 3) or F2 (capacity relative to the deformed body)"},
      {"grid.h", "Eulerian cell size h > 0"},
      {"grid.lo", "lower corner of the Eulerian box (d numbers); default from the body or domain"},
      {"grid.hi", "upper corner of the Eulerian box (d numbers)"},
      {"capacity.mode", "relative or self, for standalone ball problems"},
      {"capacity.conductor.center", "center of the conductor ball (d numbers)"},
      {"capacity.conductor.radius", "radius of the conductor ball"},
      {"capacity.domain.center", "center of the enclosing ball (d numbers)"},
      {"capacity.domain.radius", "radius of the enclosing ball"},
      {"capacity.radii", "self-capacity truncation radii, at least three, increasing"},
      {"capacity.cells_per_axis", "cells per axis of each self-capacity grid"},
      {"capacity.tolerance", "relative residual of the linear solve"},
      {"capacity.max_iterations", "iteration cap of the linear solve; 0 selects 50 sqrt(n)"},
      {"capacity.distortion_p", "order of the reported outer distortion; 0 selects d"},
      {"optimizer.method", "pattern_search or gradient_hybrid"},
      {"optimizer.initial_step", "initial polling step"},
      {"optimizer.step_shrink", "step factor in (0, 1) after an unproductive cycle"},
      {"optimizer.min_step", "terminate once the step drops below this"},
      {"optimizer.max_iterations", "iteration cap"},
      {"optimizer.capacity_refresh", "iterations between capacity solves during screening"},
      {"optimizer.stagnation_iterations", "stop after this many unproductive iterations; 0 disables"},
      {"optimizer.flux_window", "smoothing radius in cells of the boundary flux"},
      {"bump.center", "center of the start or sequence perturbation (d numbers)"},
      {"bump.radius", "support radius of the perturbation"},
      {"bump.amplitude", "perturbation amplitude"},
      {"bump.mode", "translate or radial"},
      {"bump.direction", "direction for translate mode (d numbers)"},
      {"verify.select", "property selector, see the README"},
      {"verify.trials", "random trials per monotonicity property"},
      {"verify.h", "cell size of the monotonicity grids"},
      {"verify.box_half_width", "random sets live in [-w, w]^2"},
      {"verify.chain_length", "length of thickening and thinning chains"},
      {"verify.eps0_cells", "first chain radius in cells"},
      {"verify.residual_factor", "tolerance as a multiple of the solver residual"},
      {"verify.koch.max_level", "highest prefractal level"},
      {"verify.koch.h", "cell size of the prefractal grid"},
      {"verify.koch.side", "side length of the initial triangle"},
      {"verify.koch.enclosing_radius", "radius of the enclosing disk"},
      {"verify.koch.area_tolerance", "relative tolerance of the area series check"},
      {"sequence.decay", "amplitude factor in (0, 1) between sequence members"},
      {"sequence.n_max", "last sequence index"},
      {"sequence.grid_constant", "constant C of tau(h) = C h P; 0 calibrates it"},
      {"regularity.b", "required complement density"},
      {"regularity.r0", "ball radius scale of the density check"},
      {"regularity.slack", "slack factor of the limit check, tolerance slack h / r0"},
      {"regularity.members", "number of sequence members checked"},
  };
  return schema;
}

namespace {

class Reader {
 public:
  explicit Reader(const ConfigFile& f) : f_(f) {}

  void fail(const std::string& key, const std::string& msg) {
    const int line = f_.line_of(key);
    errors_.push_back(key + (line ? " (line " + std::to_string(line) + ")" : "") + ": " + msg);
  }

  bool has(const std::string& k) const { return f_.has(k); }

  std::optional<double> number(const std::string& k) {
    if (!f_.has(k)) return std::nullopt;
    const std::string& s = f_.get(k);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !std::isfinite(v)) {
      fail(k, "expected a finite number, got '" + s + "'");
      return std::nullopt;
    }
    return v;
  }

  std::optional<long long> integer(const std::string& k) {
    if (!f_.has(k)) return std::nullopt;
    const std::string& s = f_.get(k);
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0') {
      fail(k, "expected an integer, got '" + s + "'");
      return std::nullopt;
    }
    return v;
  }

  std::optional<std::vector<double>> numbers(const std::string& k) {
    if (!f_.has(k)) return std::nullopt;
    std::istringstream in(f_.get(k));
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (*end != '\0' || !std::isfinite(v)) {
        fail(k, "expected whitespace-separated numbers, got '" + f_.get(k) + "'");
        return std::nullopt;
      }
      out.push_back(v);
    }
    return out;
  }

  std::optional<Vec> vec(const std::string& k, int dim) {
    auto v = numbers(k);
    if (!v) return std::nullopt;
    if (static_cast<int>(v->size()) != dim) {
      fail(k, "expected " + std::to_string(dim) + " numbers, got " + std::to_string(v->size()));
      return std::nullopt;
    }
    Vec out(dim);
    for (int i = 0; i < dim; ++i) out[i] = (*v)[static_cast<std::size_t>(i)];
    return out;
  }

  std::optional<std::string> text(const std::string& k) {
    if (!f_.has(k)) return std::nullopt;
    return f_.get(k);
  }

  void positive(const std::string& k, double& target) {
    if (auto v = number(k)) {
      if (*v > 0.0) target = *v;
      else fail(k, "must be positive");
    }
  }

  void nonnegative(const std::string& k, double& target) {
    if (auto v = number(k)) {
      if (*v >= 0.0) target = *v;
      else fail(k, "must be nonnegative");
    }
  }

  void int_at_least(const std::string& k, int& target, long long lo) {
    if (auto v = integer(k)) {
      if (*v >= lo && *v <= 1000000000LL) target = static_cast<int>(*v);
      else fail(k, "must be an integer >= " + std::to_string(lo));
    }
  }

  std::vector<std::string>& errors() { return errors_; }

 private:
  const ConfigFile& f_;
  std::vector<std::string> errors_;
};

void read_region(Reader& r, const std::string& prefix, RegionParameters& p, int dim) {
  r.positive(prefix + ".a", p.a);
  r.positive(prefix + ".b", p.b);
  r.nonnegative(prefix + ".c", p.c);
  if (auto f = r.vec(prefix + ".force", dim)) p.force = *f;
}

}  // namespace

ScenarioConfig load_scenario(const ConfigFile& file) {
  Reader r(file);
  ScenarioConfig c;

  for (const auto& key : file.keys()) {
    bool known = false;
    for (const auto& [k, d] : config_schema()) known = known || k == key;
    if (!known) r.fail(key, "unknown key");
  }

  if (auto v = r.text("name")) c.name = *v;
  if (auto v = r.integer("seed")) {
    if (*v >= 0) c.seed = static_cast<std::uint64_t>(*v);
    else r.fail("seed", "must be nonnegative");
  }
  if (auto v = r.text("output.dir")) c.output_dir = *v;

  if (auto v = r.text("body.demo")) {
    if (*v == "disk_in_disk" || *v == "disk_in_square") c.dim = 2;
    else if (*v == "ball_in_cube") c.dim = 3;
    else r.fail("body.demo", "unknown demo '" + *v + "'");
    c.demo = *v;
  }
  if (auto v = r.integer("dim")) {
    if (*v != 2 && *v != 3) r.fail("dim", "must be 2 or 3");
    else if (!c.demo.empty() && *v != c.dim) r.fail("dim", "contradicts body.demo");
    else c.dim = static_cast<int>(*v);
  }
  if (auto v = r.integer("body.level")) {
    if (*v < 1 || *v > 3) r.fail("body.level", "must be 1, 2 or 3");
    else c.level = static_cast<int>(*v);
  }
  if (auto v = r.text("body.mesh")) {
    if (!c.demo.empty()) r.fail("body.mesh", "give either body.demo or body.mesh");
    c.mesh_path = *v;
  }
  if (auto v = r.text("body.deformation")) {
    if (!c.has_body()) r.fail("body.deformation", "needs body.demo or body.mesh");
    c.deformation_path = *v;
  }
  const int d = c.dim;

  c.material = MaterialModel::standard(d);
  if (auto v = r.number("material.q")) c.material.q = *v;
  if (auto v = r.number("material.s")) c.material.s = *v;
  read_region(r, "material.conductor", c.material.conductor, d);
  read_region(r, "material.insulator", c.material.insulator, d);
  if (!(c.material.q > d)) r.fail("material.q", "must exceed the dimension " + std::to_string(d));
  if (!(c.material.s > d - 1)) r.fail("material.s", "must exceed d - 1 = " + std::to_string(d - 1));

  if (auto v = r.number("charge")) {
    if (*v >= 0.0) c.charge = *v;
    else r.fail("charge", "must be nonnegative");
  }
  if (auto v = r.text("functional")) {
    if (*v == "F1") c.kind = FunctionalKind::F1;
    else if (*v == "F2") c.kind = FunctionalKind::F2;
    else r.fail("functional", "must be F1 or F2");
  }
  if (c.kind == FunctionalKind::F1 && d != 3) r.fail("functional", "F1 is defined in three dimensions only");

  r.positive("grid.h", c.grid_h);
  const auto lo = r.vec("grid.lo", d);
  const auto hi = r.vec("grid.hi", d);
  if (lo.has_value() != hi.has_value()) {
    r.fail(lo ? "grid.hi" : "grid.lo", "grid.lo and grid.hi must be given together");
  } else if (lo && hi) {
    if (((*hi - *lo).array() <= 0.0).any()) r.fail("grid.hi", "must exceed grid.lo in every coordinate");
    c.has_grid_box = true;
    c.grid_lo = *lo;
    c.grid_hi = *hi;
  }

  if (auto v = r.text("capacity.mode")) {
    if (*v != "relative" && *v != "self") r.fail("capacity.mode", "must be relative or self");
    else if (*v == "self" && d != 3) r.fail("capacity.mode", "self-capacity is three-dimensional");
    c.capacity_mode = *v;
  }
  c.conductor.center = Vec::Zero(d);
  c.domain.center = Vec::Zero(d);
  c.conductor.radius = 0.25;
  c.domain.radius = 1.0;
  if (auto v = r.vec("capacity.conductor.center", d)) c.conductor.center = *v;
  if (auto v = r.vec("capacity.domain.center", d)) c.domain.center = *v;
  r.positive("capacity.conductor.radius", c.conductor.radius);
  r.positive("capacity.domain.radius", c.domain.radius);
  if (auto v = r.numbers("capacity.radii")) {
    bool ok = v->size() >= 3;
    for (std::size_t i = 0; i < v->size(); ++i) ok = ok && (*v)[i] > 0.0 && (i == 0 || (*v)[i] > (*v)[i - 1]);
    if (!ok) r.fail("capacity.radii", "need at least three positive increasing radii");
    else c.schedule.radii = *v;
  }
  r.int_at_least("capacity.cells_per_axis", c.schedule.cells_per_axis, 16);
  r.positive("capacity.tolerance", c.schedule.solver.tolerance);
  r.int_at_least("capacity.max_iterations", c.schedule.solver.max_iterations, 0);
  r.nonnegative("capacity.distortion_p", c.schedule.distortion_p);

  OptimizerConfig& o = c.optimizer;
  if (auto v = r.text("optimizer.method")) {
    try {
      o.method = optimizer_method_from_string(*v);
    } catch (const Error&) {
      r.fail("optimizer.method", "must be pattern_search or gradient_hybrid");
    }
  }
  r.positive("optimizer.initial_step", o.initial_step);
  r.positive("optimizer.step_shrink", o.step_shrink);
  r.positive("optimizer.min_step", o.min_step);
  r.int_at_least("optimizer.max_iterations", o.max_iterations, 0);
  r.int_at_least("optimizer.capacity_refresh", o.capacity_refresh, 1);
  r.int_at_least("optimizer.stagnation_iterations", o.stagnation_iterations, 0);
  r.positive("optimizer.flux_window", o.flux_window);
  o.seed = c.seed;
  try {
    o.validate();
  } catch (const Error& e) {
    r.fail("optimizer", e.what());
  }

  const bool any_bump = r.has("bump.center") || r.has("bump.radius") || r.has("bump.amplitude") ||
                        r.has("bump.mode") || r.has("bump.direction");
  if (any_bump) {
    Bump b;
    b.center = Vec::Zero(d);
    b.direction = Vec::Zero(d);
    b.direction[0] = 1.0;
    if (auto v = r.vec("bump.center", d)) b.center = *v;
    r.positive("bump.radius", b.radius);
    if (auto v = r.number("bump.amplitude")) b.amplitude = *v;
    if (auto v = r.text("bump.mode")) {
      if (*v == "translate") b.mode = Bump::Mode::Translate;
      else if (*v == "radial") b.mode = Bump::Mode::Radial;
      else r.fail("bump.mode", "must be translate or radial");
    }
    if (auto v = r.vec("bump.direction", d)) {
      if (v->norm() == 0.0) r.fail("bump.direction", "must be nonzero");
      else b.direction = v->normalized();
    }
    c.bump = b;
  }

  VerifySettings& vs = c.verify;
  if (auto v = r.text("verify.select")) vs.selector = *v;
  vs.monotonicity.seed = c.seed;
  r.int_at_least("verify.trials", vs.monotonicity.trials, 1);
  r.positive("verify.h", vs.monotonicity.h);
  r.positive("verify.box_half_width", vs.monotonicity.box_half_width);
  r.int_at_least("verify.chain_length", vs.monotonicity.chain_length, 1);
  r.positive("verify.eps0_cells", vs.monotonicity.eps0_cells);
  r.positive("verify.residual_factor", vs.monotonicity.residual_factor);
  r.int_at_least("verify.koch.max_level", vs.koch.max_level, 0);
  r.positive("verify.koch.h", vs.koch.h);
  r.positive("verify.koch.side", vs.koch.side);
  r.positive("verify.koch.enclosing_radius", vs.koch.enclosing_radius);
  r.positive("verify.koch.area_tolerance", vs.koch.area_tolerance);
  vs.koch.solver = c.schedule.solver;
  if (auto v = r.number("sequence.decay")) {
    if (*v > 0.0 && *v < 1.0) vs.sequence.decay = *v;
    else r.fail("sequence.decay", "must lie in (0, 1)");
  }
  r.int_at_least("sequence.n_max", vs.sequence.n_max, 0);
  r.nonnegative("sequence.grid_constant", vs.sequence.grid_constant);
  vs.sequence.schedule = c.schedule;
  r.positive("regularity.b", vs.regularity_b);
  r.positive("regularity.r0", vs.regularity_r0);
  r.nonnegative("regularity.slack", vs.regularity_slack);
  r.int_at_least("regularity.members", vs.regularity_members, 1);

  if (!r.errors().empty()) {
    std::string msg = "invalid config " + file.source();
    for (const auto& e : r.errors()) msg += "\n  " + e;
    throw Error(ErrorCode::ConfigInvalid, msg);
  }
  return c;
}

}  // namespace elcap::cli
