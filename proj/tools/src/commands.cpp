#include "elcap_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "elcap/optimize.hpp"
#include "elcap/verify.hpp"

#ifdef ELCAP_HAVE_OPENMP
#include <omp.h>
#endif

namespace elcap::cli {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
      return kConfigInvalid;
    case ErrorCode::SolverDiverged:
      return kSolverDiverged;
    case ErrorCode::Io:
      return kIo;
    default:
      return kPrecondition;
  }
}

namespace {

std::string detail_format(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Files are staged in memory and written only after the command succeeded.
class Outputs {
 public:
  std::ostream& add(const std::string& name) {
    files_.emplace_back(name, std::make_unique<std::ostringstream>());
    return *files_.back().second;
  }

  void commit(const std::string& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + dir + "': " + ec.message());
    for (const auto& [name, content] : files_) {
      const std::string path = (std::filesystem::path(dir) / name).string();
      std::ofstream out(path, std::ios::binary);
      out << content->str();
      if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    }
  }

 private:
  std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> files_;
};

std::string out_dir(const ScenarioConfig& cfg, const CommandOptions& opt) {
  return opt.out_dir.empty() ? cfg.output_dir : opt.out_dir;
}

struct Body {
  std::shared_ptr<const ReferenceDomain> mesh;
  Deformation limit;  ///< configured deformation (identity if none)
  Deformation start;  ///< limit with the configured bump applied
  EulerianGrid grid;
};

Body load_body(const ScenarioConfig& cfg, const std::string& deformation_override) {
  if (!cfg.has_body()) throw Error(ErrorCode::ConfigInvalid, "this command needs body.demo or body.mesh");
  std::shared_ptr<const ReferenceDomain> mesh;
  if (!cfg.demo.empty()) {
    mesh = std::make_shared<const ReferenceDomain>(demo::by_name(cfg.demo, cfg.level));
  } else {
    std::ifstream in(cfg.mesh_path);
    if (!in) throw Error(ErrorCode::Io, "cannot open mesh '" + cfg.mesh_path + "'");
    mesh = std::make_shared<const ReferenceDomain>(read_mesh(in));
  }
  if (mesh->dim() != cfg.dim) throw Error(ErrorCode::ConfigInvalid, "dim: mesh dimension differs from the config");
  const std::string path = deformation_override.empty() ? cfg.deformation_path : deformation_override;
  Deformation limit = path.empty() ? Deformation(mesh) : load_deformation(path, mesh);
  Deformation start = cfg.bump ? perturbed(limit, *cfg.bump) : limit;

  Vec lo, hi;
  if (cfg.has_grid_box) {
    lo = cfg.grid_lo;
    hi = cfg.grid_hi;
  } else {
    lo = hi = mesh->vertex(0);
    for (const Vec& v : mesh->vertices()) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }
  EulerianGrid grid = EulerianGrid::covering(lo, hi, cfg.grid_h, 2);
  return {mesh, std::move(limit), std::move(start), std::move(grid)};
}

EulerianGrid ball_grid(const ScenarioConfig& cfg, const BallSpec& ball) {
  if (cfg.has_grid_box) return EulerianGrid::covering(cfg.grid_lo, cfg.grid_hi, cfg.grid_h, 2);
  const Vec r = Vec::Constant(cfg.dim, ball.radius);
  return EulerianGrid::covering(ball.center - r, ball.center + r, cfg.grid_h, 2);
}

SetMask ball_mask(const EulerianGrid& g, SetKind kind, const BallSpec& b) {
  const double r2 = b.radius * b.radius;
  return SetMask::from_predicate(g, kind, [&](const Vec& x) {
    const double d2 = (x - b.center).squaredNorm();
    return kind == SetKind::Compact ? d2 <= r2 : d2 < r2;
  });
}

void write_reports(Outputs& files, const std::vector<PropertyReport>& reports, std::ostream& log) {
  std::ostream& txt = files.add("report.txt");
  for (const auto& r : reports) {
    write_report(txt, r);
    log << (r.passed() ? "PASS " : "FAIL ") << r.id << " trials=" << r.trials << " violations=" << r.violations
        << "\n";
  }
  write_report_csv(files.add("trials.csv"), reports);
}

int status_of(const std::vector<PropertyReport>& reports) {
  for (const auto& r : reports) {
    if (!r.passed()) return kPropertyViolated;
  }
  return kOk;
}

SemicontinuityResult run_sequence(const ScenarioConfig& cfg, const Body& body) {
  if (!cfg.bump) throw Error(ErrorCode::ConfigInvalid, "bump: the sequence needs bump.* settings");
  return check_semicontinuity(body.limit, *cfg.bump, cfg.kind, body.grid, cfg.verify.sequence);
}

PropertyReport run_regularity(const ScenarioConfig& cfg, const Body& body) {
  std::vector<SetMask> members;
  const VerifySettings& v = cfg.verify;
  for (int n = 0; n < v.regularity_members; ++n) {
    Bump b = cfg.bump.value_or(Bump{Vec::Zero(cfg.dim), 0.5, 0.0, Bump::Mode::Translate, Vec::Unit(cfg.dim, 0)});
    b.amplitude *= std::pow(v.sequence.decay, n);
    members.push_back(rasterize_image(perturbed(body.limit, b), ImageRegion::WholeDomain, body.grid));
  }
  const SetMask limit = rasterize_image(body.limit, ImageRegion::WholeDomain, body.grid);
  return check_regularity_closure(members, limit, v.regularity_b, v.regularity_r0, v.regularity_slack);
}

PropertyReport run_slit(const ScenarioConfig& cfg) {
  const VerifySettings& v = cfg.verify;
  const Vec r = Vec::Constant(2, 0.5);
  const EulerianGrid grid = EulerianGrid::covering(-r, r, cfg.grid_h, 2);
  std::vector<SetMask> seq = slit_sequence(grid, 0.5, 8.0 * cfg.grid_h, v.regularity_members);
  const SetMask limit = seq.back();
  seq.pop_back();
  return check_regularity_closure(seq, limit, v.regularity_b, v.regularity_r0, v.regularity_slack);
}

}  // namespace

bool known_selector(const std::string& s) {
  if (s == "monotonicity" || s == "koch" || s == "semicontinuity" || s == "regularity" || s == "regularity-slit") {
    return true;
  }
  const auto& ids = monotonicity_property_ids();
  return std::find(ids.begin(), ids.end(), s) != ids.end();
}

int cmd_capacity(const ScenarioConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  std::optional<CapacityResult> result;
  if (cfg.has_body()) {
    const Body body = load_body(cfg, "");
    result = conductor_capacity(body.start, cfg.kind, body.grid, cfg.schedule);
  } else if (cfg.capacity_mode == "relative") {
    const EulerianGrid grid = ball_grid(cfg, cfg.domain);
    result = relative_capacity(ball_mask(grid, SetKind::Compact, cfg.conductor), ball_mask(grid, SetKind::Open, cfg.domain),
                               cfg.schedule.solver);
  } else {
    const BallSpec ball = cfg.conductor;
    auto raster = [&ball](const EulerianGrid& g) { return ball_mask(g, SetKind::Compact, ball); };
    const std::vector<double> radii = cfg.schedule.radii.empty() ? default_radii(ball.radius) : cfg.schedule.radii;
    result = self_capacity(raster, ball.center, radii, cfg.schedule.cells_per_axis, cfg.schedule.solver);
  }
  Outputs files;
  write_capacity_record(files.add("capacity.txt"), *result);
  write_field(files.add("potential.bin"), result->potential);
  files.commit(out_dir(cfg, opt));
  log << "capacity " << detail_format(result->value) << " residual " << result->residual << " iterations "
      << result->iterations << "\n";
  for (const auto& w : result->warnings) log << "warning " << w << "\n";
  return kOk;
}

int cmd_energy(const ScenarioConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  const Body body = load_body(cfg, opt.deformation);
  const EnergyBreakdown e = total_energy(body.start, cfg.material, cfg.charge, cfg.kind, body.grid, cfg.schedule);
  Outputs files;
  write_energy_record(files.add("energy.txt"), e);
  files.commit(out_dir(cfg, opt));
  log << "total " << to_string(e.total) << "\n";
  if (!e.total.is_finite()) {
    log << "reason " << e.reason << "\n";
    return kInfiniteEnergy;
  }
  return kOk;
}

int cmd_minimize(const ScenarioConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  const Body body = load_body(cfg, "");
  const Trajectory t =
      minimize(body.start, cfg.material, cfg.charge, cfg.kind, body.grid, cfg.schedule, cfg.optimizer);
  Outputs files;
  write_trajectory_csv(files.add("trajectory.csv"), t);
  write_deformation(files.add("final_deformation.txt"), t.final_deformation);
  write_energy_record(files.add("energy.txt"), t.iterates.back().energy);
  std::ostream& sum = files.add("summary.txt");
  sum << "method " << to_string(cfg.optimizer.method) << "\n";
  sum << "seed " << cfg.optimizer.seed << "\n";
  sum << "termination " << to_string(t.termination) << "\n";
  sum << "iterations " << t.iterations << "\n";
  sum << "accepted_steps " << t.accepted_steps() << "\n";
  sum << "initial_total " << to_string(t.iterates.front().energy.total) << "\n";
  sum << "final_total " << to_string(t.iterates.back().energy.total) << "\n";
  sum << "final_capacity " << detail_format(t.iterates.back().energy.capacity_value) << "\n";
  files.commit(out_dir(cfg, opt));
  log << "termination " << to_string(t.termination) << " iterations " << t.iterations << " accepted "
      << t.accepted_steps() << " total " << to_string(t.iterates.front().energy.total) << " -> "
      << to_string(t.iterates.back().energy.total) << "\n";
  return kOk;
}

int cmd_verify(const ScenarioConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  const std::string sel = opt.selector.empty() ? cfg.verify.selector : opt.selector;
  if (!known_selector(sel)) throw UsageError("unknown property selector '" + sel + "'");
  Outputs files;
  std::vector<PropertyReport> reports;
  if (sel == "monotonicity") {
    reports = check_monotonicity_suite(cfg.verify.monotonicity);
  } else if (sel == "koch") {
    const KochStudy study = run_koch_study(cfg.verify.koch);
    write_koch_csv(files.add("koch.csv"), study);
    reports.push_back(study.report);
  } else if (sel == "semicontinuity") {
    const SemicontinuityResult res = run_sequence(cfg, load_body(cfg, ""));
    write_sequence_csv(files.add("sequence.csv"), res.sequence);
    reports.push_back(res.report);
  } else if (sel == "regularity") {
    reports.push_back(run_regularity(cfg, load_body(cfg, "")));
  } else if (sel == "regularity-slit") {
    reports.push_back(run_slit(cfg));
  } else {
    reports.push_back(check_monotonicity_property(sel, cfg.verify.monotonicity));
  }
  write_reports(files, reports, log);
  files.commit(out_dir(cfg, opt));
  return status_of(reports);
}

int cmd_sequence(const ScenarioConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  const SemicontinuityResult res = run_sequence(cfg, load_body(cfg, ""));
  Outputs files;
  write_sequence_csv(files.add("sequence.csv"), res.sequence);
  write_reports(files, {res.report}, log);
  files.commit(out_dir(cfg, opt));
  log << "limit_capacity " << detail_format(res.limit_capacity) << " tau " << detail_format(res.tau) << "\n";
  return status_of({res.report});
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"elcap: equilibria of charged deformable conductors"};
  app.require_subcommand(1, 1);
  std::string config;
  CommandOptions opt;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config, "scenario config file")->required();
  app.add_option("--out", opt.out_dir, "output directory (overrides output.dir)");
  app.add_option("--threads", threads, "worker thread cap; 0 keeps the default")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "random seed (overrides seed)");
  auto* capacity = app.add_subcommand("capacity", "capacity of the configured conductor");
  auto* energy = app.add_subcommand("energy", "energy breakdown of a deformation");
  energy->add_option("--deformation", opt.deformation, "deformation file (overrides body.deformation)");
  auto* minimize_cmd = app.add_subcommand("minimize", "descent from the configured start");
  auto* verify = app.add_subcommand("verify", "property verification harness");
  verify->add_option("--select", opt.selector, "property selector (overrides verify.select)");
  auto* sequence = app.add_subcommand("sequence", "capacities along a converging bump sequence");
  for (auto* sub : {capacity, energy, minimize_cmd, verify, sequence}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (!opt.selector.empty() && !known_selector(opt.selector)) {
      throw UsageError("unknown property selector '" + opt.selector + "'");
    }
#ifdef ELCAP_HAVE_OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif
    ConfigFile file = ConfigFile::load(config);
    if (seed) file.set("seed", std::to_string(*seed));
    const ScenarioConfig cfg = load_scenario(file);
    if (*capacity) return cmd_capacity(cfg, opt, out);
    if (*energy) return cmd_energy(cfg, opt, out);
    if (*minimize_cmd) return cmd_minimize(cfg, opt, out);
    if (*verify) return cmd_verify(cfg, opt, out);
    return cmd_sequence(cfg, opt, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kPrecondition;
  }
}

}  // namespace elcap::cli
