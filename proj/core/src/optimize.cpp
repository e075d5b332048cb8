#include "elcap/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/Geometry>

#include "elcap/error.hpp"
#include "text_io.hpp"

namespace elcap {

std::string to_string(OptimizerMethod m) {
  return m == OptimizerMethod::PatternSearch ? "pattern_search" : "gradient_hybrid";
}

OptimizerMethod optimizer_method_from_string(const std::string& s) {
  if (s == "pattern_search") return OptimizerMethod::PatternSearch;
  if (s == "gradient_hybrid") return OptimizerMethod::GradientHybrid;
  throw Error(ErrorCode::InvalidArgument, "unknown optimizer method '" + s + "'");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::StepConverged:
      return "step_converged";
    case Termination::IterationCap:
      return "iteration_cap";
    case Termination::Stagnation:
      return "stagnation";
  }
  return "unknown";
}

void OptimizerConfig::validate() const {
  if (!(min_step > 0.0) || !(min_step < initial_step)) {
    throw Error(ErrorCode::InvalidArgument, "need 0 < min_step < initial_step");
  }
  if (!(step_shrink > 0.0) || !(step_shrink < 1.0)) throw Error(ErrorCode::InvalidArgument, "need 0 < step_shrink < 1");
  if (max_iterations < 0) throw Error(ErrorCode::InvalidArgument, "max_iterations must be nonnegative");
  if (capacity_refresh < 1) throw Error(ErrorCode::InvalidArgument, "capacity_refresh must be at least 1");
  if (stagnation_iterations < 0) throw Error(ErrorCode::InvalidArgument, "stagnation_iterations must be nonnegative");
  if (!(flux_window > 0.0)) throw Error(ErrorCode::InvalidArgument, "flux_window must be positive");
}

namespace {

// Q^2 / (2 cap^2) |grad v|^2 times the vertex share of the conductor
// boundary's vector area.
std::vector<Vec> shape_force(const Deformation& def, double charge, const CapacityResult& capacity,
                             double flux_window) {
  const ReferenceDomain& m = def.domain();
  const int d = m.dim();
  std::vector<Vec> force(m.vertex_count(), zero_vec(d));
  if (charge == 0.0 || capacity.value <= 0.0) return force;

  // vector area of the deformed conductor boundary shared out to vertices
  std::vector<Vec> area(m.vertex_count(), zero_vec(d));
  std::vector<std::uint8_t> on_boundary(m.vertex_count(), 0);
  for (const Facet& f : m.conductor_facets()) {
    const Simplex& el = m.element(static_cast<std::size_t>(f.element));
    int opposite = -1;
    for (int i = 0; i <= d; ++i) {
      if (std::find(f.v.begin(), f.v.begin() + d, el[i]) == f.v.begin() + d) opposite = el[i];
    }
    const Vec& p0 = def.position(static_cast<std::size_t>(f.v[0]));
    const Vec& p1 = def.position(static_cast<std::size_t>(f.v[1]));
    Vec n(d);
    if (d == 2) {
      const Vec t = p1 - p0;
      n << t[1], -t[0];
    } else {
      const Vec& p2 = def.position(static_cast<std::size_t>(f.v[2]));
      const Eigen::Vector3d a = (p1 - p0), b = (p2 - p0);
      n = 0.5 * a.cross(b);
    }
    if (n.dot(p0 - def.position(static_cast<std::size_t>(opposite))) < 0.0) n = -n;
    for (int i = 0; i < d; ++i) {
      area[static_cast<std::size_t>(f.v[i])] += n / d;
      on_boundary[static_cast<std::size_t>(f.v[i])] = 1;
    }
  }

  const std::vector<FluxSample> flux = boundary_flux_density(capacity, flux_window);
  if (flux.empty()) return force;
  const double scale = charge * charge / (2.0 * capacity.value * capacity.value);
  for (std::size_t v = 0; v < m.vertex_count(); ++v) {
    if (!on_boundary[v] || m.is_clamped(v)) continue;
    const Vec& x = def.position(v);
    double best = std::numeric_limits<double>::infinity();
    double rho = 0.0;
    for (const FluxSample& s : flux) {
      const double dist = (s.point - x).squaredNorm();
      if (dist < best) {
        best = dist;
        rho = s.density;
      }
    }
    force[v] = scale * rho * area[v];
  }
  return force;
}

}  // namespace

std::vector<Vec> gradient_step_direction(const Deformation& def, const MaterialModel& model, double charge,
                                         const CapacityResult& capacity, double flux_window) {
  std::vector<Vec> dir = elastic_gradient(def, model);
  const std::vector<Vec> force = shape_force(def, charge, capacity, flux_window);
  for (std::size_t v = 0; v < dir.size(); ++v) dir[v] = force[v] - dir[v];
  return dir;
}

namespace {

// Fisher-Yates with raw 64-bit draws so the order does not depend on the
// standard library's distribution implementations.
void seeded_shuffle(std::vector<int>& v, std::mt19937_64& gen) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(gen() % i);
    std::swap(v[i - 1], v[j]);
  }
}

double decrease_tolerance(double reference) { return 1e-13 * std::max(1.0, std::abs(reference)); }

bool strictly_below(EnergyValue candidate, EnergyValue reference) {
  if (!candidate.is_finite()) return false;
  if (!reference.is_finite()) return true;
  return candidate.value() < reference.value() - decrease_tolerance(reference.value());
}

struct Move {
  int vertex;
  Vec position;
  double decrease;
  bool shapes_image;
};

class Optimizer {
 public:
  Optimizer(const Deformation& def0, const MaterialModel& model, double charge, FunctionalKind kind,
            const EulerianGrid& grid, const CapacitySchedule& schedule, const OptimizerConfig& cfg)
      : model_(model),
        charge_(charge),
        kind_(kind),
        grid_(grid),
        schedule_(schedule),
        cfg_(cfg),
        cur_(def0),
        gen_(cfg.seed),
        poll_step_(cfg.initial_step),
        grad_step_(cfg.initial_step) {
    const ReferenceDomain& m = def0.domain();
    free_ = m.free_vertices();
    shapes_.assign(m.vertex_count(), 0);
    for (int v : m.interface_vertices()) shapes_[static_cast<std::size_t>(v)] = 1;
    order_ = free_;
    seeded_shuffle(order_, gen_);
    batch_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(free_.size())))));
  }

  Trajectory run() {
    const AdmissibilityReport rep = check_admissibility(cur_, grid_, schedule_.distortion_p);
    if (!rep.admissible()) throw Error(ErrorCode::Inadmissible, "initial deformation is not admissible");
    cur_eval_ = evaluate(cur_);
    if (!cur_eval_.breakdown.total.is_finite()) {
      throw Error(ErrorCode::InfeasibleStart, "initial energy is infinite: " + cur_eval_.breakdown.reason);
    }
    Trajectory t{{}, cur_, Termination::IterationCap, 0};
    t.iterates.push_back({0, cur_eval_.breakdown, poll_step_, 0.0});
    trajectory_ = &t;

    int idle = 0;
    int it = 0;
    Termination term = Termination::IterationCap;
    while (true) {
      if (poll_step_ < cfg_.min_step) {
        term = Termination::StepConverged;
        break;
      }
      if (it >= cfg_.max_iterations) {
        term = Termination::IterationCap;
        break;
      }
      ++it;
      bool accepted = false;
      if (cfg_.method == OptimizerMethod::GradientHybrid) accepted = gradient_iteration(it);
      if (!accepted) accepted = poll_iteration(it);
      idle = accepted ? 0 : idle + 1;
      if (cfg_.stagnation_iterations > 0 && idle >= cfg_.stagnation_iterations) {
        term = Termination::Stagnation;
        break;
      }
    }
    t.final_deformation = cur_;
    t.termination = term;
    t.iterations = it;
    return t;
  }

 private:
  EnergyEvaluation evaluate(const Deformation& def) const {
    return evaluate_energy(def, model_, charge_, kind_, grid_, schedule_,
                           cur_eval_.capacity ? &*cur_eval_.capacity : nullptr);
  }

  bool try_accept(const Deformation& cand, int it, double step) {
    EnergyEvaluation ev = evaluate(cand);
    if (!ev.breakdown.admissibility.admissible()) return false;
    if (!strictly_below(ev.breakdown.total, cur_eval_.breakdown.total)) return false;
    const double disp = cand.max_displacement_from(cur_);
    cur_ = cand;
    cur_eval_ = std::move(ev);
    trajectory_->iterates.push_back({it, cur_eval_.breakdown, step, disp});
    cycle_progress_ = true;
    return true;
  }

  std::vector<int> next_batch() {
    std::vector<int> out;
    while (out.size() < batch_ && !order_.empty()) {
      if (cursor_ == order_.size()) {
        if (!cycle_progress_) poll_step_ *= cfg_.step_shrink;
        cycle_progress_ = false;
        seeded_shuffle(order_, gen_);
        cursor_ = 0;
        if (!out.empty()) break;
        if (poll_step_ < cfg_.min_step) break;
      }
      out.push_back(order_[cursor_++]);
    }
    return out;
  }

  bool poll_iteration(int it) {
    const std::vector<int> batch = next_batch();
    if (batch.empty() || poll_step_ < cfg_.min_step) return false;
    const int d = cur_.dim();
    const bool electro = charge_ != 0.0;
    const bool refresh = electro && ((it - 1) % cfg_.capacity_refresh == 0);
    const double step = poll_step_;

    Deformation trial = cur_;
    std::vector<Move> moves;
    // electrostatic energy of `trial`, known exactly while only screened moves are applied
    double trial_elec = cur_eval_.breakdown.electrostatic.value_or(0.0);
    for (int v : batch) {
      const auto vs = static_cast<std::size_t>(v);
      const Vec origin = trial.position(vs);
      const EnergyValue base = local_elastic_energy(trial, model_, vs);
      if (!base.is_finite()) continue;
      const bool real = refresh && shapes_[vs];
      double best_gain = 0.0;
      Vec best_pos = origin;
      double best_elec = trial_elec;
      for (int k = 0; k < d; ++k) {
        for (int sign : {1, -1}) {
          Vec p = origin;
          p[k] += sign * step;
          trial.set_position(vs, p);
          const EnergyValue local = local_elastic_energy(trial, model_, vs);
          if (!local.is_finite()) continue;
          double gain = base.value() - local.value();
          double elec = trial_elec;
          if (real) {
            const EnergyEvaluation ev = evaluate(trial);
            if (!ev.breakdown.total.is_finite()) continue;
            elec = ev.breakdown.electrostatic.value();
            gain += trial_elec - elec;
          }
          if (gain > best_gain + decrease_tolerance(cur_eval_.breakdown.total.value())) {
            best_gain = gain;
            best_pos = p;
            best_elec = elec;
          }
        }
      }
      trial.set_position(vs, best_pos);
      if (best_gain > 0.0) {
        trial_elec = best_elec;
        moves.push_back({v, best_pos, best_gain, shapes_[vs] != 0});
      }
    }
    if (moves.empty()) return false;
    if (try_accept(trial, it, step)) return true;

    // Without the moves that reshape the images the electrostatic term is unchanged.
    const bool mixed = std::any_of(moves.begin(), moves.end(), [](const Move& m) { return m.shapes_image; }) &&
                       std::any_of(moves.begin(), moves.end(), [](const Move& m) { return !m.shapes_image; });
    if (mixed) {
      Deformation inner = cur_;
      for (const Move& mv : moves) {
        if (!mv.shapes_image) inner.set_position(static_cast<std::size_t>(mv.vertex), mv.position);
      }
      if (try_accept(inner, it, step)) return true;
    }
    if (moves.size() > 1) {
      const Move& best = *std::max_element(moves.begin(), moves.end(),
                                           [](const Move& a, const Move& b) { return a.decrease < b.decrease; });
      Deformation single = cur_;
      single.set_position(static_cast<std::size_t>(best.vertex), best.position);
      if (try_accept(single, it, step)) return true;
    }
    return false;
  }

  // Backtracking along the descent direction. Trial steps are screened with
  // the exact elastic energy plus the first-order electrostatic prediction;
  // only screened candidates get a full evaluation.
  bool gradient_iteration(int it) {
    if (!cur_eval_.capacity) return false;
    const std::vector<Vec> grad = elastic_gradient(cur_, model_);
    const std::vector<Vec> force = shape_force(cur_, charge_, *cur_eval_.capacity, cfg_.flux_window);
    std::vector<Vec> dir(grad.size());
    double maxn = 0.0, predicted_rate = 0.0;
    for (std::size_t v = 0; v < grad.size(); ++v) {
      dir[v] = force[v] - grad[v];
      if (cur_.domain().is_clamped(v)) dir[v].setZero();
    }
    for (int v : free_) {
      const auto vs = static_cast<std::size_t>(v);
      maxn = std::max(maxn, dir[vs].norm());
      predicted_rate += force[vs].dot(dir[vs]);
    }
    if (!(maxn > 0.0) || !std::isfinite(maxn)) return false;
    const ReferenceDomain& m = cur_.domain();
    const double total = cur_eval_.breakdown.total.value();
    const double elec = cur_eval_.breakdown.electrostatic.value();
    int full_evaluations = 0;
    double len = std::min(grad_step_, cfg_.initial_step);
    while (len >= cfg_.min_step && full_evaluations < 3) {
      Deformation cand = cur_;
      const double t = len / maxn;
      for (int v : free_) {
        const auto vs = static_cast<std::size_t>(v);
        cand.set_position(vs, cur_.position(vs) + t * dir[vs]);
      }
      bool positive = true;
      for (std::size_t e = 0; e < m.element_count() && positive; ++e) positive = element_det(cand, e) > 0.0;
      if (positive) {
        const EnergyValue el = elastic_energy(cand, model_);
        if (el.is_finite() && el.value() + elec - t * predicted_rate < total - decrease_tolerance(total)) {
          ++full_evaluations;
          if (try_accept(cand, it, len)) {
            grad_step_ = std::min(2.0 * len, cfg_.initial_step);
            return true;
          }
        }
      }
      len *= cfg_.step_shrink;
    }
    grad_step_ = std::max(len, cfg_.min_step);
    return false;
  }

  const MaterialModel& model_;
  double charge_;
  FunctionalKind kind_;
  const EulerianGrid& grid_;
  const CapacitySchedule& schedule_;
  const OptimizerConfig& cfg_;

  Deformation cur_;
  EnergyEvaluation cur_eval_;
  Trajectory* trajectory_ = nullptr;

  std::vector<int> free_;
  std::vector<std::uint8_t> shapes_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
  std::size_t batch_ = 1;
  bool cycle_progress_ = false;
  std::mt19937_64 gen_;
  double poll_step_;
  double grad_step_;
};

}  // namespace

Trajectory minimize(const Deformation& def0, const MaterialModel& model, double charge, FunctionalKind kind,
                    const EulerianGrid& grid, const CapacitySchedule& schedule, const OptimizerConfig& config) {
  config.validate();
  model.validate(def0.dim());
  Optimizer opt(def0, model, charge, kind, grid, schedule, config);
  return opt.run();
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  out << "iteration,elastic,capacity,electrostatic,total,step,max_displacement\n";
  for (const auto& e : t.iterates) {
    out << e.iteration << "," << to_string(e.energy.elastic) << "," << detail::fmt(e.energy.capacity_value) << ","
        << to_string(e.energy.electrostatic) << "," << to_string(e.energy.total) << "," << detail::fmt(e.step) << ","
        << detail::fmt(e.max_displacement) << "\n";
  }
}

}  // namespace elcap
