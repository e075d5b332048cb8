#include <gtest/gtest.h>

#include <memory>
#include <sstream>

#include "elcap/error.hpp"
#include "elcap/optimize.hpp"
#include "oracles.hpp"

using namespace elcap;

namespace {

struct Demo {
  std::shared_ptr<const ReferenceDomain> mesh =
      std::make_shared<const ReferenceDomain>(demo::disk_in_disk(1));
  EulerianGrid grid = oracle::square_grid(1.0, 1.0 / 32.0);
  MaterialModel model = MaterialModel::standard(2);

  Deformation bumped(double amplitude) const {
    Vec c(2), dir(2);
    c << 0.2, 0.1;
    dir << 1.0, 0.0;
    return perturbed(Deformation(mesh), Bump{c, 0.5, amplitude, Bump::Mode::Translate, dir});
  }
};

std::string csv(const Trajectory& t) {
  std::ostringstream s;
  write_trajectory_csv(s, t);
  return s.str();
}

}  // namespace

TEST(Optimizer, ConfigValidation) {
  OptimizerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.min_step = c.initial_step;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.step_shrink = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.capacity_refresh = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(optimizer_method_from_string("gradient_hybrid"), OptimizerMethod::GradientHybrid);
  EXPECT_THROW((void)optimizer_method_from_string("newton"), Error);
}

TEST(Optimizer, UnloadedIdentityAcceptsNothing) {
  const Demo d;
  for (OptimizerMethod method : {OptimizerMethod::PatternSearch, OptimizerMethod::GradientHybrid}) {
    OptimizerConfig cfg;
    cfg.method = method;
    cfg.min_step = 1e-3;
    const Trajectory t = minimize(Deformation(d.mesh), d.model, 0.0, FunctionalKind::F2, d.grid, {}, cfg);
    EXPECT_EQ(t.accepted_steps(), 0u) << to_string(method);
    EXPECT_EQ(t.final_deformation.max_displacement_from(Deformation(d.mesh)), 0.0);
    EXPECT_EQ(t.termination, Termination::StepConverged);
  }
}

TEST(Optimizer, BumpStartDescendsStrictly) {
  const Demo d;
  for (OptimizerMethod method : {OptimizerMethod::PatternSearch, OptimizerMethod::GradientHybrid}) {
    OptimizerConfig cfg;
    cfg.method = method;
    cfg.max_iterations = 60;
    const Trajectory t = minimize(d.bumped(0.05), d.model, 0.0, FunctionalKind::F2, d.grid, {}, cfg);
    ASSERT_GT(t.accepted_steps(), 0u);
    for (std::size_t k = 1; k < t.iterates.size(); ++k) {
      EXPECT_LT(t.iterates[k].energy.total.value(), t.iterates[k - 1].energy.total.value());
      EXPECT_TRUE(t.iterates[k].energy.admissibility.admissible());
    }
    EXPECT_LT(t.iterates.back().energy.elastic.value(), t.iterates.front().energy.elastic.value());
  }
}

TEST(Optimizer, SameSeedSameTrajectory) {
  const Demo d;
  OptimizerConfig cfg;
  cfg.max_iterations = 30;
  cfg.seed = 42;
  const std::string a = csv(minimize(d.bumped(0.05), d.model, 1.0, FunctionalKind::F2, d.grid, {}, cfg));
  const std::string b = csv(minimize(d.bumped(0.05), d.model, 1.0, FunctionalKind::F2, d.grid, {}, cfg));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')), "iteration,elastic,capacity,electrostatic,total,step,max_displacement");
}

TEST(Optimizer, InadmissibleStartRejected) {
  const Demo d;
  Deformation bad(d.mesh);
  const int v = d.mesh->free_vertices()[20];
  bad.set_position(v, d.mesh->vertex(v) + Vec::Constant(2, 0.5));
  try {
    (void)minimize(bad, d.model, 0.0, FunctionalKind::F2, d.grid, {}, OptimizerConfig{});
    FAIL() << "expected Inadmissible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Inadmissible);
  }
}

TEST(Optimizer, ShapeForcePushesConductorOutward) {
  const Demo d;
  const Deformation id(d.mesh);
  const CapacityResult cap = conductor_capacity(id, FunctionalKind::F2, oracle::square_grid(1.0, 1.0 / 128.0));
  const auto dir = gradient_step_direction(id, d.model, 1.0, cap);
  int pushed = 0;
  for (int v : d.mesh->interface_vertices()) {
    const Vec& x = id.position(v);
    if (dir[v].norm() == 0.0) continue;
    EXPECT_GT(dir[v].normalized().dot(x.normalized()), 0.9);
    ++pushed;
  }
  EXPECT_GT(pushed, 0);
  const auto none = gradient_step_direction(id, d.model, 0.0, cap);
  for (const auto& row : none) EXPECT_LE(row.norm(), 1e-12);
}
