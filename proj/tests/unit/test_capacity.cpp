#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "elcap/capacity.hpp"
#include "elcap/error.hpp"
#include "oracles.hpp"

using namespace elcap;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

}  // namespace

TEST(Capacity, MatchesRelaxationOracle2D) {
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 24.0);
  Vec c(2);
  c << 0.1, -0.05;
  const SetMask E = oracle::disk(g, SetKind::Compact, c, 0.2)
                        .unite(oracle::disk(g, SetKind::Compact, Vec::Constant(2, -0.4), 0.12));
  const SetMask D = oracle::disk(g, SetKind::Open, Vec::Zero(2), 0.95);
  const CapacityResult r = relative_capacity(E, D);
  const auto v = oracle::sor_potential(E, D);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(r.potential[i], v[i], 1e-8);
  EXPECT_NEAR(r.value, oracle::flux_capacity(E, v), 1e-8 * r.value);
  EXPECT_LE(r.residual, 1e-10);
}

TEST(Capacity, MatchesRelaxationOracle3D) {
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 8.0, 3);
  const SetMask E = oracle::disk(g, SetKind::Compact, Vec::Zero(3), 0.3);
  const SetMask D = oracle::disk(g, SetKind::Open, Vec::Zero(3), 0.9);
  const CapacityResult r = relative_capacity(E, D);
  const auto v = oracle::sor_potential(E, D);
  EXPECT_NEAR(r.value, oracle::flux_capacity(E, v), 1e-8 * r.value);
}

TEST(Capacity, EnergyEqualsFluxIdentity) {
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 64.0);
  const SetMask E = oracle::disk(g, SetKind::Compact, Vec::Zero(2), 0.3);
  const SetMask D = oracle::disk(g, SetKind::Open, Vec::Zero(2), 1.0);
  const CapacityResult r = relative_capacity(E, D);
  EXPECT_NEAR(r.value, dirichlet_energy(r.potential, D), 1e-12 * r.value);
  const auto flux = boundary_flux_density(r);
  EXPECT_NEAR(total_flux(flux, g), r.value, 1e-8 * r.value);
}

TEST(Capacity, AnnulusAnalytic) {
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 128.0);
  const SetMask E = oracle::disk(g, SetKind::Compact, Vec::Zero(2), 0.25);
  const SetMask D = oracle::disk(g, SetKind::Open, Vec::Zero(2), 1.0);
  const double exact = 2.0 * M_PI / std::log(4.0);
  EXPECT_NEAR(relative_capacity(E, D).value, exact, 0.02 * exact);
}

TEST(Capacity, AnnulusFluxDensityAnalytic) {
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 256.0);
  const double r = 0.25;
  const SetMask E = oracle::disk(g, SetKind::Compact, Vec::Zero(2), r);
  const SetMask D = oracle::disk(g, SetKind::Open, Vec::Zero(2), 1.0);
  const CapacityResult res = relative_capacity(E, D);
  const double exact = std::pow(1.0 / (r * std::log(1.0 / r)), 2);
  const auto flux = boundary_flux_density(res);
  ASSERT_FALSE(flux.empty());
  double mean = 0.0;
  for (const auto& s : flux) {
    EXPECT_NEAR(s.density, exact, 0.05 * exact);
    mean += s.density;
    // the smoothed surface normal points away from the center
    EXPECT_GT(s.surface_normal.dot(s.point.normalized()), 0.95);
  }
  EXPECT_NEAR(mean / static_cast<double>(flux.size()), exact, 0.02 * exact);
}

TEST(Capacity, ConductorEqualsDomainShellIsLargest) {
  // monotonicity in E: a grown conductor never lowers the capacity
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 64.0);
  const SetMask D = oracle::disk(g, SetKind::Open, Vec::Zero(2), 1.0);
  double prev = 0.0;
  for (double r : {0.1, 0.2, 0.4, 0.6, 0.8}) {
    const double c = relative_capacity(oracle::disk(g, SetKind::Compact, Vec::Zero(2), r), D).value;
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(Capacity, PreconditionErrors) {
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 32.0);
  const SetMask D = oracle::disk(g, SetKind::Open, Vec::Zero(2), 0.5);
  EXPECT_EQ(code_of([&] { (void)relative_capacity(SetMask(g, SetKind::Compact), D); }), ErrorCode::EmptySet);
  EXPECT_EQ(code_of([&] { (void)relative_capacity(oracle::disk(g, SetKind::Compact, Vec::Zero(2), 0.8), D); }),
            ErrorCode::InvalidArgument);
  // E fills D up to its boundary: no separating layer
  const SetMask tight = D.with_kind(SetKind::Compact);
  EXPECT_EQ(code_of([&] { (void)relative_capacity(tight, D); }), ErrorCode::DegenerateSeparation);
  const SetMask other(oracle::square_grid(1.0, 1.0 / 16.0), SetKind::Open);
  EXPECT_EQ(code_of([&] { (void)relative_capacity(oracle::disk(g, SetKind::Compact, Vec::Zero(2), 0.1), other); }),
            ErrorCode::MixedGrids);
}

TEST(Capacity, IterationCapRaisesSolverDiverged) {
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 64.0);
  const SetMask E = oracle::disk(g, SetKind::Compact, Vec::Zero(2), 0.25);
  const SetMask D = oracle::disk(g, SetKind::Open, Vec::Zero(2), 1.0);
  SolverOptions o;
  o.max_iterations = 1;
  o.tolerance = 1e-15;
  EXPECT_THROW((void)relative_capacity(E, D, o), SolverDivergedError);
}

TEST(Capacity, SolveIsDeterministic) {
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 96.0);
  const SetMask E = oracle::disk(g, SetKind::Compact, Vec::Constant(2, 0.1), 0.25);
  const SetMask D = oracle::disk(g, SetKind::Open, Vec::Zero(2), 1.0);
  const CapacityResult a = relative_capacity(E, D), b = relative_capacity(E, D);
  EXPECT_EQ(a.value, b.value);
  EXPECT_TRUE(a.potential == b.potential);
}

TEST(SelfCapacity, BallCoarse) {
  auto ball = [](const EulerianGrid& g) { return oracle::disk(g, SetKind::Compact, Vec::Zero(3), 1.0); };
  const CapacityResult r = self_capacity(ball, Vec::Zero(3), {2.0, 4.0, 8.0}, 64);
  ASSERT_EQ(r.extrapolation.size(), 3u);
  EXPECT_GT(r.extrapolation[0].capacity, r.extrapolation[1].capacity);
  EXPECT_GT(r.extrapolation[1].capacity, r.extrapolation[2].capacity);
  EXPECT_NEAR(r.value, 4.0 * M_PI, 0.12 * 4.0 * M_PI);
}

TEST(SelfCapacity, RejectsBadSchedules) {
  auto ball = [](const EulerianGrid& g) { return oracle::disk(g, SetKind::Compact, Vec::Zero(3), 1.0); };
  EXPECT_EQ(code_of([&] { (void)self_capacity(ball, Vec::Zero(3), {2.0, 4.0}, 32); }), ErrorCode::NeedThreeRadii);
  // truncation ball smaller than the conductor
  EXPECT_EQ(code_of([&] { (void)self_capacity(ball, Vec::Zero(3), {0.5, 4.0, 8.0}, 32); }),
            ErrorCode::InvalidArgument);
  auto tiny = [](const EulerianGrid& g) { return oracle::disk(g, SetKind::Compact, Vec::Zero(3), 1e-3); };
  EXPECT_EQ(code_of([&] { (void)self_capacity(tiny, Vec::Zero(3), {2.0, 4.0, 8.0}, 32); }),
            ErrorCode::FeatureBelowResolution);
}

TEST(CapacityRecord, RoundTrip) {
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 32.0);
  CapacityResult r = relative_capacity(oracle::disk(g, SetKind::Compact, Vec::Zero(2), 0.25),
                                       oracle::disk(g, SetKind::Open, Vec::Zero(2), 1.0));
  r.extrapolation = {{2.0, 3.5}, {4.0, 3.25}};
  r.warnings = {"ExtrapolationUnreliable: example"};
  std::stringstream s;
  write_capacity_record(s, r);
  const CapacityRecord back = read_capacity_record(s);
  EXPECT_EQ(back.value, r.value);
  EXPECT_EQ(back.residual, r.residual);
  EXPECT_EQ(back.iterations, r.iterations);
  ASSERT_EQ(back.extrapolation.size(), 2u);
  EXPECT_EQ(back.extrapolation[1].capacity, 3.25);
  ASSERT_EQ(back.warnings.size(), 1u);
  EXPECT_EQ(back.warnings[0], r.warnings[0]);
}
