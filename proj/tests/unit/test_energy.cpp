#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "elcap/energy.hpp"
#include "elcap/error.hpp"
#include "oracles.hpp"

using namespace elcap;

namespace {

std::shared_ptr<const ReferenceDomain> mesh(const std::string& name, int level = 1) {
  return std::make_shared<const ReferenceDomain>(demo::by_name(name, level));
}

Mat rotation2(double t) {
  Mat R(2, 2);
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return R;
}

Mat random_matrix(std::mt19937_64& rng, int d, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  Mat F = Mat::Identity(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) F(i, j) += u(rng);
  }
  return F;
}

}  // namespace

TEST(Density, IdentityIsZero) {
  for (int d : {2, 3}) {
    const MaterialModel m = MaterialModel::standard(d);
    EXPECT_NEAR(density(m, Region::Conductor, Mat::Identity(d, d)).value(), 0.0, 1e-13);
  }
}

TEST(Density, ClosedFormStretch) {
  // F = diag(2, 1), q = 3, s = 2: |F|^2 = 5, det = 2
  const MaterialModel m = MaterialModel::standard(2);
  Mat F = Mat::Identity(2, 2);
  F(0, 0) = 2.0;
  const double expected = (std::pow(5.0, 1.5) - std::pow(2.0, 1.5)) + (25.0 / 4.0 - 4.0) + 1.0;
  EXPECT_NEAR(density(m, Region::Insulator, F).value(), expected, 1e-12);
}

TEST(Density, NonPositiveDetIsInfinite) {
  const MaterialModel m = MaterialModel::standard(2);
  Mat F = Mat::Identity(2, 2);
  F(0, 0) = -1.0;
  EXPECT_FALSE(density(m, Region::Conductor, F).is_finite());
  EXPECT_FALSE(density(m, Region::Conductor, Mat::Zero(2, 2)).is_finite());
}

TEST(Density, FrameIndifferentAndIsotropic) {
  std::mt19937_64 rng(5);
  const MaterialModel m = MaterialModel::standard(2);
  for (int k = 0; k < 50; ++k) {
    const Mat F = random_matrix(rng, 2, 0.3);
    if (F.determinant() <= 0.0) continue;
    const double w = density(m, Region::Conductor, F).value();
    const Mat R = rotation2(0.1 * k);
    EXPECT_NEAR(density(m, Region::Conductor, R * F).value(), w, 1e-10 * std::max(1.0, std::abs(w)));
    EXPECT_NEAR(density(m, Region::Conductor, F * R).value(), w, 1e-10 * std::max(1.0, std::abs(w)));
  }
}

TEST(Density, GrowthLowerBound) {
  std::mt19937_64 rng(9);
  for (int d : {2, 3}) {
    MaterialModel m = MaterialModel::standard(d);
    m.insulator.a = 0.3;
    m.insulator.b = 2.0;
    const double cw = m.growth_constant(d);
    ASSERT_GT(cw, 0.0);
    for (int k = 0; k < 200; ++k) {
      const Mat F = random_matrix(rng, d, 0.8);
      const double det = F.determinant();
      if (det <= 0.0) continue;
      const double n = F.norm();
      const double bound = cw * (std::pow(n, m.q) + std::pow(n, d * m.s) / std::pow(det, m.s)) - 1.0 / cw;
      for (Region r : {Region::Conductor, Region::Insulator}) EXPECT_GE(density(m, r, F).value(), bound);
    }
  }
}

TEST(Stress, MatchesDensityDifferences) {
  std::mt19937_64 rng(13);
  for (int d : {2, 3}) {
    const MaterialModel m = MaterialModel::standard(d);
    for (int k = 0; k < 20; ++k) {
      const Mat F = random_matrix(rng, d, 0.25);
      if (F.determinant() <= 0.0) continue;
      const Mat P = stress(m, Region::Conductor, F);
      Mat fd(d, d);
      const double step = 1e-6;
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          Mat Fp = F, Fm = F;
          Fp(i, j) += step;
          Fm(i, j) -= step;
          fd(i, j) = (density(m, Region::Conductor, Fp).value() - density(m, Region::Conductor, Fm).value()) /
                     (2.0 * step);
        }
      }
      EXPECT_LE((P - fd).norm(), 1e-6 * std::max(1.0, P.norm()));
    }
  }
}

TEST(ElasticGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  for (const char* name : {"disk_in_disk", "disk_in_square", "ball_in_cube"}) {
    const auto m = mesh(name);
    MaterialModel model = MaterialModel::standard(m->dim());
    model.conductor.force = Vec::Constant(m->dim(), 0.3);
    model.insulator.c = 2.0;
    for (int k = 0; k < 5; ++k) {
      const Deformation def = oracle::random_admissible(m, rng);
      const auto g = elastic_gradient(def, model);
      const auto fd = oracle::fd_elastic_gradient(def, model, 1e-6);
      EXPECT_LE(oracle::relative_error(g, fd), 1e-5) << name << " state " << k;
      for (int v : m->gamma0()) EXPECT_EQ(g[v].norm(), 0.0);
    }
  }
}

TEST(ElasticEnergy, IdentityIsZeroAndMinimalWhenClamped) {
  std::mt19937_64 rng(19);
  for (const char* name : {"disk_in_disk", "disk_in_square"}) {
    const auto m = mesh(name);
    const MaterialModel model = MaterialModel::standard(2);
    EXPECT_NEAR(elastic_energy(Deformation(m), model).value(), 0.0, 1e-12);
    const auto g = elastic_gradient(Deformation(m), model);
    for (const auto& row : g) EXPECT_LE(row.norm(), 1e-12);
    for (int k = 0; k < 10; ++k) {
      EXPECT_GE(elastic_energy(oracle::random_admissible(m, rng), model).value(), -1e-12);
    }
  }
}

TEST(ElasticEnergy, LocalEnergyTracksTotal) {
  std::mt19937_64 rng(23);
  const auto m = mesh("disk_in_square");
  const MaterialModel model = MaterialModel::standard(2);
  const Deformation a = oracle::random_admissible(m, rng);
  const int v = m->free_vertices()[40];
  Deformation b = a;
  b.set_position(v, a.position(v) + Vec::Constant(2, 0.01));
  const double dtotal = elastic_energy(b, model).value() - elastic_energy(a, model).value();
  const double dlocal = local_elastic_energy(b, model, v).value() - local_elastic_energy(a, model, v).value();
  EXPECT_NEAR(dlocal, dtotal, 1e-12);
}

TEST(ElasticEnergy, DeadLoadWork) {
  // the load term is -sum_e f_e . vol_e * (mean vertex displacement of e)
  std::mt19937_64 rng(29);
  const auto m = mesh("disk_in_square");
  MaterialModel loaded = MaterialModel::standard(2);
  Vec fc(2), fi(2);
  fc << 0.5, -2.0;
  fi << -1.0, 0.25;
  loaded.conductor.force = fc;
  loaded.insulator.force = fi;
  const Deformation def = oracle::random_admissible(m, rng);
  double work = 0.0;
  for (std::size_t e = 0; e < m->element_count(); ++e) {
    Vec mean = Vec::Zero(2);
    for (int k = 0; k < 3; ++k) mean += (def.position(m->element(e)[k]) - m->vertex(m->element(e)[k])) / 3.0;
    work += m->reference_volume(e) * (m->region(e) == Region::Conductor ? fc : fi).dot(mean);
  }
  const double diff = elastic_energy(def, loaded).value() - elastic_energy(def, MaterialModel::standard(2)).value();
  EXPECT_NEAR(diff, -work, 1e-12);
}

TEST(MaterialModel, ValidationRejectsBadExponents) {
  MaterialModel m = MaterialModel::standard(2);
  m.q = 2.0;
  EXPECT_THROW(m.validate(2), Error);
  m = MaterialModel::standard(3);
  m.s = 1.5;
  EXPECT_THROW(m.validate(3), Error);
  m = MaterialModel::standard(2);
  m.conductor.a = 0.0;
  EXPECT_THROW(m.validate(2), Error);
}

TEST(EnergyValue, SentinelArithmeticAndText) {
  const EnergyValue inf = EnergyValue::infinite();
  EXPECT_FALSE((inf + EnergyValue(1.0)).is_finite());
  EXPECT_TRUE(EnergyValue(1e300) < inf);
  EXPECT_FALSE(inf < inf);
  EXPECT_EQ(to_string(inf), "inf");
  EXPECT_TRUE(energy_from_string("inf") == inf);
  EXPECT_TRUE(energy_from_string(to_string(EnergyValue(0.1))) == EnergyValue(0.1));
  EXPECT_THROW((void)inf.value(), Error);
}

TEST(TotalEnergy, IdentityBreakdowns) {
  const auto m = mesh("disk_in_disk");
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 64.0);
  const MaterialModel model = MaterialModel::standard(2);
  const EnergyBreakdown zero = total_energy(Deformation(m), model, 0.0, FunctionalKind::F2, g);
  EXPECT_EQ(zero.elastic.value(), 0.0);
  EXPECT_EQ(zero.total.value(), 0.0);
  const EnergyBreakdown one = total_energy(Deformation(m), model, 1.0, FunctionalKind::F2, g);
  const double exact = std::log(4.0) / (4.0 * M_PI);
  EXPECT_NEAR(one.total.value(), exact, 0.02 * exact);
  EXPECT_TRUE(one.reason.empty());
}

TEST(TotalEnergy, InvertedElementIsInfiniteWithReason) {
  const auto m = mesh("disk_in_disk");
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 64.0);
  Deformation bad(m);
  const int v = m->free_vertices()[10];
  bad.set_position(v, m->vertex(v) + Vec::Constant(2, 0.5));
  const EnergyBreakdown e = total_energy(bad, MaterialModel::standard(2), 1.0, FunctionalKind::F2, g);
  EXPECT_FALSE(e.total.is_finite());
  EXPECT_NE(e.reason.find("Inadmissible"), std::string::npos);
  std::stringstream s;
  write_energy_record(s, e);
  EXPECT_NE(s.str().find("total inf\n"), std::string::npos);
}

TEST(TotalEnergy, SelfCapacityFunctionalNeedsThreeDimensions) {
  const auto m = mesh("disk_in_disk");
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 32.0);
  EXPECT_THROW((void)total_energy(Deformation(m), MaterialModel::standard(2), 1.0, FunctionalKind::F1, g), Error);
}

TEST(TotalEnergy, SelfCapacityFunctionalOnCube) {
  const auto m = mesh("ball_in_cube");
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 16.0, 3);
  CapacitySchedule sched;
  sched.cells_per_axis = 40;
  const EnergyBreakdown e = total_energy(Deformation(m), MaterialModel::standard(3), 1.0, FunctionalKind::F1, g, sched);
  ASSERT_TRUE(e.total.is_finite()) << e.reason;
  // the conductor is a polyhedral ball of radius about 0.5: cap near 4 pi 0.5
  EXPECT_GT(e.capacity_value, 0.6 * 2.0 * M_PI);
  EXPECT_LT(e.capacity_value, 1.4 * 2.0 * M_PI);
  EXPECT_NEAR(e.electrostatic.value(), 0.5 / e.capacity_value, 1e-15);
}
