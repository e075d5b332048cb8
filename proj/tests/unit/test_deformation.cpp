#include <gtest/gtest.h>

#include <memory>
#include <sstream>

#include "elcap/deformation.hpp"
#include "elcap/error.hpp"
#include "oracles.hpp"

using namespace elcap;

namespace {

std::shared_ptr<const ReferenceDomain> mesh(const std::string& name, int level = 1) {
  return std::make_shared<const ReferenceDomain>(demo::by_name(name, level));
}

// y = A x + b on every free vertex; clamped vertices stay put.
Deformation affine_interior(const std::shared_ptr<const ReferenceDomain>& m, const Mat& A, const Vec& b) {
  Deformation def(m);
  for (int v : m->free_vertices()) def.set_position(v, A * m->vertex(v) + b);
  return def;
}

}  // namespace

TEST(Mesh, DemoVolumes) {
  const auto sq = mesh("disk_in_square", 2);
  EXPECT_NEAR(sq->total_volume(), 4.0, 1e-12);
  EXPECT_NEAR(sq->region_volume(Region::Conductor), M_PI * 0.0625, 0.05 * M_PI * 0.0625);
  const auto dd = mesh("disk_in_disk", 3);
  EXPECT_NEAR(dd->total_volume(), M_PI, 0.01 * M_PI);
  const auto cube = mesh("ball_in_cube", 1);
  EXPECT_NEAR(cube->total_volume(), 8.0, 1e-12);
  EXPECT_GT(cube->region_volume(Region::Conductor), 0.0);
}

TEST(Mesh, RoundTripAndUnknownDemo) {
  const auto m = mesh("disk_in_disk");
  std::stringstream s;
  write_mesh(s, *m);
  const ReferenceDomain back = read_mesh(s);
  ASSERT_EQ(back.vertex_count(), m->vertex_count());
  ASSERT_EQ(back.element_count(), m->element_count());
  for (std::size_t v = 0; v < m->vertex_count(); ++v) EXPECT_EQ(back.vertex(v), m->vertex(v));
  for (std::size_t e = 0; e < m->element_count(); ++e) EXPECT_EQ(back.region(e), m->region(e));
  EXPECT_EQ(back.gamma0().size(), m->gamma0().size());
  EXPECT_THROW((void)demo::by_name("torus", 1), Error);
}

TEST(Mesh, DegenerateElementRejected) {
  std::vector<Vec> v(4, Vec::Zero(2));
  v[1] << 1, 0;
  v[2] << 2, 0;
  v[3] << 0, 1;
  try {
    ReferenceDomain bad(2, v, {Simplex{0, 1, 2, -1}, Simplex{0, 1, 3, -1}}, {Region::Insulator, Region::Insulator},
                        {0, 1, 2, 3});
    FAIL() << "expected DegenerateElement";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateElement);
  }
}

TEST(Deformation, AffineGradientAndDet) {
  const auto m = mesh("disk_in_square");
  Mat A(2, 2);
  A << 1.1, 0.2, -0.1, 0.9;
  Vec b(2);
  b << 0.01, -0.02;
  const Deformation def = affine_interior(m, A, b);
  for (std::size_t e = 0; e < m->element_count(); ++e) {
    bool interior = true;
    for (int k = 0; k < 3; ++k) interior = interior && !m->is_clamped(m->element(e)[k]);
    if (!interior) continue;
    EXPECT_NEAR((element_gradient(def, e) - A).norm(), 0.0, 1e-12);
    EXPECT_NEAR(element_det(def, e), A.determinant(), 1e-12);
  }
}

TEST(Deformation, ClampedVerticesCannotMove) {
  const auto m = mesh("disk_in_disk");
  Deformation def(m);
  const int v = m->gamma0()[0];
  EXPECT_THROW(def.set_position(v, Vec::Zero(2)), Error);
}

TEST(Deformation, StorageRoundTrip) {
  const auto m = mesh("ball_in_cube");
  Bump bump{Vec::Zero(3), 0.8, 0.05, Bump::Mode::Radial, Vec::Unit(3, 0)};
  const Deformation def = perturbed(Deformation(m), bump);
  std::stringstream s;
  write_deformation(s, def);
  const Deformation back = read_deformation(s, m);
  EXPECT_EQ(back.max_displacement_from(def), 0.0);
}

TEST(Bump, ProfileAndSupport) {
  Vec c(2), dir(2);
  c << 0.2, 0.1;
  dir << 0.0, 1.0;
  const Bump b{c, 0.5, 0.05, Bump::Mode::Translate, dir};
  EXPECT_NEAR((b.displacement(c) - 0.05 * dir).norm(), 0.0, 1e-15);
  Vec x = c;
  x[0] += 0.25;  // t = 1/2, phi = 9/16
  EXPECT_NEAR(b.displacement(x)[1], 0.05 * 9.0 / 16.0, 1e-15);
  x[0] = c[0] + 0.51;
  EXPECT_EQ(b.displacement(x).norm(), 0.0);
}

TEST(Bump, PerturbedKeepsClampedVertices) {
  const auto m = mesh("disk_in_disk");
  const Bump b{Vec::Zero(2), 2.0, 0.05, Bump::Mode::Radial, Vec::Unit(2, 0)};
  const Deformation def = perturbed(Deformation(m), b);
  for (int v : m->gamma0()) EXPECT_EQ(def.position(v), m->vertex(v));
  EXPECT_GT(def.max_displacement_from(Deformation(m)), 0.0);
}

TEST(Admissibility, IdentityAndInversion) {
  const auto m = mesh("disk_in_square");
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 64.0);
  const AdmissibilityReport id = check_admissibility(Deformation(m), g);
  EXPECT_TRUE(id.admissible());
  EXPECT_DOUBLE_EQ(id.min_det, 1.0);
  EXPECT_NEAR(id.max_distortion_p, std::sqrt(2.0), 1e-12);  // |Id| / det^(1/2)

  // push a free vertex far across its neighbours: some element flips
  Deformation bad(m);
  const int v = m->free_vertices()[m->free_vertices().size() / 2];
  bad.set_position(v, m->vertex(v) + Vec::Constant(2, 0.6));
  const AdmissibilityReport r = check_admissibility(bad, g);
  EXPECT_FALSE(r.all_dets_positive);
  EXPECT_FALSE(r.admissible());
  EXPECT_THROW((void)rasterize_image(bad, ImageRegion::WholeDomain, g), Error);
}

TEST(Rasterize, IdentityBodyMatchesPointMembership) {
  const auto m = mesh("disk_in_square");
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 64.0);
  const SetMask body = rasterize_image(Deformation(m), ImageRegion::WholeDomain, g);
  const SetMask square = SetMask::from_predicate(g, SetKind::Open, [](const Vec& x) {
    return std::abs(x[0]) < 1.0 && std::abs(x[1]) < 1.0;
  });
  EXPECT_TRUE(body == square);
}

TEST(Rasterize, ConductorClosureCoversPolygon) {
  const auto m = mesh("disk_in_disk", 2);
  const EulerianGrid g = oracle::square_grid(1.0, 1.0 / 128.0);
  const SetMask E = rasterize_image(Deformation(m), ImageRegion::ConductorClosure, g);
  EXPECT_EQ(E.kind(), SetKind::Compact);
  // the inscribed polygon lies inside the disk of radius 0.25; padding adds at most h/2
  const SetMask inner = oracle::disk(g, SetKind::Compact, Vec::Zero(2), 0.24);
  const SetMask outer = oracle::disk(g, SetKind::Compact, Vec::Zero(2), 0.25 + 0.5 / 128.0 + 1e-12);
  EXPECT_TRUE(inner.subset_of(E));
  EXPECT_TRUE(E.subset_of(outer));
}

TEST(Rasterize, OutOfBoundsWhenGridTooSmall) {
  const auto m = mesh("disk_in_disk");
  const EulerianGrid g = oracle::square_grid(0.5, 1.0 / 32.0);
  try {
    (void)rasterize_image(Deformation(m), ImageRegion::WholeDomain, g);
    FAIL() << "expected OutOfBounds";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfBounds);
  }
}
