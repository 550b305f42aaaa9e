#include "mn/cell_geometry.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using namespace mn;

Box unit_box(int d) { return Box{VecX::Zero(d), VecX::Ones(d)}; }

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v(g(rng), g(rng), g(rng));
  return v.normalized();
}

Vec3 centroid(const Polyhedron3& p) {
  Vec3 c = Vec3::Zero();
  for (const auto& v : p.vertices) c += v;
  return c / static_cast<double>(p.vertices.size());
}

// A random convex polyhedron: a random box trimmed by a few random planes.
Polyhedron3 random_polyhedron(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 lo(u(rng), u(rng), u(rng));
  const Vec3 ext = Vec3(0.1 + std::abs(u(rng)), 0.1 + std::abs(u(rng)), 0.1 + std::abs(u(rng)));
  Polyhedron3 p = make_box_polyhedron(Box{lo, lo + ext});
  const int cuts = std::uniform_int_distribution<int>(0, 6)(rng);
  for (int i = 0; i < cuts; ++i) {
    const Vec3 n = random_unit(rng);
    const Vec3 through = centroid(p) + 0.3 * ext.minCoeff() * Vec3(u(rng), u(rng), u(rng));
    const auto r = clip(p, HalfSpaceCut3{n, -n.dot(through)});
    if (r.neg && r.pos) p = u(rng) < 0 ? *r.neg : *r.pos;
  }
  return p;
}

TEST(Polygon, BoxAreaAndOrientation) {
  const Polygon2 sq = make_box_polygon(Box{Vec2(-1, -2), Vec2(1, 2)});
  EXPECT_DOUBLE_EQ(area(sq), 8.0);
  EXPECT_TRUE(is_convex(sq));
}

TEST(Polygon, ClipSquareInHalf) {
  const Polygon2 sq = make_box_polygon(unit_box(2));
  const auto r = clip(sq, HalfSpaceCut2{Vec2(1, 0), -0.5});
  ASSERT_TRUE(r.neg && r.pos && r.segment);
  EXPECT_NEAR(area(*r.neg), 0.5, 1e-15);
  EXPECT_NEAR(area(*r.pos), 0.5, 1e-15);
  const auto& s = *r.segment;
  EXPECT_NEAR(s[0].x(), 0.5, 1e-15);
  EXPECT_NEAR(s[1].x(), 0.5, 1e-15);
  // Normal of the chord (right-hand side of its direction) points to the positive side.
  const Vec2 d = s[1] - s[0];
  EXPECT_GT(Vec2(d.y(), -d.x()).dot(Vec2(1, 0)), 0.0);
}

TEST(Polygon, MissReturnsOneSide) {
  const Polygon2 sq = make_box_polygon(unit_box(2));
  const auto r = clip(sq, HalfSpaceCut2{Vec2(1, 0), -2.0});
  EXPECT_TRUE(r.neg);
  EXPECT_FALSE(r.pos);
  EXPECT_FALSE(r.segment);
}

TEST(Polygon, EdgeOnLineGoesToOneSide) {
  const Polygon2 sq = make_box_polygon(unit_box(2));
  const auto r = clip(sq, HalfSpaceCut2{Vec2(1, 0), 0.0});
  EXPECT_FALSE(r.neg);
  ASSERT_TRUE(r.pos);
  EXPECT_DOUBLE_EQ(area(*r.pos), 1.0);
  EXPECT_FALSE(r.segment);
}

TEST(Polygon, RandomClipsConserveArea) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int failures = 0;
  for (int t = 0; t < 1000; ++t) {
    Polygon2 p = make_box_polygon(Box{Vec2(-1, -1), Vec2(1, 1)});
    for (int i = 0; i < 4; ++i) {
      const Vec2 n = Vec2(u(rng), u(rng)).normalized();
      const auto r = clip(p, HalfSpaceCut2{n, 0.3 * u(rng)});
      const double a = area(p);
      const double sum = (r.neg ? area(*r.neg) : 0.0) + (r.pos ? area(*r.pos) : 0.0);
      failures += std::abs(sum - a) > 1e-9 * a;
      if (r.neg) failures += !is_convex(*r.neg);
      if (r.pos) failures += !is_convex(*r.pos);
      if (r.neg && r.pos) p = u(rng) < 0 ? *r.neg : *r.pos;
    }
  }
  EXPECT_EQ(failures, 0);
}

TEST(Polyhedron, BoxIsClosedConvexWithUnitVolume) {
  const Polyhedron3 cube = make_box_polyhedron(unit_box(3));
  EXPECT_EQ(cube.vertices.size(), 8u);
  EXPECT_EQ(cube.faces.size(), 6u);
  EXPECT_NEAR(volume(cube), 1.0, 1e-15);
  EXPECT_EQ(euler_characteristic(cube), 2);
  EXPECT_TRUE(is_closed_manifold(cube));
  EXPECT_TRUE(is_convex(cube));
}

TEST(Polyhedron, FacesPointOutward) {
  const Polyhedron3 cube = make_box_polyhedron(unit_box(3));
  const Vec3 c = centroid(cube);
  for (const auto& f : cube.faces) {
    Polygon3 poly;
    for (int v : f) poly.vertices.push_back(cube.vertices[static_cast<std::size_t>(v)]);
    EXPECT_GT(vector_area(poly).dot(poly.vertices[0] - c), 0.0);
  }
}

TEST(Polyhedron, CutCubeThroughCenter) {
  const Polyhedron3 cube = make_box_polyhedron(unit_box(3));
  const Vec3 n = Vec3(1, 1, 1).normalized();
  const auto r = clip(cube, HalfSpaceCut3{n, -n.dot(Vec3::Constant(0.5))});
  ASSERT_TRUE(r.neg && r.pos && r.cap);
  EXPECT_NEAR(volume(*r.neg), 0.5, 1e-14);
  EXPECT_NEAR(volume(*r.pos), 0.5, 1e-14);
  // The cut through the center perpendicular to the diagonal is a regular
  // hexagon with side sqrt(2)/2.
  EXPECT_EQ(r.cap->vertices.size(), 6u);
  const Vec3 va = vector_area(*r.cap);
  EXPECT_NEAR(va.norm(), 3.0 * std::sqrt(3.0) / 2.0 * 0.5, 1e-14);
  EXPECT_GT(va.dot(n), 0.0);
}

TEST(Polyhedron, DiagonalCutThroughVertices) {
  const Polyhedron3 cube = make_box_polyhedron(unit_box(3));
  const auto r = clip(cube, HalfSpaceCut3{Vec3(1, -1, 0), 0.0});
  ASSERT_TRUE(r.neg && r.pos && r.cap);
  EXPECT_NEAR(volume(*r.neg), 0.5, 1e-15);
  EXPECT_NEAR(volume(*r.pos), 0.5, 1e-15);
  EXPECT_EQ(r.cap->vertices.size(), 4u);
  EXPECT_EQ(euler_characteristic(*r.neg), 2);
  EXPECT_EQ(euler_characteristic(*r.pos), 2);
  EXPECT_TRUE(is_closed_manifold(*r.neg));
}

TEST(Polyhedron, FaceOnPlaneGoesToOneSide) {
  const Polyhedron3 cube = make_box_polyhedron(unit_box(3));
  const auto r = clip(cube, HalfSpaceCut3{Vec3(0, 0, 1), -1.0});
  EXPECT_TRUE(r.neg);
  EXPECT_FALSE(r.pos);
  EXPECT_FALSE(r.cap);
}

TEST(Polyhedron, RandomClipsConserveVolumeAndTopology) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int failures = 0, split_cases = 0;
  for (int t = 0; t < 1000; ++t) {
    const Polyhedron3 p = random_polyhedron(rng);
    const Vec3 n = random_unit(rng);
    const double v = volume(p);
    const auto r = clip(p, HalfSpaceCut3{n, -n.dot(centroid(p)) + 0.05 * u(rng)});
    const double sum = (r.neg ? volume(*r.neg) : 0.0) + (r.pos ? volume(*r.pos) : 0.0);
    failures += std::abs(sum - v) > 1e-9 * v;
    for (const auto* side : {&r.neg, &r.pos}) {
      if (!*side) continue;
      failures += euler_characteristic(**side) != 2;
      failures += !is_closed_manifold(**side);
      failures += !is_convex(**side);
    }
    split_cases += r.neg && r.pos;
  }
  EXPECT_EQ(failures, 0);
  EXPECT_GT(split_cases, 900);
}

TEST(Polyhedron, AabbOfClippedHalf) {
  const Polyhedron3 cube = make_box_polyhedron(unit_box(3));
  const auto r = clip(cube, HalfSpaceCut3{Vec3(1, 0, 0), -0.25});
  ASSERT_TRUE(r.neg);
  const Box b = aabb(*r.neg);
  EXPECT_NEAR(b.hi[0], 0.25, 1e-15);
  EXPECT_EQ(b.lo[0], 0.0);
  EXPECT_EQ(b.hi[2], 1.0);
}

}  // namespace
