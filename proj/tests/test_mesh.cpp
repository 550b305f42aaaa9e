#include "mn/mesh.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace {

using namespace mn;

Mesh tetrahedron(const Vec3& shift = Vec3::Zero()) {
  Mesh m;
  m.vertices = {Vec3(0, 0, 0) + shift, Vec3(1, 0, 0) + shift, Vec3(0, 1, 0) + shift, Vec3(0, 0, 1) + shift};
  m.faces = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  return m;
}

TEST(Obj, RoundTripIsExact) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mesh m;
  for (int i = 0; i < 50; ++i) m.vertices.emplace_back(u(rng), u(rng), u(rng) * 1e-7);
  for (int i = 0; i + 4 < 50; i += 3) m.faces.push_back({i, i + 1, i + 2, i + 3, i + 4});
  std::stringstream ss;
  write_obj(ss, m);
  const Mesh back = read_obj(ss);
  ASSERT_EQ(back.vertices.size(), m.vertices.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) EXPECT_LE((back.vertices[i] - m.vertices[i]).norm(), 1e-12);
  EXPECT_EQ(back.faces, m.faces);
}

TEST(Obj, SegmentsUseLineRecords) {
  Mesh m;
  m.dim = 2;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  m.faces = {{0, 1}, {1, 2}, {2, 0}};
  std::stringstream ss;
  write_obj(ss, m);
  EXPECT_NE(ss.str().find("\nl 1 2\n"), std::string::npos);
  const Mesh back = read_obj(ss);
  EXPECT_EQ(back.dim, 2);
  EXPECT_EQ(back.faces, m.faces);
}

TEST(Obj, ReadsSlashedAndNegativeIndices) {
  std::stringstream ss("# c\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\nf -3/1 -2/1 -1/1\n");
  const Mesh m = read_obj(ss);
  ASSERT_EQ(m.faces.size(), 2u);
  EXPECT_EQ(m.faces[0], (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(m.faces[1], (std::vector<int>{0, 1, 2}));
}

TEST(Obj, BadIndexThrows) {
  std::stringstream ss("v 0 0 0\nf 1 2 3\n");
  EXPECT_THROW(read_obj(ss), ParseError);
}

TEST(Mesh, TetrahedronIsWatertight) {
  const Mesh t = tetrahedron();
  EXPECT_TRUE(is_watertight(t));
  EXPECT_EQ(edge_count(t), 6u);
  Mesh open = t;
  open.faces.pop_back();
  EXPECT_FALSE(is_watertight(open));
}

TEST(Mesh, ComponentsSplit) {
  Mesh a = tetrahedron();
  const Mesh b = tetrahedron(Vec3(5, 0, 0));
  for (const auto& f : b.faces) {
    auto g = f;
    for (int& v : g) v += 4;
    a.faces.push_back(g);
  }
  a.vertices.insert(a.vertices.end(), b.vertices.begin(), b.vertices.end());
  int count = 0;
  face_components(a, &count);
  EXPECT_EQ(count, 2);
  const auto parts = split_components(a);
  ASSERT_EQ(parts.size(), 2u);
  for (const auto& p : parts) {
    EXPECT_EQ(p.vertices.size(), 4u);
    EXPECT_TRUE(is_watertight(p));
  }
}

TEST(Mesh, TriMeshConversionAndArea) {
  const Mesh t = tetrahedron();
  const TriMesh tm = as_trimesh(t);
  EXPECT_NEAR(surface_area(tm), 1.5 + std::sqrt(3.0) / 2.0, 1e-15);
  Mesh quad;
  quad.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  quad.faces = {{0, 1, 2, 3}};
  EXPECT_THROW(as_trimesh(quad), ShapeError);
}

TEST(Mesh, PolylineWatertightness) {
  Mesh m;
  m.dim = 2;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  m.faces = {{0, 1}, {1, 2}, {2, 0}};
  EXPECT_TRUE(is_watertight(m));
  m.faces.pop_back();
  EXPECT_FALSE(is_watertight(m));
}

}  // namespace
