#pragma once

#include "mn/types.hpp"

#include <array>
#include <optional>
#include <vector>

namespace mn {

/// The hyperplane {x : normal . x + offset = 0}; the negative side is where
/// normal . x + offset <= 0.
template <int Dim>
struct PlaneCut {
  Point<double, Dim> normal;
  double offset = 0.0;

  [[nodiscard]] double operator()(const Point<double, Dim>& x) const { return normal.dot(x) + offset; }
};

using HalfSpaceCut2 = PlaneCut<2>;
using HalfSpaceCut3 = PlaneCut<3>;

/// Convex polygon, counterclockwise.
struct Polygon2 {
  std::vector<Vec2> vertices;
};

/// Ordered planar polygon in space (cap faces, surface patches).
struct Polygon3 {
  std::vector<Vec3> vertices;
};

/// Convex polyhedron as a boundary representation: vertex list plus face
/// loops oriented counterclockwise when seen from outside.
struct Polyhedron3 {
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;
};

struct PolygonClip {
  std::optional<Polygon2> neg;
  std::optional<Polygon2> pos;
  /// Cut chord, present whenever the line strictly separates vertices. It is
  /// ordered along the counterclockwise boundary of the negative side.
  std::optional<std::array<Vec2, 2>> segment;
};

struct PolyhedronClip {
  std::optional<Polyhedron3> neg;
  std::optional<Polyhedron3> pos;
  /// Cap polygon, present whenever the plane strictly separates vertices;
  /// oriented with its normal along +cut.normal (outward for the negative side).
  std::optional<Polygon3> cap;
};

/// Side of the plane with a dead zone: |s| <= tol * |w| * (1 + |v|) counts as on the plane.
template <int Dim>
int classify(const PlaneCut<Dim>& cut, const Point<double, Dim>& v, double tol) {
  const double s = cut(v);
  const double band = tol * cut.normal.norm() * (1.0 + v.norm());
  if (s > band) return 1;
  if (s < -band) return -1;
  return 0;
}

/// Sutherland-Hodgman split of a convex polygon. Sides below tol.area are dropped.
PolygonClip clip_polygon(const Polygon2& p, const HalfSpaceCut2& cut, const Tolerances& tol = {});

/// Splits a convex polyhedron, closing both halves with the cap loop.
/// Throws TopologyError if the cut edges do not form a single closed loop.
PolyhedronClip clip_polyhedron(const Polyhedron3& p, const HalfSpaceCut3& cut, const Tolerances& tol = {});

inline PolygonClip clip(const Polygon2& p, const HalfSpaceCut2& cut, const Tolerances& tol = {}) {
  return clip_polygon(p, cut, tol);
}
inline PolyhedronClip clip(const Polyhedron3& p, const HalfSpaceCut3& cut, const Tolerances& tol = {}) {
  return clip_polyhedron(p, cut, tol);
}

Polygon2 make_box_polygon(const Box& box);
Polyhedron3 make_box_polyhedron(const Box& box);

double area(const Polygon2& p);
/// Vector area (Newell); its norm is the polygon area.
Vec3 vector_area(const Polygon3& p);
double volume(const Polyhedron3& p);

Box aabb(const Polygon2& p);
Box aabb(const Polyhedron3& p);

/// Vertices as the columns of a Dim x m matrix.
Eigen::Matrix<double, 2, Eigen::Dynamic> vertex_matrix(const Polygon2& p);
Eigen::Matrix<double, 3, Eigen::Dynamic> vertex_matrix(const Polyhedron3& p);

bool is_convex(const Polygon2& p, double tol = 1e-9);
bool is_convex(const Polyhedron3& p, double tol = 1e-9);

/// V - E + F of the boundary representation.
int euler_characteristic(const Polyhedron3& p);
/// Every undirected edge is used exactly twice, once in each direction.
bool is_closed_manifold(const Polyhedron3& p);

}  // namespace mn
