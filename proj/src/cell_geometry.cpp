#include "mn/cell_geometry.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

namespace mn {

namespace {

bool lex_less(const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); }
bool lex_less(const Vec3& a, const Vec3& b) {
  return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
}

// Crossing point of an edge whose endpoints have strictly opposite signs.
// Endpoints are taken in lexicographic order so the result does not depend on
// the edge direction.
template <typename V>
V crossing(const V& a, double sa, const V& b, double sb) {
  if (lex_less(b, a)) return crossing(b, sb, a, sa);
  const double t = sa / (sa - sb);
  return a + t * (b - a);
}

using DirectedEdge = std::pair<int, int>;

// Closing loop of an open B-rep side: the directed edges without a twin,
// chained into one cycle and reversed so the cap faces outward.
std::vector<int> cap_loop(const std::vector<std::vector<int>>& faces) {
  std::set<DirectedEdge> edges;
  for (const auto& f : faces)
    for (std::size_t i = 0; i < f.size(); ++i) edges.emplace(f[i], f[(i + 1) % f.size()]);
  std::map<int, int> next;
  for (const auto& [a, b] : edges) {
    if (edges.count({b, a})) continue;
    if (!next.emplace(a, b).second) throw TopologyError("cut edges branch at a vertex");
  }
  if (next.empty()) throw TopologyError("cut produced no cap edges");
  std::vector<int> loop;
  int v = next.begin()->first;
  do {
    loop.push_back(v);
    auto it = next.find(v);
    if (it == next.end()) throw TopologyError("cut edges do not close into a loop");
    v = it->second;
    if (loop.size() > next.size()) throw TopologyError("cut edges do not close into a loop");
  } while (v != loop.front());
  if (loop.size() != next.size()) throw TopologyError("cut edges form more than one loop");
  std::reverse(loop.begin(), loop.end());
  return loop;
}

// Keeps only the referenced vertices, in increasing original index order.
Polyhedron3 compact(const std::vector<Vec3>& vertices, std::vector<std::vector<int>> faces) {
  std::vector<int> remap(vertices.size(), -1);
  for (const auto& f : faces)
    for (int v : f) remap[static_cast<std::size_t>(v)] = 0;
  Polyhedron3 out;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (remap[i] < 0) continue;
    remap[i] = static_cast<int>(out.vertices.size());
    out.vertices.push_back(vertices[i]);
  }
  for (auto& f : faces)
    for (int& v : f) v = remap[static_cast<std::size_t>(v)];
  out.faces = std::move(faces);
  return out;
}

}  // namespace

PolygonClip clip_polygon(const Polygon2& p, const HalfSpaceCut2& cut, const Tolerances& tol) {
  const std::size_t n = p.vertices.size();
  std::vector<int> sign(n);
  std::vector<double> value(n);
  bool any_neg = false, any_pos = false;
  for (std::size_t i = 0; i < n; ++i) {
    value[i] = cut(p.vertices[i]);
    sign[i] = classify(cut, p.vertices[i], tol.on_plane);
    any_neg |= sign[i] < 0;
    any_pos |= sign[i] > 0;
  }
  PolygonClip out;
  if (!any_pos) {
    out.neg = p;
    return out;
  }
  if (!any_neg) {
    out.pos = p;
    return out;
  }

  Polygon2 neg, pos;
  std::vector<Vec2> chord;  // on-line points in counterclockwise order of the polygon
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const Vec2& a = p.vertices[i];
    if (sign[i] <= 0) neg.vertices.push_back(a);
    if (sign[i] >= 0) pos.vertices.push_back(a);
    if (sign[i] == 0) chord.push_back(a);
    if (sign[i] * sign[j] < 0) {
      const Vec2 x = crossing(a, value[i], p.vertices[j], value[j]);
      neg.vertices.push_back(x);
      pos.vertices.push_back(x);
      chord.push_back(x);
    }
  }
  if (chord.size() != 2) throw TopologyError("polygon cut does not produce a single chord");

  // Orient the chord along the negative side's boundary: its right-hand normal
  // must point to the positive side.
  const Vec2 d = chord[1] - chord[0];
  if (Vec2(d.y(), -d.x()).dot(cut.normal) < 0.0) std::swap(chord[0], chord[1]);
  out.segment = std::array<Vec2, 2>{chord[0], chord[1]};
  if (neg.vertices.size() >= 3 && area(neg) > tol.area) out.neg = std::move(neg);
  if (pos.vertices.size() >= 3 && area(pos) > tol.area) out.pos = std::move(pos);
  return out;
}

PolyhedronClip clip_polyhedron(const Polyhedron3& p, const HalfSpaceCut3& cut, const Tolerances& tol) {
  const std::size_t n = p.vertices.size();
  std::vector<int> sign(n);
  std::vector<double> value(n);
  bool any_neg = false, any_pos = false;
  for (std::size_t i = 0; i < n; ++i) {
    value[i] = cut(p.vertices[i]);
    sign[i] = classify(cut, p.vertices[i], tol.on_plane);
    any_neg |= sign[i] < 0;
    any_pos |= sign[i] > 0;
  }
  PolyhedronClip out;
  if (!any_pos) {
    out.neg = p;
    return out;
  }
  if (!any_neg) {
    out.pos = p;
    return out;
  }

  std::vector<Vec3> vertices = p.vertices;
  std::vector<int> vsign = sign;
  std::map<std::pair<int, int>, int> crossings;
  const auto crossing_vertex = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = crossings.find(key);
    if (it != crossings.end()) return it->second;
    const auto ia = static_cast<std::size_t>(a), ib = static_cast<std::size_t>(b);
    vertices.push_back(crossing(p.vertices[ia], value[ia], p.vertices[ib], value[ib]));
    vsign.push_back(0);
    const int id = static_cast<int>(vertices.size()) - 1;
    crossings.emplace(key, id);
    return id;
  };

  std::vector<std::vector<int>> neg_faces, pos_faces;
  const auto keep = [&](std::vector<int>& loop, std::vector<std::vector<int>>& dst) {
    if (loop.size() < 3) return;
    // A loop made only of on-plane points lies in the cut plane; the cap replaces it.
    if (std::all_of(loop.begin(), loop.end(), [&](int v) { return vsign[static_cast<std::size_t>(v)] == 0; })) return;
    dst.push_back(std::move(loop));
  };
  for (const auto& face : p.faces) {
    std::vector<int> neg, pos;
    for (std::size_t i = 0; i < face.size(); ++i) {
      const int a = face[i], b = face[(i + 1) % face.size()];
      const int sa = sign[static_cast<std::size_t>(a)], sb = sign[static_cast<std::size_t>(b)];
      if (sa <= 0) neg.push_back(a);
      if (sa >= 0) pos.push_back(a);
      if (sa * sb < 0) {
        const int x = crossing_vertex(a, b);
        neg.push_back(x);
        pos.push_back(x);
      }
    }
    keep(neg, neg_faces);
    keep(pos, pos_faces);
  }

  const std::vector<int> neg_cap = cap_loop(neg_faces);
  const std::vector<int> pos_cap = cap_loop(pos_faces);
  if (neg_cap.size() < 3 || pos_cap.size() < 3) throw TopologyError("cap loop has fewer than three vertices");

  Polygon3 cap;
  for (int v : neg_cap) cap.vertices.push_back(vertices[static_cast<std::size_t>(v)]);
  out.cap = std::move(cap);

  neg_faces.push_back(neg_cap);
  pos_faces.push_back(pos_cap);
  Polyhedron3 neg = compact(vertices, std::move(neg_faces));
  Polyhedron3 pos = compact(vertices, std::move(pos_faces));
  if (volume(neg) > tol.volume) out.neg = std::move(neg);
  if (volume(pos) > tol.volume) out.pos = std::move(pos);
  return out;
}

Polygon2 make_box_polygon(const Box& box) {
  const Vec2 lo = box.lo.head<2>(), hi = box.hi.head<2>();
  return Polygon2{{lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())}};
}

Polyhedron3 make_box_polyhedron(const Box& box) {
  Polyhedron3 p;
  for (int i = 0; i < 8; ++i)
    p.vertices.emplace_back((i & 1) ? box.hi[0] : box.lo[0], (i & 2) ? box.hi[1] : box.lo[1],
                            (i & 4) ? box.hi[2] : box.lo[2]);
  // Counterclockwise seen from outside.
  p.faces = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  return p;
}

double area(const Polygon2& p) {
  double a = 0.0;
  const std::size_t n = p.vertices.size();
  const Vec2& o = p.vertices.front();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Vec2 u = p.vertices[i] - o, v = p.vertices[i + 1] - o;
    a += u.x() * v.y() - u.y() * v.x();
  }
  return 0.5 * a;
}

Vec3 vector_area(const Polygon3& p) {
  Vec3 a = Vec3::Zero();
  const std::size_t n = p.vertices.size();
  if (n < 3) return a;
  const Vec3& o = p.vertices.front();
  for (std::size_t i = 1; i + 1 < n; ++i) a += (p.vertices[i] - o).cross(p.vertices[i + 1] - o);
  return 0.5 * a;
}

double volume(const Polyhedron3& p) {
  Vec3 ref = Vec3::Zero();
  for (const auto& v : p.vertices) ref += v;
  ref /= static_cast<double>(p.vertices.size());
  double vol = 0.0;
  for (const auto& f : p.faces) {
    const Vec3 a = p.vertices[static_cast<std::size_t>(f[0])] - ref;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
      const Vec3 b = p.vertices[static_cast<std::size_t>(f[i])] - ref;
      const Vec3 c = p.vertices[static_cast<std::size_t>(f[i + 1])] - ref;
      vol += a.dot(b.cross(c));
    }
  }
  return vol / 6.0;
}

namespace {
template <int Dim>
Box aabb_of(const std::vector<Point<double, Dim>>& vs) {
  Point<double, Dim> lo = vs.front(), hi = vs.front();
  for (const auto& v : vs) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return Box{lo, hi};
}

template <int Dim>
Eigen::Matrix<double, Dim, Eigen::Dynamic> columns(const std::vector<Point<double, Dim>>& vs) {
  Eigen::Matrix<double, Dim, Eigen::Dynamic> m(Dim, static_cast<Eigen::Index>(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = vs[i];
  return m;
}
}  // namespace

Box aabb(const Polygon2& p) { return aabb_of<2>(p.vertices); }
Box aabb(const Polyhedron3& p) { return aabb_of<3>(p.vertices); }

Eigen::Matrix<double, 2, Eigen::Dynamic> vertex_matrix(const Polygon2& p) { return columns<2>(p.vertices); }
Eigen::Matrix<double, 3, Eigen::Dynamic> vertex_matrix(const Polyhedron3& p) { return columns<3>(p.vertices); }

bool is_convex(const Polygon2& p, double tol) {
  const std::size_t n = p.vertices.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = p.vertices[i];
    const Vec2 e = p.vertices[(i + 1) % n] - a;
    const double len = e.norm();
    if (len == 0.0) return false;
    // Every vertex must lie left of (or on) each counterclockwise edge.
    for (const auto& v : p.vertices) {
      const Vec2 w = v - a;
      if ((e.x() * w.y() - e.y() * w.x()) / len < -tol) return false;
    }
  }
  return true;
}

bool is_convex(const Polyhedron3& p, double tol) {
  for (const auto& f : p.faces) {
    Polygon3 poly;
    for (int v : f) poly.vertices.push_back(p.vertices[static_cast<std::size_t>(v)]);
    const Vec3 n = vector_area(poly);
    if (n.norm() == 0.0) return false;
    const Vec3 u = n.normalized();
    Vec3 c = Vec3::Zero();
    for (const auto& v : poly.vertices) c += v;
    c /= static_cast<double>(poly.vertices.size());
    for (const auto& v : p.vertices)
      if (u.dot(v - c) > tol) return false;
  }
  return true;
}

int euler_characteristic(const Polyhedron3& p) {
  std::set<std::pair<int, int>> edges;
  for (const auto& f : p.faces)
    for (std::size_t i = 0; i < f.size(); ++i) edges.insert(std::minmax(f[i], f[(i + 1) % f.size()]));
  return static_cast<int>(p.vertices.size()) - static_cast<int>(edges.size()) + static_cast<int>(p.faces.size());
}

bool is_closed_manifold(const Polyhedron3& p) {
  std::map<std::pair<int, int>, int> directed;
  for (const auto& f : p.faces)
    for (std::size_t i = 0; i < f.size(); ++i) ++directed[{f[i], f[(i + 1) % f.size()]}];
  for (const auto& [e, count] : directed) {
    if (count != 1) return false;
    auto it = directed.find({e.second, e.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

}  // namespace mn
