#include "mn/tessellation.hpp"

#include "mn/cell_geometry.hpp"

namespace mn {

std::optional<Tessellation> parse_tessellation(std::string_view name) {
  if (name == "fan0") return Tessellation::fan0;
  if (name == "centroid") return Tessellation::centroid;
  if (name == "strip") return Tessellation::strip;
  return std::nullopt;
}

std::string_view to_string(Tessellation t) {
  switch (t) {
    case Tessellation::fan0:
      return "fan0";
    case Tessellation::centroid:
      return "centroid";
    case Tessellation::strip:
      return "strip";
  }
  return "?";
}

namespace {

void check_planar(const Mesh& mesh, const std::vector<int>& face, std::size_t index, double tol) {
  Polygon3 poly;
  for (int v : face) poly.vertices.push_back(mesh.vertices[static_cast<std::size_t>(v)]);
  const Vec3 n = vector_area(poly);
  const double a = n.norm();
  if (a == 0.0) throw ShapeError("face " + std::to_string(index) + " has zero area");
  const Vec3 u = n / a;
  double extent = 0.0;
  for (const auto& v : poly.vertices) extent = std::max(extent, (v - poly.vertices.front()).norm());
  for (const auto& v : poly.vertices)
    if (std::abs(u.dot(v - poly.vertices.front())) > tol * std::max(1.0, extent))
      throw ShapeError("face " + std::to_string(index) + " is not planar");
}

}  // namespace

TriMesh tessellate(const Mesh& mesh, Tessellation strategy, double planarity_tol) {
  TriMesh out;
  out.vertices = mesh.vertices;
  for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const auto& f = mesh.faces[fi];
    const auto k = f.size();
    if (k < 3) throw ShapeError("face " + std::to_string(fi) + " has fewer than three vertices");
    if (k > 3) check_planar(mesh, f, fi, planarity_tol);

    switch (strategy) {
      case Tessellation::fan0:
        for (std::size_t j = 1; j + 1 < k; ++j) out.triangles.push_back({f[0], f[j], f[j + 1]});
        break;
      case Tessellation::centroid: {
        Vec3 c = Vec3::Zero();
        for (int v : f) c += mesh.vertices[static_cast<std::size_t>(v)];
        c /= static_cast<double>(k);
        const int ci = static_cast<int>(out.vertices.size());
        out.vertices.push_back(c);
        for (std::size_t j = 0; j < k; ++j) out.triangles.push_back({ci, f[j], f[(j + 1) % k]});
        break;
      }
      case Tessellation::strip: {
        // i0, i1, i_{k-1}, i2, i_{k-2}, ...; every other triangle is flipped
        // to keep the face orientation.
        std::vector<int> order{f[0], f[1]};
        std::size_t lo = 2, hi = k - 1;
        for (bool take_hi = true; lo <= hi; take_hi = !take_hi) order.push_back(take_hi ? f[hi--] : f[lo++]);
        for (std::size_t j = 0; j + 2 < order.size(); ++j) {
          if (j % 2 == 0)
            out.triangles.push_back({order[j], order[j + 1], order[j + 2]});
          else
            out.triangles.push_back({order[j + 1], order[j], order[j + 2]});
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace mn
