#include "mn/baseline_mc.hpp"

#include "mc_tables.hpp"

#include <tbb/parallel_for.h>

#include <unordered_map>

namespace mn {

Mesh marching_cubes(const Network& net, int resolution) { return marching_cubes(net, GridSpec{resolution, net.domain}); }

Mesh marching_cubes(const Network& net, const GridSpec& grid) {
  if (net.input_dim != 3) throw ShapeError("marching cubes needs a 3D network");
  if (grid.resolution < 2) throw ShapeError("grid resolution must be at least 2");
  const auto r = static_cast<std::int64_t>(grid.resolution);
  const std::int64_t n = r + 1;
  const Vec3 lo = grid.domain.lo.head<3>();
  const Vec3 span = (grid.domain.hi - grid.domain.lo).head<3>();

  const auto coord = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    return Vec3(lo.x() + span.x() * static_cast<double>(i) / static_cast<double>(r),
                lo.y() + span.y() * static_cast<double>(j) / static_cast<double>(r),
                lo.z() + span.z() * static_cast<double>(k) / static_cast<double>(r));
  };
  const auto index = [&](std::int64_t i, std::int64_t j, std::int64_t k) { return (k * n + j) * n + i; };

  // Sample z-slab by z-slab.
  std::vector<double> f(static_cast<std::size_t>(n * n * n));
  tbb::parallel_for(std::int64_t{0}, n, [&](std::int64_t k) {
    for (std::int64_t j = 0; j < n; ++j)
      for (std::int64_t i = 0; i < n; ++i) f[static_cast<std::size_t>(index(i, j, k))] = eval(net, coord(i, j, k));
  });

  Mesh mesh;
  mesh.dim = 3;
  // Vertex keys: 4 * sample index + axis for interior edge points, 4 * sample
  // index + 3 for points that coincide with a zero-valued sample.
  std::unordered_map<std::int64_t, int> vertex_of;
  const auto edge_vertex = [&](std::int64_t a, std::int64_t b, const Vec3& pa, const Vec3& pb, int axis) {
    if (b < a) return -1;  // callers always pass the lower sample first
    const double fa = f[static_cast<std::size_t>(a)], fb = f[static_cast<std::size_t>(b)];
    const double t = fa / (fa - fb);
    std::int64_t key;
    Vec3 p;
    if (t <= 0.0) {
      key = 4 * a + 3;
      p = pa;
    } else if (t >= 1.0) {
      key = 4 * b + 3;
      p = pb;
    } else {
      key = 4 * a + axis;
      p = pa + t * (pb - pa);
    }
    auto [it, inserted] = vertex_of.emplace(key, static_cast<int>(mesh.vertices.size()));
    if (inserted) mesh.vertices.push_back(p);
    return it->second;
  };

  for (std::int64_t k = 0; k < r; ++k)
    for (std::int64_t j = 0; j < r; ++j)
      for (std::int64_t i = 0; i < r; ++i) {
        std::array<std::int64_t, 8> corner{};
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          const auto& o = detail::kCubeCorners[static_cast<std::size_t>(c)];
          corner[static_cast<std::size_t>(c)] = index(i + o[0], j + o[1], k + o[2]);
          if (f[static_cast<std::size_t>(corner[static_cast<std::size_t>(c)])] < 0.0) cube |= 1 << c;
        }
        const auto& row = detail::kTriTable[static_cast<std::size_t>(cube)];
        if (row[0] < 0) continue;

        std::array<int, 12> edge_ids;
        edge_ids.fill(-1);
        for (int e = 0; e < 12; ++e) {
          const auto& ends = detail::kCubeEdges[static_cast<std::size_t>(e)];
          const auto& oa = detail::kCubeCorners[static_cast<std::size_t>(ends[0])];
          const auto& ob = detail::kCubeCorners[static_cast<std::size_t>(ends[1])];
          const bool in_a = cube & (1 << ends[0]), in_b = cube & (1 << ends[1]);
          if (in_a == in_b) continue;
          int axis = 0;
          while (oa[static_cast<std::size_t>(axis)] == ob[static_cast<std::size_t>(axis)]) ++axis;
          auto a = corner[static_cast<std::size_t>(ends[0])];
          auto b = corner[static_cast<std::size_t>(ends[1])];
          Vec3 pa = coord(i + oa[0], j + oa[1], k + oa[2]);
          Vec3 pb = coord(i + ob[0], j + ob[1], k + ob[2]);
          if (b < a) {
            std::swap(a, b);
            std::swap(pa, pb);
          }
          edge_ids[static_cast<std::size_t>(e)] = edge_vertex(a, b, pa, pb, axis);
        }
        for (int t = 0; row[static_cast<std::size_t>(t)] >= 0; t += 3) {
          // The table winds triangles toward the negative side; flip them.
          const int v0 = edge_ids[static_cast<std::size_t>(row[static_cast<std::size_t>(t)])];
          const int v1 = edge_ids[static_cast<std::size_t>(row[static_cast<std::size_t>(t + 2)])];
          const int v2 = edge_ids[static_cast<std::size_t>(row[static_cast<std::size_t>(t + 1)])];
          if (v0 == v1 || v1 == v2 || v0 == v2) continue;
          mesh.faces.push_back({v0, v1, v2});
        }
      }
  return mesh;
}

}  // namespace mn
