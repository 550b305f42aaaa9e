#pragma once

#include "mn/types.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace mn {

/// Indexed polygon mesh. In 2D the "faces" are two-vertex line segments and
/// vertices carry z = 0.
struct Mesh {
  int dim = 3;
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;

  [[nodiscard]] bool empty() const { return faces.empty(); }
};

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  [[nodiscard]] bool empty() const { return triangles.empty(); }
};

/// Converts a mesh whose faces are all triangles; throws otherwise.
TriMesh as_trimesh(const Mesh& mesh);
Mesh as_mesh(const TriMesh& mesh);

double surface_area(const TriMesh& mesh);
double triangle_area(const TriMesh& mesh, std::size_t t);

/// Number of undirected edges.
std::size_t edge_count(const Mesh& mesh);

/// Every edge is shared by exactly two faces (2D: every vertex by exactly two segments).
bool is_watertight(const Mesh& mesh);

/// Connected components over face adjacency through shared vertices; returns
/// the component index of every face.
std::vector<int> face_components(const Mesh& mesh, int* count = nullptr);

/// Splits the mesh into one mesh per connected component (vertices reindexed).
std::vector<Mesh> split_components(const Mesh& mesh);

/// OBJ with `v` records at 17 significant digits, `f` records for polygons and
/// `l` records for segments, 1-based indices.
void write_obj(std::ostream& out, const Mesh& mesh);
void write_obj(const std::filesystem::path& path, const Mesh& mesh);
Mesh read_obj(std::istream& in);
Mesh read_obj(const std::filesystem::path& path);

}  // namespace mn
