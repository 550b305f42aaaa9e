#pragma once

#include "mn/mesh.hpp"

#include <optional>
#include <string_view>

namespace mn {

enum class Tessellation { fan0, centroid, strip };

std::optional<Tessellation> parse_tessellation(std::string_view name);
std::string_view to_string(Tessellation t);

/// Triangulates every convex planar face. fan0 and strip emit k-2 triangles
/// per k-gon; centroid adds one vertex per face and emits k triangles.
/// Throws ShapeError naming the face if a face is not planar within
/// `planarity_tol` (relative to the face size).
TriMesh tessellate(const Mesh& mesh, Tessellation strategy, double planarity_tol = 1e-9);

}  // namespace mn
