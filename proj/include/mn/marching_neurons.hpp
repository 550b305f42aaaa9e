#pragma once

#include "mn/cell_geometry.hpp"
#include "mn/mesh.hpp"
#include "mn/network.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mn {

template <int Dim>
struct CellGeometryOf;
template <>
struct CellGeometryOf<2> {
  using type = Polygon2;
};
template <>
struct CellGeometryOf<3> {
  using type = Polyhedron3;
};

/// Mask entry values.
inline constexpr std::int8_t kInactive = 0;
inline constexpr std::int8_t kActive = 1;
inline constexpr std::int8_t kUnresolved = -1;

/// A convex region of the input domain together with the affine map giving
/// the pre-activations of layer `layer` inside it (the input for layer 0).
template <int Dim>
struct Cell {
  using Geometry = typename CellGeometryOf<Dim>::type;
  using MapMatrix = Eigen::Matrix<double, Eigen::Dynamic, Dim>;

  Geometry geometry;
  int layer = 0;
  MapMatrix map_w;
  VecX map_b;
  std::vector<std::int8_t> mask;
  /// Binary path from the root: one character per split ('0' negative side).
  std::string id;
  bool needs_prune = true;

  /// Pre-activations of the current layer at every vertex (n_layer x m).
  [[nodiscard]] MatX vertex_values() const;
  [[nodiscard]] std::size_t state_bytes() const;
};

struct EngineConfig {
  std::size_t batch_size = 4096;
  std::size_t memory_budget_bytes = std::size_t{2} << 30;
  bool disable_pruning = false;
  /// Also prune both children right after every split.
  bool prune_after_split = false;
  /// 0 picks the hardware concurrency.
  int threads = 0;
  Tolerances tol;
};

struct TraversalStats {
  std::uint64_t cells_created = 0;
  std::uint64_t cells_pruned = 0;
  std::uint64_t cells_split = 0;
  std::uint64_t cells_emitted = 0;
  std::uint64_t peak_live_cells = 0;
  std::uint64_t steps = 0;
  /// Summed per-cell time of each phase (seconds) and wall time of the whole run.
  double prune_s = 0.0;
  double split_s = 0.0;
  double collapse_s = 0.0;
  double extract_s = 0.0;
  double total_s = 0.0;
};

/// Exact level-set piece of one final cell: a planar polygon in 3D or a
/// segment in 2D (z = 0), with the unit normal pointing toward positive f.
struct SurfacePatch {
  std::vector<Vec3> polygon;
  Vec3 normal = Vec3::Zero();
  std::string cell_id;
};

struct ExtractResult {
  int dim = 3;
  std::vector<SurfacePatch> patches;  // sorted by cell id
  TraversalStats stats;
};

template <int Dim>
Cell<Dim> make_root_cell(const Network& net);

/// False only when the range of the remaining network over the cell's
/// bounding box provably excludes zero.
template <int Dim>
bool prune(const Cell<Dim>& cell, const Network& net);

/// Neurons whose pre-activation takes strictly negative and strictly positive
/// values at the cell vertices (outside the on-plane dead zone).
template <int Dim>
std::vector<int> find_critical(const Cell<Dim>& cell, const Tolerances& tol = {});

template <int Dim>
struct SplitResult {
  std::optional<Cell<Dim>> neg;
  std::optional<Cell<Dim>> pos;
};

/// Splits along the zero set of one critical neuron. Degenerate sides are dropped.
template <int Dim>
SplitResult<Dim> split_cell(const Cell<Dim>& cell, int neuron, const Tolerances& tol = {});

/// Fills unresolved mask entries from the sign of the largest-magnitude
/// vertex value; ties resolve to active.
template <int Dim>
void resolve_mask(Cell<Dim>& cell);

/// Folds the masked current layer into the next: W <- W' diag(m) W, b <- W'(m . b) + b'.
template <int Dim>
Cell<Dim> collapse(const Cell<Dim>& cell, const Network& net);

/// Analytic zero set of the final affine map inside the cell, if the plane crosses it.
template <int Dim>
std::optional<SurfacePatch> extract_patch(const Cell<Dim>& cell, const Tolerances& tol = {});

/// Depth-first traversal of the network from the domain box; returns the
/// exact level-set patches sorted by cell id.
ExtractResult extract(const Network& net, const EngineConfig& cfg = {});

/// Merges patch vertices closer than tol.weld and drops degenerate and
/// duplicate faces.
Mesh weld(const std::vector<SurfacePatch>& patches, int dim, const Tolerances& tol = {});

}  // namespace mn
