#include "mn/marching_neurons.hpp"

#include "mn/affine_range.hpp"

#include <tbb/global_control.h>
#include <tbb/parallel_for.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <thread>
#include <tuple>

namespace mn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::size_t geometry_bytes(const Polygon2& p) { return p.vertices.size() * sizeof(Vec2); }
std::size_t geometry_bytes(const Polyhedron3& p) {
  std::size_t n = p.vertices.size() * sizeof(Vec3);
  for (const auto& f : p.faces) n += sizeof(f) + f.size() * sizeof(int);
  return n;
}

Vec3 lift(const Vec2& v) { return Vec3(v.x(), v.y(), 0.0); }

}  // namespace

template <int Dim>
MatX Cell<Dim>::vertex_values() const {
  return (map_w * vertex_matrix(geometry)).colwise() + map_b;
}

template <int Dim>
std::size_t Cell<Dim>::state_bytes() const {
  return sizeof(Cell) + geometry_bytes(geometry) + static_cast<std::size_t>(map_w.size() + map_b.size()) * sizeof(double) +
         mask.size() + id.size();
}

template <int Dim>
Cell<Dim> make_root_cell(const Network& net) {
  if (net.input_dim != Dim) throw ShapeError("network input_dim does not match the engine dimension");
  Cell<Dim> c;
  if constexpr (Dim == 2)
    c.geometry = make_box_polygon(net.domain);
  else
    c.geometry = make_box_polyhedron(net.domain);
  c.layer = 0;
  c.map_w = Cell<Dim>::MapMatrix::Identity(Dim, Dim);
  c.map_b = VecX::Zero(Dim);
  c.mask.assign(Dim, kActive);
  return c;
}

template <int Dim>
bool prune(const Cell<Dim>& cell, const Network& net) {
  // The map is affine on the cell, so the vertices span each pre-activation's
  // exact range; pad it for the rounding in the vertex values.
  const auto verts = vertex_matrix(cell.geometry);
  const MatX values = cell.vertex_values();
  const double vmag = verts.cwiseAbs().colwise().sum().maxCoeff();
  std::vector<RangeResult> ranges(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double mag = cell.map_w.row(i).cwiseAbs().sum() * vmag + std::abs(cell.map_b[i]);
    const double pad = 1e-9 * mag + std::numeric_limits<double>::denorm_min();
    ranges[static_cast<std::size_t>(i)] = {values.row(i).minCoeff() - pad, values.row(i).maxCoeff() + pad};
  }
  const RangeResult r = bound_over_box<float>(net, cell.layer, cell.map_w, cell.map_b, aabb(cell.geometry), &ranges);
  return !r.excludes_zero();
}

template <int Dim>
std::vector<int> find_critical(const Cell<Dim>& cell, const Tolerances& tol) {
  std::vector<int> out;
  const auto verts = vertex_matrix(cell.geometry);
  const MatX values = cell.vertex_values();
  const Eigen::RowVectorXd vnorm = verts.colwise().norm();
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double wn = cell.map_w.row(i).norm();
    bool neg = false, pos = false;
    for (Eigen::Index j = 0; j < values.cols() && !(neg && pos); ++j) {
      const double band = tol.on_plane * wn * (1.0 + vnorm[j]);
      neg |= values(i, j) < -band;
      pos |= values(i, j) > band;
    }
    if (neg && pos) out.push_back(static_cast<int>(i));
  }
  return out;
}

template <int Dim>
SplitResult<Dim> split_cell(const Cell<Dim>& cell, int neuron, const Tolerances& tol) {
  PlaneCut<Dim> cut{cell.map_w.row(neuron).transpose(), cell.map_b[neuron]};
  auto clipped = clip(cell.geometry, cut, tol);
  SplitResult<Dim> out;
  const auto child = [&](auto&& geometry, std::int8_t state, char tag) {
    Cell<Dim> c;
    c.geometry = std::move(geometry);
    c.layer = cell.layer;
    c.map_w = cell.map_w;
    c.map_b = cell.map_b;
    c.mask = cell.mask;
    c.mask[static_cast<std::size_t>(neuron)] = state;
    c.id = cell.id + tag;
    c.needs_prune = false;
    return c;
  };
  if (clipped.neg) out.neg = child(std::move(*clipped.neg), kInactive, '0');
  if (clipped.pos) out.pos = child(std::move(*clipped.pos), kActive, '1');
  return out;
}

template <int Dim>
void resolve_mask(Cell<Dim>& cell) {
  if (std::none_of(cell.mask.begin(), cell.mask.end(), [](std::int8_t m) { return m == kUnresolved; })) return;
  const MatX values = cell.vertex_values();
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    auto& m = cell.mask[static_cast<std::size_t>(i)];
    if (m != kUnresolved) continue;
    m = values.row(i).maxCoeff() >= -values.row(i).minCoeff() ? kActive : kInactive;
  }
}

template <int Dim>
Cell<Dim> collapse(const Cell<Dim>& cell, const Network& net) {
  if (cell.layer >= net.depth()) throw ShapeError("cannot collapse past the final layer");
  const Layer& next = net.layers[static_cast<std::size_t>(cell.layer)];
  VecX m(static_cast<Eigen::Index>(cell.mask.size()));
  for (std::size_t i = 0; i < cell.mask.size(); ++i) {
    if (cell.mask[i] == kUnresolved) throw ShapeError("collapse needs a fully resolved mask");
    m[static_cast<Eigen::Index>(i)] = cell.mask[i] == kActive ? 1.0 : 0.0;
  }
  Cell<Dim> out;
  out.geometry = cell.geometry;
  out.layer = cell.layer + 1;
  out.map_w = next.weights * (m.asDiagonal() * cell.map_w);
  out.map_b = next.weights * m.cwiseProduct(cell.map_b) + next.bias;
  out.mask.assign(static_cast<std::size_t>(next.outputs()), kUnresolved);
  out.id = cell.id;
  out.needs_prune = true;
  return out;
}

template <int Dim>
std::optional<SurfacePatch> extract_patch(const Cell<Dim>& cell, const Tolerances& tol) {
  if (cell.map_w.rows() != 1) throw ShapeError("extract_patch needs a cell at the final layer");
  PlaneCut<Dim> cut{cell.map_w.row(0).transpose(), cell.map_b[0]};
  if (cut.normal.norm() == 0.0) return std::nullopt;
  const auto clipped = clip(cell.geometry, cut, tol);
  SurfacePatch patch;
  patch.cell_id = cell.id;
  patch.normal.setZero();
  patch.normal.template head<Dim>() = cut.normal.normalized();
  if constexpr (Dim == 2) {
    if (!clipped.segment) return std::nullopt;
    patch.polygon = {lift((*clipped.segment)[0]), lift((*clipped.segment)[1])};
  } else {
    if (!clipped.cap) return std::nullopt;
    patch.polygon = clipped.cap->vertices;
  }
  return patch;
}

namespace {

template <int Dim>
struct StepOutcome {
  std::vector<Cell<Dim>> children;
  std::optional<SurfacePatch> patch;
  bool pruned = false;
  bool split = false;
  std::uint64_t created = 0;
  double prune_s = 0, split_s = 0, collapse_s = 0, extract_s = 0;
};

template <int Dim>
StepOutcome<Dim> step(Cell<Dim> cell, const Network& net, const EngineConfig& cfg) {
  StepOutcome<Dim> out;
  if (cell.needs_prune) {
    const auto t0 = Clock::now();
    const bool keep = cfg.disable_pruning || prune(cell, net);
    out.prune_s = seconds_since(t0);
    if (!keep) {
      out.pruned = true;
      return out;
    }
    cell.needs_prune = false;
  }

  if (cell.layer == net.depth()) {
    const auto t0 = Clock::now();
    out.patch = extract_patch(cell, cfg.tol);
    out.extract_s = seconds_since(t0);
    return out;
  }

  if (cell.layer >= 1) {
    const auto t0 = Clock::now();
    const auto critical = find_critical(cell, cfg.tol);
    if (!critical.empty()) {
      // One neuron per step, lowest index first.
      auto halves = split_cell(cell, critical.front(), cfg.tol);
      out.split = true;
      for (auto* side : {&halves.neg, &halves.pos}) {
        if (!*side) continue;
        (*side)->needs_prune = cfg.prune_after_split;
        out.children.push_back(std::move(**side));
        ++out.created;
      }
      out.split_s = seconds_since(t0);
      return out;
    }
    out.split_s = seconds_since(t0);
  }

  const auto t0 = Clock::now();
  resolve_mask(cell);
  out.children.push_back(collapse(cell, net));
  out.collapse_s = seconds_since(t0);
  return out;
}

template <int Dim>
ExtractResult run(const Network& net, const EngineConfig& cfg) {
  const auto t_start = Clock::now();
  ExtractResult result;
  result.dim = Dim;
  auto& stats = result.stats;

  std::vector<Cell<Dim>> stack;
  stack.push_back(make_root_cell<Dim>(net));
  stats.cells_created = 1;
  std::size_t live_bytes = stack.back().state_bytes();
  stats.peak_live_cells = 1;

  const std::size_t batch_size = std::max<std::size_t>(1, cfg.batch_size);
  std::vector<Cell<Dim>> batch;
  std::vector<StepOutcome<Dim>> outcomes;
  while (!stack.empty()) {
    const std::size_t take = std::min(batch_size, stack.size());
    batch.assign(std::make_move_iterator(stack.end() - static_cast<std::ptrdiff_t>(take)),
                 std::make_move_iterator(stack.end()));
    stack.resize(stack.size() - take);
    for (const auto& c : batch) live_bytes -= c.state_bytes();

    outcomes.assign(take, StepOutcome<Dim>{});
    if (take == 1) {
      outcomes[0] = step(std::move(batch[0]), net, cfg);
    } else {
      tbb::parallel_for(std::size_t{0}, take,
                        [&](std::size_t i) { outcomes[i] = step(std::move(batch[i]), net, cfg); });
    }
    ++stats.steps;

    int deepest_layer = 0;
    for (auto& o : outcomes) {
      stats.cells_pruned += o.pruned ? 1 : 0;
      stats.cells_split += o.split ? 1 : 0;
      stats.cells_created += o.created;
      stats.prune_s += o.prune_s;
      stats.split_s += o.split_s;
      stats.collapse_s += o.collapse_s;
      stats.extract_s += o.extract_s;
      if (o.patch) {
        ++stats.cells_emitted;
        result.patches.push_back(std::move(*o.patch));
      }
      for (auto& c : o.children) {
        live_bytes += c.state_bytes();
        deepest_layer = std::max(deepest_layer, c.layer);
        stack.push_back(std::move(c));
      }
    }
    stats.peak_live_cells = std::max<std::uint64_t>(stats.peak_live_cells, stack.size());
    if (live_bytes > cfg.memory_budget_bytes)
      throw MemoryBudgetExceeded("cell state exceeds the memory budget (" + std::to_string(live_bytes) +
                                     " bytes live) at layer " + std::to_string(deepest_layer),
                                 deepest_layer);
  }

  std::sort(result.patches.begin(), result.patches.end(),
            [](const SurfacePatch& a, const SurfacePatch& b) { return a.cell_id < b.cell_id; });
  stats.total_s = seconds_since(t_start);
  return result;
}

}  // namespace

ExtractResult extract(const Network& net, const EngineConfig& cfg) {
  net.validate();
  if (net.encoding)
    throw ShapeError("network uses a sinusoidal encoding; replace it with its piecewise-linear surrogate first");
  if (net.layers.back().activation != Activation::linear)
    throw UnsupportedActivation("extraction needs a linear output layer");
  const int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  tbb::global_control limit(tbb::global_control::max_allowed_parallelism, static_cast<std::size_t>(threads));
  return net.input_dim == 2 ? run<2>(net, cfg) : run<3>(net, cfg);
}

namespace {

// Grid hash for tolerance-based vertex merging; the first vertex seen in a
// neighborhood becomes the representative.
class Welder {
 public:
  explicit Welder(double tol) : tol_(tol), cell_(tol > 0 ? 2.0 * tol : 1e-300) {}

  int insert(const Vec3& p, std::vector<Vec3>& vertices) {
    const auto key = key_of(p);
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          auto it = grid_.find({std::get<0>(key) + dx, std::get<1>(key) + dy, std::get<2>(key) + dz});
          if (it == grid_.end()) continue;
          for (int idx : it->second)
            if ((vertices[static_cast<std::size_t>(idx)] - p).norm() <= tol_) return idx;
        }
    const int idx = static_cast<int>(vertices.size());
    vertices.push_back(p);
    grid_[key].push_back(idx);
    return idx;
  }

 private:
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  Key key_of(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)), static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }

  double tol_;
  double cell_;
  std::map<Key, std::vector<int>> grid_;
};

}  // namespace

Mesh weld(const std::vector<SurfacePatch>& patches, int dim, const Tolerances& tol) {
  Mesh mesh;
  mesh.dim = dim;
  Welder welder(tol.weld);
  std::set<std::vector<int>> seen;
  const std::size_t min_size = dim == 2 ? 2 : 3;
  for (const auto& patch : patches) {
    std::vector<int> face;
    for (const auto& p : patch.polygon) {
      const int idx = welder.insert(p, mesh.vertices);
      if (face.empty() || face.back() != idx) face.push_back(idx);
    }
    while (face.size() > 1 && face.front() == face.back()) face.pop_back();
    if (face.size() < min_size) continue;
    if (dim == 3) {
      Polygon3 poly;
      for (int v : face) poly.vertices.push_back(mesh.vertices[static_cast<std::size_t>(v)]);
      if (vector_area(poly).norm() <= tol.area) continue;
    }
    auto key = face;
    std::sort(key.begin(), key.end());
    if (!seen.insert(key).second) continue;
    mesh.faces.push_back(std::move(face));
  }

  // Drop vertices only referenced by discarded faces.
  std::vector<int> remap(mesh.vertices.size(), -1);
  for (const auto& f : mesh.faces)
    for (int v : f) remap[static_cast<std::size_t>(v)] = 0;
  std::vector<Vec3> kept;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (remap[i] < 0) continue;
    remap[i] = static_cast<int>(kept.size());
    kept.push_back(mesh.vertices[i]);
  }
  for (auto& f : mesh.faces)
    for (int& v : f) v = remap[static_cast<std::size_t>(v)];
  mesh.vertices = std::move(kept);
  return mesh;
}

#define MN_INSTANTIATE(D)                                                                        \
  template struct Cell<D>;                                                                       \
  template Cell<D> make_root_cell<D>(const Network&);                                            \
  template bool prune<D>(const Cell<D>&, const Network&);                                        \
  template std::vector<int> find_critical<D>(const Cell<D>&, const Tolerances&);                 \
  template SplitResult<D> split_cell<D>(const Cell<D>&, int, const Tolerances&);                 \
  template void resolve_mask<D>(Cell<D>&);                                                       \
  template Cell<D> collapse<D>(const Cell<D>&, const Network&);                                  \
  template std::optional<SurfacePatch> extract_patch<D>(const Cell<D>&, const Tolerances&);

MN_INSTANTIATE(2)
MN_INSTANTIATE(3)

#undef MN_INSTANTIATE

}  // namespace mn
