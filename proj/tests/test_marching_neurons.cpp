#include "mn/marching_neurons.hpp"
#include "mn/metrics.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace {

using namespace mn;

const std::vector<std::string> kFixtures3 = {"octahedron.json", "box.json", "sphere_d2_w16.json", "sphere_d3_w32.json",
                                             "two_spheres_d3_w32.json"};
const std::vector<std::string> kFixtures2 = {"diamond2d.json", "identity-2d.json"};

Network extractable(const std::string& name) {
  const Network net = test::load_fixture(name);
  return net.encoding ? with_pwl_encoding(net, 6) : net;
}

Mesh extract_mesh(const Network& net, EngineConfig cfg = {}) {
  const auto r = extract(net, cfg);
  return weld(r.patches, r.dim, cfg.tol);
}

std::string obj_text(const Mesh& m) {
  std::ostringstream os;
  write_obj(os, m);
  return os.str();
}

/// Pre-activations of layer `layer` (1-based, as in the cell maps) by a direct forward pass.
VecX direct_preactivation(const Network& net, int layer, const VecX& x) {
  VecX a = x;
  for (int l = 0; l < layer; ++l) {
    const Layer& L = net.layers[static_cast<std::size_t>(l)];
    VecX z = L.weights * a + L.bias;
    if (l + 1 == layer) return z;
    a = L.activation == Activation::relu ? VecX(z.cwiseMax(0.0)) : z;
  }
  return a;
}

// ---------------------------------------------------------------------------
// Single-cell operations

TEST(Cell, RootCell) {
  const Network net = test::load_fixture("octahedron.json");
  const Cell<3> root = make_root_cell<3>(net);
  EXPECT_EQ(root.layer, 0);
  EXPECT_EQ(root.map_w, (Eigen::Matrix<double, Eigen::Dynamic, 3>::Identity(3, 3)));
  EXPECT_EQ(root.map_b, VecX::Zero(3));
  EXPECT_EQ(root.mask, (std::vector<std::int8_t>{kActive, kActive, kActive}));
  EXPECT_EQ(root.id, "");
  EXPECT_NEAR(volume(root.geometry), std::pow(1.9, 3), 1e-12);
  EXPECT_THROW(make_root_cell<2>(net), ShapeError);
}

TEST(Cell, FirstCollapseGivesFirstLayer) {
  const Network net = test::load_fixture("sphere_d2_w16.json");
  const Cell<3> c = collapse(make_root_cell<3>(net), net);
  EXPECT_EQ(c.layer, 1);
  EXPECT_EQ(MatX(c.map_w), net.layers[0].weights);
  EXPECT_EQ(c.map_b, net.layers[0].bias);
  EXPECT_TRUE(std::all_of(c.mask.begin(), c.mask.end(), [](auto m) { return m == kUnresolved; }));
}

TEST(Cell, CriticalNeuronsNeedStrictSignChange) {
  Network net = test::load_fixture("octahedron.json");
  net.domain = Box{Vec3(0, -1, -1), Vec3(1, 1, 1)};
  const Cell<3> c = collapse(make_root_cell<3>(net), net);
  // x and -x vanish on the face x = 0 but never change sign; y, -y, z, -z do.
  EXPECT_EQ(find_critical(c), (std::vector<int>{2, 3, 4, 5}));
}

TEST(Cell, SplitPartitionsTheCell) {
  const Network net = test::load_fixture("octahedron.json");
  const Cell<3> c = collapse(make_root_cell<3>(net), net);
  const auto s = split_cell(c, 0);
  ASSERT_TRUE(s.neg && s.pos);
  EXPECT_NEAR(volume(s.neg->geometry) + volume(s.pos->geometry), volume(c.geometry), 1e-12);
  EXPECT_EQ(s.neg->mask[0], kInactive);
  EXPECT_EQ(s.pos->mask[0], kActive);
  EXPECT_EQ(s.neg->id, "0");
  EXPECT_EQ(s.pos->id, "1");
  EXPECT_EQ(s.neg->mask[1], kUnresolved);
}

TEST(Cell, ResolveMaskTiesGoActive) {
  const Network net = test::load_fixture("octahedron.json");
  Cell<3> c = collapse(make_root_cell<3>(net), net);
  c.geometry = make_box_polyhedron(Box{Vec3(0.1, -0.2, -0.3), Vec3(0.2, 0.2, 0.3)});
  resolve_mask(c);
  // x > 0 everywhere: active. -x: inactive. y spans [-0.2, 0.2]: tie, active
  // for both y and -y. z spans [-0.3, 0.3]: tie again. Dead neurons sit at -1.
  EXPECT_EQ(c.mask, (std::vector<std::int8_t>{kActive, kInactive, kActive, kActive, kActive, kActive, kInactive,
                                              kInactive}));
}

TEST(Cell, ExtractPlanePatch) {
  const Network net = test::load_fixture("halfspace_z.json");
  Cell<3> c = collapse(make_root_cell<3>(net), net);
  const auto patch = extract_patch(c);
  ASSERT_TRUE(patch);
  EXPECT_EQ(patch->polygon.size(), 4u);
  for (const auto& v : patch->polygon) EXPECT_EQ(v.z(), 0.0);
  EXPECT_EQ(patch->normal, Vec3(0, 0, 1));

  c.geometry = make_box_polyhedron(Box{Vec3(-1, -1, 0.1), Vec3(1, 1, 0.9)});
  EXPECT_FALSE(extract_patch(c));
}

TEST(Cell, PruneDropsFarCells) {
  const Network net = test::load_fixture("octahedron.json");
  Cell<3> c = make_root_cell<3>(net);
  EXPECT_TRUE(prune(c, net));
  c.geometry = make_box_polyhedron(Box{Vec3(0.6, 0.6, 0.6), Vec3(0.9, 0.9, 0.9)});
  EXPECT_FALSE(prune(c, net));
}

TEST(Cell, CollapseMatchesDirectEvaluation) {
  std::mt19937_64 rng(31);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  const Network net = test::load_fixture("sphere_d3_w32.json");
  std::vector<Cell<3>> stack{make_root_cell<3>(net)};
  double worst = 0.0;
  int checked = 0;
  std::size_t visited = 0;
  while (!stack.empty() && visited < 4000) {
    Cell<3> c = std::move(stack.back());
    stack.pop_back();
    ++visited;
    if (c.layer == net.depth()) continue;
    if (c.layer >= 1) {
      const auto crit = find_critical(c);
      if (!crit.empty()) {
        auto s = split_cell(c, crit.front());
        if (s.neg) stack.push_back(std::move(*s.neg));
        if (s.pos) stack.push_back(std::move(*s.pos));
        continue;
      }
    }
    resolve_mask(c);
    const Cell<3> next = collapse(c, net);
    const auto verts = vertex_matrix(next.geometry);
    for (int k = 0; k < 5; ++k) {
      VecX w(verts.cols());
      for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = gamma(rng);
      const Vec3 x = verts * (w / w.sum());
      const VecX via_map = next.map_w * x + next.map_b;
      const VecX direct = direct_preactivation(net, next.layer, x);
      worst = std::max(worst, (via_map - direct).cwiseAbs().maxCoeff());
      ++checked;
    }
    stack.push_back(next);
  }
  EXPECT_GT(checked, 500);
  EXPECT_LE(worst, 1e-10);
}

// ---------------------------------------------------------------------------
// Whole extraction

TEST(Extract, OctahedronWelds) {
  const Mesh m = extract_mesh(test::load_fixture("octahedron.json"));
  EXPECT_EQ(m.vertices.size(), 6u);
  EXPECT_EQ(m.faces.size(), 8u);
  EXPECT_EQ(edge_count(m), 12u);
  EXPECT_TRUE(is_watertight(m));
}

TEST(Extract, HalfspaceSpansTheDomain) {
  const auto r = extract(test::load_fixture("halfspace_z.json"));
  ASSERT_EQ(r.patches.size(), 1u);
  EXPECT_EQ(r.patches[0].normal, Vec3(0, 0, 1));
  Polygon3 poly{r.patches[0].polygon};
  EXPECT_NEAR(vector_area(poly).norm(), 1.9 * 1.9, 1e-12);
}

TEST(Extract, ConstantHasNoSurface) {
  const auto r = extract(test::load_fixture("const_pos.json"));
  EXPECT_TRUE(r.patches.empty());
  EXPECT_TRUE(weld(r.patches, 3).empty());
}

TEST(Extract, DiamondPolyline) {
  const Mesh m = extract_mesh(test::load_fixture("diamond2d.json"));
  EXPECT_EQ(m.dim, 2);
  EXPECT_EQ(m.vertices.size(), 4u);
  EXPECT_EQ(m.faces.size(), 4u);
  EXPECT_TRUE(is_watertight(m));
  for (const auto& v : m.vertices) EXPECT_NEAR(std::abs(v.x()) + std::abs(v.y()), 0.5, 1e-15);
}

TEST(Extract, RejectsEncodedNetworks) {
  EXPECT_THROW(extract(test::load_fixture("circle2d_d2_w16.json")), ShapeError);
}

TEST(Extract, VerticesAndEdgeMidpointsOnTheZeroSet) {
  std::vector<std::string> all = kFixtures3;
  all.insert(all.end(), kFixtures2.begin(), kFixtures2.end());
  all.push_back("circle2d_d2_w16.json");
  for (const auto& name : all) {
    const Network net = extractable(name);
    const Mesh m = extract_mesh(net);
    ASSERT_FALSE(m.empty()) << name;
    double worst = 0.0;
    for (const auto& v : m.vertices) worst = std::max(worst, std::abs(eval(net, v.head(net.input_dim))));
    for (const auto& f : m.faces)
      for (std::size_t i = 0; i < f.size(); ++i) {
        const Vec3 mid = 0.5 * (m.vertices[static_cast<std::size_t>(f[i])] +
                                m.vertices[static_cast<std::size_t>(f[(i + 1) % f.size()])]);
        worst = std::max(worst, std::abs(eval(net, mid.head(net.input_dim))));
      }
    EXPECT_LE(worst, 1e-7) << name;
  }
}

TEST(Extract, PatchVerticesOnTheZeroSet) {
  const Network net = test::load_fixture("two_spheres_d3_w32.json");
  for (const auto& p : extract(net).patches)
    for (const auto& v : p.polygon) ASSERT_LE(std::abs(eval(net, v)), 1e-7);
}

// Roots of f along random segments through the domain, by bisection.
std::vector<Vec3> bisection_roots(const Network& net, std::size_t want, std::mt19937_64& rng) {
  std::vector<Vec3> roots;
  for (int attempt = 0; roots.size() < want && attempt < 200 * static_cast<int>(want); ++attempt) {
    VecX a = test::uniform_in(net.domain, rng), b = test::uniform_in(net.domain, rng);
    double fa = eval(net, a), fb = eval(net, b);
    if ((fa < 0) == (fb < 0) || fa == 0.0 || fb == 0.0) continue;
    for (int it = 0; it < 200 && (b - a).norm() > 1e-14; ++it) {
      const VecX m = 0.5 * (a + b);
      const double fm = eval(net, m);
      if (fm == 0.0) {
        a = b = m;
        break;
      }
      if ((fm < 0) == (fa < 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    Vec3 p = Vec3::Zero();
    p.head(net.input_dim) = 0.5 * (a + b);
    roots.push_back(p);
  }
  return roots;
}

TEST(Extract, CompleteAgainstBisectionRoots) {
  std::mt19937_64 rng(99);
  for (const auto& name : {"sphere_d3_w32.json", "two_spheres_d3_w32.json", "circle2d_d2_w16.json", "box.json"}) {
    const Network net = extractable(name);
    const Mesh m = extract_mesh(net);
    const MeshDistance dist(m);
    const auto roots = bisection_roots(net, 10000, rng);
    ASSERT_EQ(roots.size(), 10000u) << name;
    double worst = 0.0;
    for (const auto& p : roots) worst = std::max(worst, dist(p));
    EXPECT_LE(worst, 1e-6) << name;
  }
}

TEST(Extract, ScheduleIndependent) {
  for (const auto& name : kFixtures3) {
    const Network net = extractable(name);
    std::string reference;
    for (std::size_t batch : {std::size_t{1}, std::size_t{64}, std::size_t{4096}}) {
      EngineConfig cfg;
      cfg.batch_size = batch;
      const std::string text = obj_text(extract_mesh(net, cfg));
      if (reference.empty())
        reference = text;
      else
        EXPECT_EQ(text, reference) << name << " batch " << batch;
    }
    EngineConfig single;
    single.threads = 1;
    EXPECT_EQ(obj_text(extract_mesh(net, single)), reference) << name;
  }
}

TEST(Extract, PruningDoesNotChangeTheMesh) {
  const Network net = test::load_fixture("sphere_d2_w16.json");
  EngineConfig off;
  off.disable_pruning = true;
  EngineConfig mid;
  mid.prune_after_split = true;
  const std::string ref = obj_text(extract_mesh(net));
  EXPECT_EQ(obj_text(extract_mesh(net, off)), ref);
  EXPECT_EQ(obj_text(extract_mesh(net, mid)), ref);
}

TEST(Extract, PeakLiveCellsWithinMemoryContract) {
  for (const auto& name : kFixtures3) {
    const Network net = extractable(name);
    for (std::size_t batch : {std::size_t{1}, std::size_t{16}, std::size_t{4096}}) {
      EngineConfig cfg;
      cfg.batch_size = batch;
      const auto r = extract(net, cfg);
      const auto neurons = static_cast<std::uint64_t>(net.hidden_neuron_count() + 1);
      EXPECT_LE(r.stats.peak_live_cells, batch * neurons) << name << " batch " << batch;
    }
  }
}

TEST(Extract, StatsAreConsistent) {
  const auto r = extract(test::load_fixture("sphere_d3_w32.json"));
  const auto& s = r.stats;
  EXPECT_EQ(s.cells_created, 1 + 2 * s.cells_split);
  EXPECT_EQ(s.cells_emitted, r.patches.size());
  EXPECT_GT(s.cells_pruned, 0u);
  EXPECT_GE(s.total_s, 0.0);
  EXPECT_TRUE(std::is_sorted(r.patches.begin(), r.patches.end(),
                             [](const auto& a, const auto& b) { return a.cell_id < b.cell_id; }));
}

TEST(Extract, MemoryBudgetExceededNamesLayer) {
  EngineConfig cfg;
  cfg.memory_budget_bytes = 4096;
  try {
    extract(test::load_fixture("sphere_d3_w32.json"), cfg);
    FAIL() << "expected MemoryBudgetExceeded";
  } catch (const MemoryBudgetExceeded& e) {
    EXPECT_GE(e.layer(), 0);
    EXPECT_LE(e.layer(), 3);
  }
}

TEST(Extract, ClosedSurfacesAreWatertight) {
  for (const auto& name : kFixtures3) {
    const Mesh m = extract_mesh(extractable(name));
    EXPECT_TRUE(is_watertight(m)) << name;
  }
  const Mesh circle = extract_mesh(extractable("circle2d_d2_w16.json"));
  EXPECT_TRUE(is_watertight(circle));
}

TEST(Extract, RandomNetworksStayExact) {
  std::mt19937_64 rng(4242);
  for (int t = 0; t < 10; ++t) {
    const int d = t % 2 ? 2 : 3;
    const Network net = test::random_network(d, {10, 10}, rng);
    const Mesh m = extract_mesh(net);
    for (const auto& v : m.vertices) EXPECT_LE(std::abs(eval(net, v.head(d))), 1e-7);
  }
}

// ---------------------------------------------------------------------------
// Welding

TEST(Weld, EmptyInput) { EXPECT_TRUE(weld({}, 3).empty()); }

TEST(Weld, SinglePatch) {
  SurfacePatch p;
  p.polygon = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  const Mesh m = weld({p}, 3);
  EXPECT_EQ(m.vertices.size(), 4u);
  ASSERT_EQ(m.faces.size(), 1u);
  EXPECT_EQ(m.faces[0], (std::vector<int>{0, 1, 2, 3}));
}

TEST(Weld, MergesNearbyVerticesAndDropsDuplicates) {
  SurfacePatch a, b;
  a.polygon = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  b.polygon = {Vec3(1e-12, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0)};
  const Mesh m = weld({a, b}, 3);
  EXPECT_EQ(m.vertices.size(), 3u);
  EXPECT_EQ(m.faces.size(), 1u);
}

}  // namespace
