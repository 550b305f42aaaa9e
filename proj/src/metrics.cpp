#include "mn/metrics.hpp"

#include "mn/tessellation.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <tbb/parallel_for.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace mn {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Voronoi-region walk for the closest point.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return ap.norm();

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return bp.norm();

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return point_segment_distance(p, a, b);

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return cp.norm();

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return point_segment_distance(p, a, c);

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0) return point_segment_distance(p, b, c);

  const double denom = va + vb + vc;
  if (!(denom > 0.0))
    return std::min({point_segment_distance(p, a, b), point_segment_distance(p, b, c), point_segment_distance(p, a, c)});
  const double v = vb / denom, w = vc / denom;
  return (p - (a + v * ab + w * ac)).norm();
}

// ---------------------------------------------------------------------------
// MeshDistance

struct MeshDistance::Index {
  using BPoint = bg::model::point<double, 3, bg::cs::cartesian>;
  using BBox = bg::model::box<BPoint>;
  using Value = std::pair<BBox, std::size_t>;

  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> prims;  // prims[i][2] < 0 for segments
  bgi::rtree<Value, bgi::rstar<16>> tree;

  void build() {
    std::vector<Value> values;
    values.reserve(prims.size());
    for (std::size_t i = 0; i < prims.size(); ++i) {
      Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
      Vec3 hi = -lo;
      for (int v : prims[i]) {
        if (v < 0) continue;
        lo = lo.cwiseMin(vertices[static_cast<std::size_t>(v)]);
        hi = hi.cwiseMax(vertices[static_cast<std::size_t>(v)]);
      }
      values.emplace_back(BBox(BPoint(lo.x(), lo.y(), lo.z()), BPoint(hi.x(), hi.y(), hi.z())), i);
    }
    tree = bgi::rtree<Value, bgi::rstar<16>>(values);
  }

  [[nodiscard]] double prim_distance(const Vec3& p, std::size_t i) const {
    const auto& t = prims[i];
    const auto& a = vertices[static_cast<std::size_t>(t[0])];
    const auto& b = vertices[static_cast<std::size_t>(t[1])];
    if (t[2] < 0) return point_segment_distance(p, a, b);
    return point_triangle_distance(p, a, b, vertices[static_cast<std::size_t>(t[2])]);
  }

  [[nodiscard]] double query(const Vec3& p) const {
    if (prims.empty()) throw Error("distance query on an empty mesh");
    const BPoint q(p.x(), p.y(), p.z());
    double best = std::numeric_limits<double>::infinity();
    for (auto it = tree.qbegin(bgi::nearest(q, static_cast<unsigned>(tree.size()))); it != tree.qend(); ++it) {
      if (bg::distance(q, it->first) > best) break;
      best = std::min(best, prim_distance(p, it->second));
    }
    return best;
  }
};

MeshDistance::MeshDistance(const TriMesh& mesh) : index_(std::make_unique<Index>()) {
  index_->vertices = mesh.vertices;
  index_->prims = mesh.triangles;
  index_->build();
}

MeshDistance::MeshDistance(const Mesh& mesh) : index_(std::make_unique<Index>()) {
  index_->vertices = mesh.vertices;
  for (const auto& f : mesh.faces) {
    if (f.size() == 2) {
      index_->prims.push_back({f[0], f[1], -1});
      continue;
    }
    for (std::size_t j = 1; j + 1 < f.size(); ++j) index_->prims.push_back({f[0], f[j], f[j + 1]});
  }
  index_->build();
}

MeshDistance::~MeshDistance() = default;
MeshDistance::MeshDistance(MeshDistance&&) noexcept = default;
MeshDistance& MeshDistance::operator=(MeshDistance&&) noexcept = default;

double MeshDistance::operator()(const Vec3& p) const { return index_->query(p); }

// ---------------------------------------------------------------------------
// Sampling

namespace {

std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) c[i] = (s += w[i]);
  return c;
}

std::size_t pick(const std::vector<double>& cum, double u) {
  const auto it = std::upper_bound(cum.begin(), cum.end(), u * cum.back());
  return std::min(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

Vec3 sample_triangle(const Vec3& a, const Vec3& b, const Vec3& c, double u, double v) {
  const double s = std::sqrt(u);
  return (1.0 - s) * a + s * (1.0 - v) * b + s * v * c;
}

VecX head(const Network& net, const Vec3& p) { return p.head(net.input_dim); }

double mean_abs_f(const Network& net, const std::vector<Vec3>& points) {
  std::vector<double> v(points.size());
  tbb::parallel_for(std::size_t{0}, points.size(), [&](std::size_t i) { v[i] = std::abs(eval(net, head(net, points[i]))); });
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<Vec3> sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.empty()) throw Error("cannot sample an empty mesh");
  std::vector<double> areas(mesh.triangles.size());
  for (std::size_t t = 0; t < areas.size(); ++t) areas[t] = triangle_area(mesh, t);
  const auto cum = cumulative(areas);
  if (!(cum.back() > 0.0)) throw Error("cannot sample a mesh with zero area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = mesh.triangles[pick(cum, unit(rng))];
    const double u = unit(rng), v = unit(rng);
    out.push_back(sample_triangle(mesh.vertices[static_cast<std::size_t>(t[0])],
                                  mesh.vertices[static_cast<std::size_t>(t[1])],
                                  mesh.vertices[static_cast<std::size_t>(t[2])], u, v));
  }
  return out;
}

std::vector<Vec3> sample_polyline(const Mesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.empty()) throw Error("cannot sample an empty mesh");
  std::vector<double> lengths;
  for (const auto& f : mesh.faces) {
    if (f.size() != 2) throw ShapeError("polyline sampling needs two-vertex segments");
    lengths.push_back((mesh.vertices[static_cast<std::size_t>(f[1])] - mesh.vertices[static_cast<std::size_t>(f[0])]).norm());
  }
  const auto cum = cumulative(lengths);
  if (!(cum.back() > 0.0)) throw Error("cannot sample a polyline with zero length");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = mesh.faces[pick(cum, unit(rng))];
    const double t = unit(rng);
    out.push_back((1.0 - t) * mesh.vertices[static_cast<std::size_t>(f[0])] +
                  t * mesh.vertices[static_cast<std::size_t>(f[1])]);
  }
  return out;
}

double soft_precision(const Network& net, const TriMesh& mesh, std::size_t n_samples, std::uint64_t seed) {
  return mean_abs_f(net, sample_surface(mesh, n_samples, seed));
}

double soft_precision(const Network& net, const Mesh& mesh, std::size_t n_samples, std::uint64_t seed) {
  if (mesh.empty()) throw Error("cannot sample an empty mesh");
  if (mesh.dim == 2) return mean_abs_f(net, sample_polyline(mesh, n_samples, seed));
  return soft_precision(net, tessellate(mesh, Tessellation::fan0, 1e-6), n_samples, seed);
}

// ---------------------------------------------------------------------------
// Soft recall

std::vector<std::optional<Vec3>> project_to_zero_set(const Network& net, const std::vector<Vec3>& points,
                                                     const DescentConfig& cfg) {
  const int d = net.input_dim;
  std::vector<std::optional<Vec3>> out(points.size());
  tbb::parallel_for(std::size_t{0}, points.size(), [&](std::size_t i) {
    VecX x = head(net, points[i]);
    double fx = eval(net, x);
    const double f0 = std::abs(fx);
    for (int it = 0; it < cfg.iters && std::abs(fx) > cfg.f_tol; ++it) {
      VecX g(d);
      for (int k = 0; k < d; ++k) {
        VecX xp = x, xm = x;
        xp[k] += cfg.fd_h;
        xm[k] -= cfg.fd_h;
        g[k] = (eval(net, xp) - eval(net, xm)) / (2.0 * cfg.fd_h);
      }
      const double g2 = g.squaredNorm();
      if (!(g2 > 0.0)) break;
      x -= cfg.step * fx / g2 * g;
      fx = eval(net, x);
      if (!std::isfinite(fx)) break;
    }
    const double f1 = std::abs(fx);
    if (!std::isfinite(f1) || (f1 > cfg.f_tol && f1 >= f0)) return;
    Vec3 p = Vec3::Zero();
    p.head(d) = x;
    out[i] = p;
  });
  return out;
}

namespace {

RecallResult recall_against(const Network& net, const MeshDistance& dist, const std::vector<Vec3>& refs,
                            const DescentConfig& cfg) {
  if (refs.empty()) throw Error("soft recall needs reference points");
  const auto projected = project_to_zero_set(net, refs, cfg);
  std::vector<double> d(projected.size(), -1.0);
  tbb::parallel_for(std::size_t{0}, projected.size(), [&](std::size_t i) {
    if (projected[i]) d[i] = dist(*projected[i]);
  });
  RecallResult r;
  double s = 0.0;
  for (double x : d) {
    if (x < 0.0) {
      ++r.dropped;
      continue;
    }
    s += x;
    ++r.used;
  }
  if (r.used == 0) throw Error("soft recall: all reference points diverged");
  r.value = s / static_cast<double>(r.used);
  return r;
}

}  // namespace

RecallResult soft_recall(const Network& net, const TriMesh& mesh, const std::vector<Vec3>& reference_points,
                         const DescentConfig& cfg) {
  if (mesh.empty()) throw Error("soft recall on an empty mesh");
  return recall_against(net, MeshDistance(mesh), reference_points, cfg);
}

RecallResult soft_recall(const Network& net, const Mesh& mesh, const std::vector<Vec3>& reference_points,
                         const DescentConfig& cfg) {
  if (mesh.empty()) throw Error("soft recall on an empty mesh");
  return recall_against(net, MeshDistance(mesh), reference_points, cfg);
}

// ---------------------------------------------------------------------------
// Triangle quality

TriangleShape triangle_shape(const Vec3& a, const Vec3& b, const Vec3& c) {
  const std::array<Vec3, 3> p{a, b, c};
  std::array<double, 3> angle{}, len{};
  for (int i = 0; i < 3; ++i) {
    const Vec3 u = p[static_cast<std::size_t>((i + 1) % 3)] - p[static_cast<std::size_t>(i)];
    const Vec3 v = p[static_cast<std::size_t>((i + 2) % 3)] - p[static_cast<std::size_t>(i)];
    len[static_cast<std::size_t>(i)] = u.norm();
    angle[static_cast<std::size_t>(i)] = std::atan2(u.cross(v).norm(), u.dot(v)) * 180.0 / std::numbers::pi;
  }
  const double lmin = *std::min_element(len.begin(), len.end());
  const double cross = (b - a).cross(c - a).norm();
  if (!(lmin > 0.0) || !(cross > 0.0)) throw ShapeError("degenerate triangle");

  TriangleShape s;
  s.theta_min = *std::min_element(angle.begin(), angle.end());
  s.theta_max = *std::max_element(angle.begin(), angle.end());
  s.skew = std::clamp(std::max((s.theta_max - 60.0) / 120.0, (60.0 - s.theta_min) / 60.0), 0.0, 1.0);
  s.edge_ratio = *std::max_element(len.begin(), len.end()) / lmin;
  return s;
}

TriQuality triangle_quality(const TriMesh& mesh) {
  TriQuality q;
  if (mesh.empty()) return q;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    TriangleShape s;
    try {
      s = triangle_shape(mesh.vertices[static_cast<std::size_t>(tri[0])], mesh.vertices[static_cast<std::size_t>(tri[1])],
                         mesh.vertices[static_cast<std::size_t>(tri[2])]);
    } catch (const ShapeError&) {
      throw ShapeError("triangle " + std::to_string(t) + " is degenerate");
    }
    q.theta_min_mean += s.theta_min;
    q.theta_max_mean += s.theta_max;
    q.equiangle_skew_mean += s.skew;
    q.edge_ratio_mean += s.edge_ratio;
    ++q.skew_histogram[std::min<std::size_t>(static_cast<std::size_t>(s.skew * 10.0), 9)];
    ++q.theta_min_histogram[std::min<std::size_t>(static_cast<std::size_t>(s.theta_min / 5.0), 11)];
  }
  const auto n = static_cast<double>(mesh.triangles.size());
  q.theta_min_mean /= n;
  q.theta_max_mean /= n;
  q.equiangle_skew_mean /= n;
  q.edge_ratio_mean /= n;
  return q;
}

// ---------------------------------------------------------------------------
// Analytic shapes

double AnalyticShape::distance(const Vec3& p) const {
  switch (kind) {
    case Kind::sphere:
      return std::abs(p.norm() - r);
    case Kind::circle2d:
      return std::abs(p.head<2>().norm() - r);
    case Kind::two_spheres: {
      const Vec3 c(offset, 0.0, 0.0);
      const double sd = std::min((p - c).norm(), (p + c).norm()) - r;
      return std::abs(sd);
    }
    case Kind::box: {
      const Vec3 q = p.cwiseAbs() - Vec3::Constant(r);
      const double outside = q.cwiseMax(0.0).norm();
      const double inside = std::min(q.maxCoeff(), 0.0);
      return std::abs(outside + inside);
    }
    case Kind::octahedron: {
      // Distance to the boundary of the convex octahedron: the nearest of the
      // eight triangular faces.
      double best = std::numeric_limits<double>::infinity();
      for (int s = 0; s < 8; ++s) {
        const Vec3 a((s & 1) ? -r : r, 0, 0), b(0, (s & 2) ? -r : r, 0), c(0, 0, (s & 4) ? -r : r);
        best = std::min(best, point_triangle_distance(p, a, b, c));
      }
      return best;
    }
  }
  return 0.0;
}

std::optional<AnalyticShape> shape_from_metadata(const nlohmann::json& file) {
  const auto meta = file.find("metadata");
  if (meta == file.end() || !meta->is_object()) return std::nullopt;
  const auto sj = meta->find("shape");
  if (sj == meta->end() || !sj->is_object()) return std::nullopt;
  const std::string type = sj->value("type", "");
  AnalyticShape s;
  if (type == "octahedron") {
    s.kind = AnalyticShape::Kind::octahedron;
    s.r = sj->value("r", 0.5);
  } else if (type == "sphere") {
    s.kind = AnalyticShape::Kind::sphere;
    s.r = sj->value("r", 0.5);
  } else if (type == "box") {
    s.kind = AnalyticShape::Kind::box;
    s.r = sj->value("h", 0.4);
  } else if (type == "two_spheres") {
    s.kind = AnalyticShape::Kind::two_spheres;
    s.r = sj->value("r", 0.3);
    s.offset = sj->value("offset", 0.45);
  } else if (type == "circle2d") {
    s.kind = AnalyticShape::Kind::circle2d;
    s.r = sj->value("r", 0.5);
  } else {
    throw ParseError("unknown fixture shape '" + type + "'");
  }
  return s;
}

std::vector<Vec3> sample_shape(const AnalyticShape& shape, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<Vec3> out;
  out.reserve(n);
  const auto on_sphere = [&](double r) {
    Vec3 g;
    do g = Vec3(gauss(rng), gauss(rng), gauss(rng));
    while (g.norm() == 0.0);
    return Vec3(r * g / g.norm());
  };
  for (std::size_t i = 0; i < n; ++i) {
    switch (shape.kind) {
      case AnalyticShape::Kind::sphere:
        out.push_back(on_sphere(shape.r));
        break;
      case AnalyticShape::Kind::two_spheres: {
        const double side = coin(rng) ? 1.0 : -1.0;
        out.push_back(on_sphere(shape.r) + Vec3(side * shape.offset, 0.0, 0.0));
        break;
      }
      case AnalyticShape::Kind::circle2d: {
        const double t = 2.0 * std::numbers::pi * unit(rng);
        out.emplace_back(shape.r * std::cos(t), shape.r * std::sin(t), 0.0);
        break;
      }
      case AnalyticShape::Kind::octahedron: {
        const int s = std::uniform_int_distribution<int>(0, 7)(rng);
        const double r = shape.r;
        const Vec3 a((s & 1) ? -r : r, 0, 0), b(0, (s & 2) ? -r : r, 0), c(0, 0, (s & 4) ? -r : r);
        const double u = unit(rng), v = unit(rng);
        out.push_back(sample_triangle(a, b, c, u, v));
        break;
      }
      case AnalyticShape::Kind::box: {
        const int face = std::uniform_int_distribution<int>(0, 5)(rng);
        Vec3 p(2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0);
        p[face / 2] = (face % 2) ? -1.0 : 1.0;
        out.push_back(shape.r * p);
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

nlohmann::json to_json(const MetricReport& r) {
  const auto& q = r.tri_quality;
  return {
      {"soft_precision", r.soft_precision},
      {"soft_precision_e6", r.soft_precision * 1e6},
      {"soft_recall", r.soft_recall},
      {"soft_recall_e6", r.soft_recall * 1e6},
      {"recall_points", r.recall_points},
      {"recall_dropped", r.recall_dropped},
      {"tri_quality",
       {{"theta_min_mean", q.theta_min_mean},
        {"theta_max_mean", q.theta_max_mean},
        {"equiangle_skew_mean", q.equiangle_skew_mean},
        {"edge_ratio_mean", q.edge_ratio_mean},
        {"skew_histogram", q.skew_histogram},
        {"theta_min_histogram", q.theta_min_histogram}}},
      {"triangle_count", r.triangle_count},
      {"runtime_s", r.runtime_s},
  };
}

std::string format_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::size_t name_w = 6;
  for (const auto& [name, _] : rows) name_w = std::max(name_w, name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_w)) << "method" << std::right << std::setw(14) << "SP x1e6"
     << std::setw(14) << "SR x1e6" << std::setw(12) << "tris /1e3" << std::setw(10) << "skew" << std::setw(12)
     << "time s" << '\n';
  os << std::fixed;
  for (const auto& [name, r] : rows) {
    os << std::left << std::setw(static_cast<int>(name_w)) << name << std::right << std::setprecision(4)
       << std::setw(14) << r.soft_precision * 1e6 << std::setw(14) << r.soft_recall * 1e6 << std::setprecision(3)
       << std::setw(12) << static_cast<double>(r.triangle_count) / 1e3 << std::setw(10)
       << r.tri_quality.equiangle_skew_mean << std::setw(12) << r.runtime_s << '\n';
  }
  return os.str();
}

}  // namespace mn
