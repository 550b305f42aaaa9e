#pragma once

#include "mn/mesh.hpp"
#include "mn/network.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mn {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Exact unsigned distance from a point to a triangle mesh or, for 2D meshes,
/// to a polyline. Polygon faces are fanned into triangles.
class MeshDistance {
 public:
  explicit MeshDistance(const TriMesh& mesh);
  explicit MeshDistance(const Mesh& mesh);
  ~MeshDistance();
  MeshDistance(MeshDistance&&) noexcept;
  MeshDistance& operator=(MeshDistance&&) noexcept;

  [[nodiscard]] double operator()(const Vec3& p) const;

 private:
  struct Index;
  std::unique_ptr<Index> index_;
};

/// Area-weighted uniform samples on the triangles.
std::vector<Vec3> sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed);
/// Length-weighted uniform samples on the segments of a 2D mesh.
std::vector<Vec3> sample_polyline(const Mesh& mesh, std::size_t n, std::uint64_t seed);

/// Mean |f| over samples of the mesh surface. Throws Error on an empty mesh.
double soft_precision(const Network& net, const TriMesh& mesh, std::size_t n_samples = std::size_t{1} << 20,
                      std::uint64_t seed = 0);
/// Same for a polygon mesh (fanned) or a 2D polyline.
double soft_precision(const Network& net, const Mesh& mesh, std::size_t n_samples = std::size_t{1} << 20,
                      std::uint64_t seed = 0);

struct DescentConfig {
  double step = 1.0;
  int iters = 50;
  double f_tol = 1e-6;
  double fd_h = 1e-5;
};

struct RecallResult {
  double value = 0.0;
  std::size_t used = 0;
  std::size_t dropped = 0;  // points whose |f| did not decrease
};

/// Moves every point with x <- x - step f(x) grad f(x) / |grad f(x)|^2 until
/// |f| <= f_tol or the iterations run out. The gradient uses central
/// differences. Diverged points come back as nullopt.
std::vector<std::optional<Vec3>> project_to_zero_set(const Network& net, const std::vector<Vec3>& points,
                                                     const DescentConfig& cfg = {});

/// Projects the reference points onto the zero set and averages their
/// distance to the mesh. Throws Error if there are no points or all diverge.
RecallResult soft_recall(const Network& net, const TriMesh& mesh, const std::vector<Vec3>& reference_points,
                         const DescentConfig& cfg = {});
RecallResult soft_recall(const Network& net, const Mesh& mesh, const std::vector<Vec3>& reference_points,
                         const DescentConfig& cfg = {});

struct TriangleShape {
  double theta_min = 0.0;  // degrees
  double theta_max = 0.0;
  double skew = 0.0;  // max((theta_max - 60) / 120, (60 - theta_min) / 60)
  double edge_ratio = 0.0;
};

/// Throws ShapeError for a degenerate triangle.
TriangleShape triangle_shape(const Vec3& a, const Vec3& b, const Vec3& c);

struct TriQuality {
  double theta_min_mean = 0.0;
  double theta_max_mean = 0.0;
  double equiangle_skew_mean = 0.0;
  double edge_ratio_mean = 0.0;
  std::array<std::size_t, 10> skew_histogram{};       // bins of width 0.1 over [0, 1]
  std::array<std::size_t, 12> theta_min_histogram{};  // bins of 5 degrees over [0, 60]
};

/// Throws ShapeError naming the first degenerate triangle.
TriQuality triangle_quality(const TriMesh& mesh);

/// Closed-form shape recorded in a fixture's metadata.
struct AnalyticShape {
  enum class Kind { octahedron, sphere, box, two_spheres, circle2d };
  Kind kind = Kind::sphere;
  double r = 0.5;  // radius, octahedron |x|+|y|+|z| level, box half extent
  double offset = 0.0;

  [[nodiscard]] int dim() const { return kind == Kind::circle2d ? 2 : 3; }
  /// Unsigned distance to the shape's surface.
  [[nodiscard]] double distance(const Vec3& p) const;
};

/// Reads metadata.shape from a network file's JSON; nullopt if absent.
std::optional<AnalyticShape> shape_from_metadata(const nlohmann::json& file);

/// Uniform surface samples of the shape (z = 0 in 2D).
std::vector<Vec3> sample_shape(const AnalyticShape& shape, std::size_t n, std::uint64_t seed);

struct MetricReport {
  double soft_precision = 0.0;
  double soft_recall = 0.0;
  std::size_t recall_points = 0;
  std::size_t recall_dropped = 0;
  TriQuality tri_quality;
  std::size_t triangle_count = 0;
  double runtime_s = 0.0;
};

nlohmann::json to_json(const MetricReport& report);
/// Aligned text table with SP and SR scaled by 1e6 and triangles by 1e-3.
std::string format_table(const std::vector<std::pair<std::string, MetricReport>>& rows);

}  // namespace mn
