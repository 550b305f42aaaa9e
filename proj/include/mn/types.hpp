#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mn {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

template <typename Scalar, int Dim>
using Point = Eigen::Matrix<Scalar, Dim, 1>;

/// Axis-aligned box; lo and hi have the same dimension.
struct Box {
  VecX lo;
  VecX hi;

  [[nodiscard]] Eigen::Index dim() const { return lo.size(); }
  [[nodiscard]] VecX center() const { return 0.5 * (lo + hi); }
  [[nodiscard]] VecX half_extent() const { return 0.5 * (hi - lo); }
  [[nodiscard]] bool contains(const VecX& p, double slack = 0.0) const {
    return ((p.array() >= lo.array() - slack) && (p.array() <= hi.array() + slack)).all();
  }
};

/// Geometric tolerances shared by clipping, extraction and welding.
struct Tolerances {
  double on_plane = 1e-12;   // relative dead zone for vertex-vs-plane tests
  double weld = 1e-10;       // vertex merge distance
  double area = 1e-18;       // polygon sides below this are dropped
  double volume = 1e-24;     // polyhedron sides below this are dropped
  double convexity = 1e-9;   // convexity check slack
  double surface = 1e-7;     // |f| bound for extracted vertices
};

/// Base class for errors raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class UnsupportedActivation : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class MemoryBudgetExceeded : public Error {
 public:
  MemoryBudgetExceeded(const std::string& what, int layer) : Error(what), layer_(layer) {}
  [[nodiscard]] int layer() const { return layer_; }

 private:
  int layer_;
};

}  // namespace mn
