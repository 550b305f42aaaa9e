#pragma once

#include "mn/network.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace mn {

/// Sound enclosure [lo, hi] of a function's range.
struct RangeResult {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] bool contains(double v) const { return lo <= v && v <= hi; }
  [[nodiscard]] bool excludes_zero() const { return lo > 0.0 || hi < 0.0; }
};

namespace detail {

template <typename Scalar>
constexpr Scalar unit_roundoff() {
  return std::numeric_limits<Scalar>::epsilon();
}

/// Rounds a nonnegative quantity computed with `ops` roundings upward.
template <typename Scalar>
Scalar pad_up(Scalar x, int ops) {
  const Scalar grown = x * (Scalar(1) + Scalar(2 * (ops + 1)) * unit_roundoff<Scalar>());
  return std::nextafter(grown, std::numeric_limits<Scalar>::infinity()) + std::numeric_limits<Scalar>::denorm_min();
}

}  // namespace detail

/// Affine form  center + sum_k coeffs[k] * e_k  +/- err  with noise symbols
/// e_k in [-1, 1]. One symbol per box dimension; nonlinear and rounding
/// contributions are folded into err.
template <typename Scalar>
struct AffineForm {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar center{0};
  Vector coeffs;
  Scalar err{0};

  /// Radius rounded upward.
  [[nodiscard]] Scalar radius() const {
    const auto n = static_cast<int>(coeffs.size());
    return detail::pad_up<Scalar>(coeffs.cwiseAbs().sum() + err, n + 1);
  }

  /// Outward-rounded enclosure of the represented value set.
  [[nodiscard]] RangeResult interval() const {
    const Scalar r = radius();
    const Scalar inf = std::numeric_limits<Scalar>::infinity();
    return RangeResult{static_cast<double>(std::nextafter(center - r, -inf)),
                       static_cast<double>(std::nextafter(center + r, inf))};
  }
};

/// ReLU relaxation with chord slope u/(u-l): relu(t) lies in slope*t + d +/- d
/// over [l, u], where d is recomputed from the rounded slope so the enclosure
/// stays sound whatever rounding the slope suffered.
/// `known`, when given, is a sound range of the argument over the region of
/// interest; the relaxation is then valid only over that region.
template <typename Scalar>
AffineForm<Scalar> relu_affine(const AffineForm<Scalar>& a, const RangeResult* known = nullptr) {
  RangeResult r = a.interval();
  if (known && known->lo <= r.hi && known->hi >= r.lo) {
    r.lo = std::max(r.lo, known->lo);
    r.hi = std::min(r.hi, known->hi);
  }
  if (r.lo >= 0.0) return a;
  AffineForm<Scalar> out;
  if (r.hi <= 0.0) {
    out.coeffs = AffineForm<Scalar>::Vector::Zero(a.coeffs.size());
    return out;
  }
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  Scalar lo = static_cast<Scalar>(r.lo);
  Scalar hi = static_cast<Scalar>(r.hi);
  if (static_cast<double>(lo) > r.lo) lo = std::nextafter(lo, -inf);
  if (static_cast<double>(hi) < r.hi) hi = std::nextafter(hi, inf);
  const Scalar slope = hi / (hi - lo);
  // relu(t) - slope*t is 0 at t=0 and maximal at an endpoint.
  const Scalar gap = detail::pad_up<Scalar>(std::max(-slope * lo, hi * (Scalar(1) - slope)), 3);
  const Scalar half = detail::pad_up<Scalar>(gap / Scalar(2), 1);

  out.center = slope * a.center + half;
  out.coeffs = slope * a.coeffs;
  const Scalar magnitude = std::abs(slope * a.center) + half + out.coeffs.cwiseAbs().sum() + slope * a.err;
  const auto ops = static_cast<int>(a.coeffs.size()) + 4;
  out.err = detail::pad_up<Scalar>(slope * a.err + half + Scalar(2 * ops) * detail::unit_roundoff<Scalar>() * magnitude,
                                   ops);
  return out;
}

/// A vector of affine forms sharing the same noise symbols.
template <typename Scalar>
struct AffineVector {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector center;
  Matrix coeffs;  // rows: components, cols: noise symbols
  Vector err;

  [[nodiscard]] Eigen::Index size() const { return center.size(); }
  [[nodiscard]] AffineForm<Scalar> operator[](Eigen::Index i) const {
    return AffineForm<Scalar>{center[i], coeffs.row(i).transpose(), err[i]};
  }
  void set(Eigen::Index i, const AffineForm<Scalar>& f) {
    center[i] = f.center;
    coeffs.row(i) = f.coeffs.transpose();
    err[i] = f.err;
  }
};

/// Affine image of the box under x -> W x + b, evaluated in 64-bit and then
/// rounded to Scalar with the conversion error moved into err.
template <typename Scalar>
AffineVector<Scalar> affine_entry(const MatX& weights, const VecX& bias, const Box& box) {
  const VecX c = box.center();
  const VecX r = box.half_extent();
  const VecX center = weights * c + bias;
  const MatX coeffs = weights * r.asDiagonal();
  const VecX magnitude = weights.cwiseAbs() * (c.cwiseAbs() + r) + bias.cwiseAbs();

  AffineVector<Scalar> out;
  out.center = center.template cast<Scalar>();
  out.coeffs = coeffs.template cast<Scalar>();
  out.err.resize(center.size());
  const double slack = 4.0 * static_cast<double>(weights.cols() + 2) * std::numeric_limits<double>::epsilon();
  for (Eigen::Index i = 0; i < center.size(); ++i) {
    double e = std::abs(center[i] - static_cast<double>(out.center[i])) + slack * magnitude[i];
    for (Eigen::Index k = 0; k < coeffs.cols(); ++k) e += std::abs(coeffs(i, k) - static_cast<double>(out.coeffs(i, k)));
    out.err[i] = detail::pad_up<Scalar>(static_cast<Scalar>(e), 2);
  }
  return out;
}

/// x -> W x + b applied to a vector of forms in Scalar arithmetic; every
/// output err is padded by the dot-product rounding bound.
template <typename Scalar>
AffineVector<Scalar> affine_layer(const Layer& layer, const AffineVector<Scalar>& in) {
  using Matrix = typename AffineVector<Scalar>::Matrix;
  using Vector = typename AffineVector<Scalar>::Vector;
  const Matrix w = layer.weights.template cast<Scalar>();
  const Vector b = layer.bias.template cast<Scalar>();
  const Matrix w_abs = w.cwiseAbs();

  AffineVector<Scalar> out;
  out.center = w * in.center + b;
  out.coeffs = w * in.coeffs;
  const Vector in_mag = in.center.cwiseAbs() + in.coeffs.cwiseAbs().rowwise().sum() + in.err;
  const Vector magnitude = w_abs * in_mag + b.cwiseAbs();
  const auto ops = static_cast<int>(layer.weights.cols() + in.coeffs.cols()) + 3;
  const Scalar gamma = Scalar(2 * ops) * detail::unit_roundoff<Scalar>();
  out.err = w_abs * in.err + gamma * magnitude;
  for (Eigen::Index i = 0; i < out.err.size(); ++i) out.err[i] = detail::pad_up<Scalar>(out.err[i], ops);
  return out;
}

template <typename Scalar>
AffineVector<Scalar> relu_affine(const AffineVector<Scalar>& in, const std::vector<RangeResult>* known = nullptr) {
  AffineVector<Scalar> out = in;
  for (Eigen::Index i = 0; i < in.size(); ++i)
    out.set(i, relu_affine(in[i], known ? &(*known)[static_cast<std::size_t>(i)] : nullptr));
  return out;
}

/// Encloses the range over `box` of the network tail that starts at cell
/// layer `start_layer`: the entry map yields the pre-activations z of that
/// layer (the input itself for layer 0), then the layer's activation and all
/// remaining layers are applied. Computation runs in Scalar (float by
/// default) with outward error padding, so the result is always sound.
///
/// `entry_ranges`, when given, holds one sound range per entry pre-activation
/// over a region inside the box (for instance a cell polytope, where the
/// entry map is affine and its range is spanned by the vertices). The first
/// ReLU is relaxed over those ranges and the result encloses the range over
/// that region only.
template <typename Scalar = float>
RangeResult bound_over_box(const Network& net, int start_layer, const MatX& entry_weights, const VecX& entry_bias,
                           const Box& box, const std::vector<RangeResult>* entry_ranges = nullptr) {
  if (net.encoding) throw ShapeError("range analysis needs a network without sinusoidal encoding");
  if (entry_ranges && static_cast<Eigen::Index>(entry_ranges->size()) != entry_weights.rows())
    throw ShapeError("one entry range per entry row expected");
  AffineVector<Scalar> forms = affine_entry<Scalar>(entry_weights, entry_bias, box);
  if (start_layer >= 1 && net.layers[static_cast<std::size_t>(start_layer - 1)].activation == Activation::relu)
    forms = relu_affine(forms, entry_ranges);
  for (int l = start_layer; l < net.depth(); ++l) {
    const Layer& layer = net.layers[static_cast<std::size_t>(l)];
    forms = affine_layer(layer, forms);
    if (layer.activation == Activation::relu) forms = relu_affine(forms);
  }
  return forms[0].interval();
}

/// Convenience overload for the whole network over a box.
template <typename Scalar = float>
RangeResult bound_over_box(const Network& net, const Box& box) {
  const auto d = static_cast<Eigen::Index>(net.input_dim);
  return bound_over_box<Scalar>(net, 0, MatX::Identity(d, d), VecX::Zero(d), box);
}

}  // namespace mn
