#pragma once

#include "mn/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mn {

enum class Activation { relu, linear };

/// One dense layer: z = W a + b, followed by the activation.
struct Layer {
  MatX weights;  // n_out x n_in
  VecX bias;     // n_out
  Activation activation = Activation::relu;

  [[nodiscard]] Eigen::Index inputs() const { return weights.cols(); }
  [[nodiscard]] Eigen::Index outputs() const { return weights.rows(); }
};

/// Sinusoidal input features [x_j, sin(w_1 x_j), cos(w_1 x_j), ...] for every
/// input coordinate j, in that order. Networks carrying an encoding must be
/// converted with `with_pwl_encoding` before extraction.
struct PositionalEncoding {
  std::vector<double> freqs;  // angular frequencies

  [[nodiscard]] int features_per_coordinate() const { return 1 + 2 * static_cast<int>(freqs.size()); }
};

/// A ReLU MLP f: R^d -> R over an axis-aligned box domain.
/// Immutable after construction; safe to share across threads.
struct Network {
  int input_dim = 0;
  std::vector<Layer> layers;
  Box domain;
  std::optional<PositionalEncoding> encoding;

  /// Width of the vector fed to layers[0].
  [[nodiscard]] int first_layer_inputs() const;
  [[nodiscard]] int depth() const { return static_cast<int>(layers.size()); }
  [[nodiscard]] int hidden_neuron_count() const;
  [[nodiscard]] std::size_t parameter_count() const;

  /// Throws ShapeError / UnsupportedActivation when the invariants do not hold.
  void validate() const;
};

Box default_domain(int input_dim);

Network parse_network(const nlohmann::json& j);
Network load_network(const std::filesystem::path& path);
nlohmann::json network_to_json(const Network& net);
void save_network(const Network& net, const std::filesystem::path& path);

/// Applies the positional encoding (true sinusoids) if present.
VecX encode_input(const Network& net, const Eigen::Ref<const VecX>& x);

/// Forward pass in 64-bit arithmetic. Every dot product is accumulated left to
/// right followed by the bias, so results are reproducible bit for bit.
double eval(const Network& net, const Eigen::Ref<const VecX>& x);

/// Column-wise `eval` over a d x n point matrix.
VecX eval_batch(const Network& net, const MatX& points);

/// Continuous piecewise-linear function through (knots[i], values[i]),
/// extended linearly outside [knots.front(), knots.back()].
class PwlSurrogate1D {
 public:
  PwlSurrogate1D(std::vector<double> knots, std::vector<double> values);

  [[nodiscard]] double operator()(double x) const;
  [[nodiscard]] const std::vector<double>& knots() const { return knots_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] double slope_left() const { return slopes_.front(); }
  [[nodiscard]] double slope_right() const { return slopes_.back(); }
  [[nodiscard]] double slope(std::size_t segment) const { return slopes_[segment]; }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

enum class Wave { sine, cosine };

/// Interpolating surrogate of sin(omega x) or cos(omega x) on [lo, hi].
/// Knots sit at crest-aligned phases (phase + 2 pi k / knots_per_period, with
/// phase pi/2 for the sine and 0 for the cosine), so peaks are reproduced
/// exactly; one extra knot is kept beyond each end of the interval.
PwlSurrogate1D make_wave_surrogate(Wave wave, double omega, int knots_per_period, double lo, double hi);

/// Builds two layers computing the surrogate encoding of every input
/// coordinate: a ReLU hinge layer followed by a linear combination layer.
/// With no frequencies the pair reproduces x exactly.
std::vector<Layer> pe_to_relu_layers(const std::vector<double>& freqs, int knots_per_period, int input_dim,
                                     const Box& domain);

/// Prepends a layer list whose last layer is linear by folding that layer into
/// the first layer of `net`. The result has no encoding.
Network prepend_layers(const std::vector<Layer>& prefix, const Network& net);

/// Replaces the sinusoidal encoding of `net` by its piecewise-linear surrogate.
Network with_pwl_encoding(const Network& net, int knots_per_period);

}  // namespace mn
