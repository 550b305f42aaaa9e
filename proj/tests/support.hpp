#pragma once

#include "mn/network.hpp"

#include <random>
#include <string>

namespace mn::test {

inline std::string fixture(const std::string& name) { return std::string(MN_FIXTURE_DIR) + "/" + name; }

inline Network load_fixture(const std::string& name) { return load_network(fixture(name)); }

/// Uniform point in the box.
inline VecX uniform_in(const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VecX p(box.dim());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * u(rng);
  return p;
}

/// Random sub-box of `outer` with side lengths up to `max_frac` of the outer sides.
inline Box random_box(const Box& outer, std::mt19937_64& rng, double max_frac = 0.5) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Box b{outer.lo, outer.hi};
  for (Eigen::Index i = 0; i < outer.dim(); ++i) {
    const double len = (outer.hi[i] - outer.lo[i]) * max_frac * (0.01 + 0.99 * u(rng));
    const double start = outer.lo[i] + (outer.hi[i] - outer.lo[i] - len) * u(rng);
    b.lo[i] = start;
    b.hi[i] = start + len;
  }
  return b;
}

/// Random ReLU network with the given hidden widths and a linear scalar output.
inline Network random_network(int input_dim, const std::vector<int>& widths, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Network net;
  net.input_dim = input_dim;
  net.domain = default_domain(input_dim);
  int prev = input_dim;
  std::vector<int> outs = widths;
  outs.push_back(1);
  for (std::size_t l = 0; l < outs.size(); ++l) {
    Layer layer;
    layer.weights = MatX::NullaryExpr(outs[l], prev, [&] { return g(rng) / std::sqrt(prev); });
    layer.bias = VecX::NullaryExpr(outs[l], [&] { return 0.3 * g(rng); });
    layer.activation = l + 1 == outs.size() ? Activation::linear : Activation::relu;
    net.layers.push_back(layer);
    prev = outs[l];
  }
  return net;
}

}  // namespace mn::test
