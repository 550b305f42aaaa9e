#include "mn/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mn {

namespace {

std::string layer_tag(std::size_t index) { return "layer " + std::to_string(index); }

Activation parse_activation(const nlohmann::json& j, std::size_t index) {
  if (!j.is_string()) throw ParseError(layer_tag(index) + ": activation must be a string");
  const auto name = j.get<std::string>();
  if (name == "relu") return Activation::relu;
  if (name == "linear") return Activation::linear;
  throw UnsupportedActivation(layer_tag(index) + ": unsupported activation '" + name + "'");
}

VecX parse_vector(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array");
  VecX v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(what + " must contain numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  if (!v.allFinite()) throw ParseError(what + " contains non-finite values");
  return v;
}

MatX parse_matrix(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ParseError(what + " must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  MatX m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const VecX row = parse_vector(j[static_cast<std::size_t>(r)], what + " row " + std::to_string(r));
    if (cols < 0) {
      cols = row.size();
      m.resize(rows, cols);
    } else if (row.size() != cols) {
      throw ShapeError(what + ": ragged rows");
    }
    m.row(r) = row.transpose();
  }
  return m;
}

nlohmann::json vector_to_json(const VecX& v) {
  auto j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

// Left-to-right dot product plus bias; the order matters for reproducibility.
void apply_layer(const Layer& layer, const VecX& in, VecX& out) {
  const Eigen::Index rows = layer.weights.rows();
  const Eigen::Index cols = layer.weights.cols();
  out.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < cols; ++k) s += layer.weights(i, k) * in[k];
    s += layer.bias[i];
    if (layer.activation == Activation::relu) s = s > 0.0 ? s : 0.0;
    out[i] = s;
  }
}

}  // namespace

int Network::first_layer_inputs() const {
  return encoding ? input_dim * encoding->features_per_coordinate() : input_dim;
}

int Network::hidden_neuron_count() const {
  int n = 0;
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) n += static_cast<int>(layers[i].outputs());
  return n;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

void Network::validate() const {
  if (input_dim != 2 && input_dim != 3) throw ShapeError("input_dim must be 2 or 3");
  if (layers.empty()) throw ShapeError("network has no layers");
  if (domain.lo.size() != input_dim || domain.hi.size() != input_dim)
    throw ShapeError("domain dimension does not match input_dim");
  if (!(domain.lo.array() < domain.hi.array()).all()) throw ShapeError("domain requires lo < hi componentwise");
  Eigen::Index expected = first_layer_inputs();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weights.rows() != l.bias.size())
      throw ShapeError(layer_tag(i) + ": weight rows (" + std::to_string(l.weights.rows()) +
                       ") differ from bias length (" + std::to_string(l.bias.size()) + ")");
    if (l.weights.cols() != expected)
      throw ShapeError(layer_tag(i) + ": expects " + std::to_string(l.weights.cols()) + " inputs, previous layer gives " +
                       std::to_string(expected));
    if (i + 1 < layers.size() && l.activation != Activation::relu)
      throw UnsupportedActivation(layer_tag(i) + ": hidden layers must use relu");
    expected = l.weights.rows();
  }
  if (expected != 1) throw ShapeError(layer_tag(layers.size() - 1) + ": final layer must have one output");
}

Box default_domain(int input_dim) {
  return Box{VecX::Constant(input_dim, -0.95), VecX::Constant(input_dim, 0.95)};
}

Network parse_network(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("network file must be a JSON object");
  Network net;
  if (!j.contains("input_dim") || !j["input_dim"].is_number_integer()) throw ParseError("missing integer input_dim");
  net.input_dim = j["input_dim"].get<int>();
  if (net.input_dim != 2 && net.input_dim != 3) throw ShapeError("input_dim must be 2 or 3");

  if (j.contains("domain")) {
    const auto& d = j["domain"];
    if (!d.is_object() || !d.contains("lo") || !d.contains("hi")) throw ParseError("domain needs lo and hi");
    net.domain = Box{parse_vector(d["lo"], "domain.lo"), parse_vector(d["hi"], "domain.hi")};
  } else {
    net.domain = default_domain(net.input_dim);
  }

  if (j.contains("encoding")) {
    const auto& e = j["encoding"];
    if (!e.is_object() || e.value("type", "") != "positional" || !e.contains("freqs"))
      throw ParseError("encoding must be {\"type\": \"positional\", \"freqs\": [...]}");
    const VecX f = parse_vector(e["freqs"], "encoding.freqs");
    net.encoding = PositionalEncoding{std::vector<double>(f.data(), f.data() + f.size())};
  }

  if (!j.contains("layers") || !j["layers"].is_array()) throw ParseError("missing layers array");
  const auto& layers = j["layers"];
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (!l.is_object() || !l.contains("weights") || !l.contains("bias") || !l.contains("activation"))
      throw ParseError(layer_tag(i) + ": needs weights, bias and activation");
    Layer layer;
    layer.activation = parse_activation(l["activation"], i);
    layer.weights = parse_matrix(l["weights"], layer_tag(i) + " weights");
    layer.bias = parse_vector(l["bias"], layer_tag(i) + " bias");
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open network file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_network(j);
}

nlohmann::json network_to_json(const Network& net) {
  nlohmann::json j;
  j["input_dim"] = net.input_dim;
  j["domain"] = {{"lo", vector_to_json(net.domain.lo)}, {"hi", vector_to_json(net.domain.hi)}};
  if (net.encoding) j["encoding"] = {{"type", "positional"}, {"freqs", net.encoding->freqs}};
  auto layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) rows.push_back(vector_to_json(l.weights.row(r).transpose()));
    layers.push_back({{"weights", rows},
                      {"bias", vector_to_json(l.bias)},
                      {"activation", l.activation == Activation::relu ? "relu" : "linear"}});
  }
  j["layers"] = layers;
  return j;
}

void save_network(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << network_to_json(net).dump(1) << '\n';
}

VecX encode_input(const Network& net, const Eigen::Ref<const VecX>& x) {
  if (!net.encoding) return x;
  const int per = net.encoding->features_per_coordinate();
  VecX out(net.input_dim * per);
  for (int j = 0; j < net.input_dim; ++j) {
    out[j * per] = x[j];
    for (std::size_t f = 0; f < net.encoding->freqs.size(); ++f) {
      const double w = net.encoding->freqs[f];
      out[j * per + 1 + 2 * static_cast<int>(f)] = std::sin(w * x[j]);
      out[j * per + 2 + 2 * static_cast<int>(f)] = std::cos(w * x[j]);
    }
  }
  return out;
}

double eval(const Network& net, const Eigen::Ref<const VecX>& x) {
  VecX a = encode_input(net, x);
  VecX z;
  for (const auto& layer : net.layers) {
    apply_layer(layer, a, z);
    a.swap(z);
  }
  return a[0];
}

VecX eval_batch(const Network& net, const MatX& points) {
  VecX out(points.cols());
  for (Eigen::Index i = 0; i < points.cols(); ++i) out[i] = eval(net, points.col(i));
  return out;
}

PwlSurrogate1D::PwlSurrogate1D(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() < 2 || knots_.size() != values_.size())
    throw ShapeError("piecewise-linear surrogate needs at least two knots with matching values");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i]) || !std::isfinite(values_[i])) throw ShapeError("surrogate knots must be finite");
    if (i > 0 && !(knots_[i] > knots_[i - 1])) throw ShapeError("surrogate knots must be strictly increasing");
  }
  slopes_.resize(knots_.size() - 1);
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
    slopes_[i] = (values_[i + 1] - values_[i]) / (knots_[i + 1] - knots_[i]);
}

double PwlSurrogate1D::operator()(double x) const {
  if (x <= knots_.front()) return values_.front() + (x - knots_.front()) * slopes_.front();
  if (x >= knots_.back()) return values_.back() + (x - knots_.back()) * slopes_.back();
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const auto seg = static_cast<std::size_t>(it - knots_.begin()) - 1;
  return values_[seg] + (x - knots_[seg]) * slopes_[seg];
}

PwlSurrogate1D make_wave_surrogate(Wave wave, double omega, int knots_per_period, double lo, double hi) {
  if (knots_per_period < 3) throw ShapeError("knots_per_period must be at least 3");
  if (!(omega > 0.0)) throw ShapeError("frequencies must be positive");
  const double period = 2.0 * std::numbers::pi / omega;
  const double offset = wave == Wave::sine ? 0.25 : 0.0;  // fraction of a period
  const double k = knots_per_period;
  const auto knot_at = [&](long i) { return period * (offset + static_cast<double>(i) / k); };

  const auto first_inside = static_cast<long>(std::ceil((lo / period - offset) * k));
  const auto last_inside = static_cast<long>(std::floor((hi / period - offset) * k));
  if (last_inside - first_inside + 1 < 2)
    throw ShapeError("domain spans fewer than two surrogate knots; increase knots_per_period");

  // One knot beyond each end keeps the whole interval interpolated.
  std::vector<double> knots;
  std::vector<double> values;
  for (long i = first_inside - 1; i <= last_inside + 1; ++i) {
    const double t = knot_at(i);
    knots.push_back(t);
    values.push_back(wave == Wave::sine ? std::sin(omega * t) : std::cos(omega * t));
  }
  return PwlSurrogate1D(std::move(knots), std::move(values));
}

std::vector<Layer> pe_to_relu_layers(const std::vector<double>& freqs, int knots_per_period, int input_dim,
                                     const Box& domain) {
  if (knots_per_period < 3) throw ShapeError("knots_per_period must be at least 3");
  if (domain.dim() != input_dim) throw ShapeError("domain dimension does not match input_dim");

  // Per coordinate: [relu(x), relu(-x)] followed by the interior hinges of every wave.
  struct Piece {
    int coordinate;
    PwlSurrogate1D pwl;
  };
  std::vector<std::vector<Piece>> pieces(static_cast<std::size_t>(input_dim));
  int hidden = 0;
  for (int j = 0; j < input_dim; ++j) {
    hidden += 2;
    for (double w : freqs) {
      for (Wave wave : {Wave::sine, Wave::cosine}) {
        auto pwl = make_wave_surrogate(wave, w, knots_per_period, domain.lo[j], domain.hi[j]);
        hidden += static_cast<int>(pwl.knots().size()) - 2;
        pieces[static_cast<std::size_t>(j)].push_back(Piece{j, std::move(pwl)});
      }
    }
  }
  const int per = 1 + 2 * static_cast<int>(freqs.size());

  Layer hinge{MatX::Zero(hidden, input_dim), VecX::Zero(hidden), Activation::relu};
  Layer combine{MatX::Zero(input_dim * per, hidden), VecX::Zero(input_dim * per), Activation::linear};

  int row = 0;
  for (int j = 0; j < input_dim; ++j) {
    const int pos = row, neg = row + 1;
    hinge.weights(pos, j) = 1.0;
    hinge.weights(neg, j) = -1.0;
    row += 2;
    combine.weights(j * per, pos) = 1.0;
    combine.weights(j * per, neg) = -1.0;

    int feature = j * per + 1;
    for (const auto& piece : pieces[static_cast<std::size_t>(j)]) {
      const auto& pwl = piece.pwl;
      // g(x) = (v0 - s0 k0) + s0 x + sum_i (s_i - s_{i-1}) relu(x - k_i)
      const double s0 = pwl.slope(0);
      combine.bias[feature] = pwl.values().front() - s0 * pwl.knots().front();
      combine.weights(feature, pos) = s0;
      combine.weights(feature, neg) = -s0;
      for (std::size_t i = 1; i + 1 < pwl.knots().size(); ++i) {
        hinge.weights(row, j) = 1.0;
        hinge.bias[row] = -pwl.knots()[i];
        combine.weights(feature, row) = pwl.slope(i) - pwl.slope(i - 1);
        ++row;
      }
      ++feature;
    }
  }
  return {std::move(hinge), std::move(combine)};
}

Network prepend_layers(const std::vector<Layer>& prefix, const Network& net) {
  if (prefix.empty()) throw ShapeError("empty prefix");
  const Layer& tail = prefix.back();
  if (tail.activation != Activation::linear) throw ShapeError("prefix must end with a linear layer");
  const Layer& first = net.layers.front();
  if (tail.outputs() != first.inputs())
    throw ShapeError("prefix produces " + std::to_string(tail.outputs()) + " features, network expects " +
                     std::to_string(first.inputs()));

  Network out;
  out.input_dim = static_cast<int>(prefix.front().inputs());
  out.domain = net.domain;
  out.layers.assign(prefix.begin(), prefix.end() - 1);
  out.layers.push_back(Layer{first.weights * tail.weights, first.weights * tail.bias + first.bias, first.activation});
  out.layers.insert(out.layers.end(), net.layers.begin() + 1, net.layers.end());
  out.validate();
  return out;
}

Network with_pwl_encoding(const Network& net, int knots_per_period) {
  if (!net.encoding) return net;
  auto prefix = pe_to_relu_layers(net.encoding->freqs, knots_per_period, net.input_dim, net.domain);
  return prepend_layers(prefix, net);
}

}  // namespace mn
