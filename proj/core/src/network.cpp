#include "qcal/network.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "qcal/errors.hpp"

namespace qcal {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::None:
      return "none";
    case Activation::ReLU:
      return "relu";
    case Activation::GELU:
      return "gelu";
  }
  return "none";
}

Activation parse_activation(std::string_view name) {
  if (name == "none") return Activation::None;
  if (name == "relu") return Activation::ReLU;
  if (name == "gelu") return Activation::GELU;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

void LayerSnapshot::validate() const {
  if (w.empty()) throw std::invalid_argument("layer '" + name + "' has an empty weight");
  if (bias.size() != w.rows()) {
    throw std::invalid_argument("layer '" + name + "': bias length " + std::to_string(bias.size()) +
                                " != d_out " + std::to_string(w.rows()));
  }
  for (double v : w.values())
    if (!std::isfinite(v)) throw std::invalid_argument("layer '" + name + "' has non-finite weights");
  for (double v : bias)
    if (!std::isfinite(v)) throw std::invalid_argument("layer '" + name + "' has non-finite bias");
}

std::size_t Network::input_dim() const {
  if (layers.empty()) throw std::invalid_argument("network has no layers");
  return layers.front().linear.d_in();
}

std::size_t Network::output_dim() const {
  if (layers.empty()) throw std::invalid_argument("network has no layers");
  return layers.back().linear.d_out();
}

void Network::validate() const {
  if (layers.empty()) throw std::invalid_argument("network has no layers");
  std::set<std::string> names;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i].linear;
    l.validate();
    if (!names.insert(l.name).second) throw std::invalid_argument("duplicate layer name '" + l.name + "'");
    if (i > 0 && layers[i - 1].linear.d_out() != l.d_in()) {
      throw std::invalid_argument("layer '" + l.name + "' expects d_in " + std::to_string(l.d_in()) +
                                  " but the previous layer produces " +
                                  std::to_string(layers[i - 1].linear.d_out()));
    }
  }
}

Matrix linear_forward(const Matrix& w, const std::vector<double>& bias, const Matrix& x) {
  if (x.cols() != w.cols()) {
    throw std::invalid_argument("linear_forward: input has " + std::to_string(x.cols()) +
                                " features, layer expects " + std::to_string(w.cols()));
  }
  Matrix y = matmul_nt(x, w);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
  return y;
}

Matrix linear_forward(const LayerSnapshot& layer, const Matrix& x) {
  return linear_forward(layer.w, layer.bias, x);
}

Matrix apply_activation(Activation a, const Matrix& z) {
  if (a == Activation::None) return z;
  Matrix out = z;
  for (double& v : out.values()) {
    if (a == Activation::ReLU) {
      v = v > 0.0 ? v : 0.0;
    } else {
      v = 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2));
    }
  }
  return out;
}

Matrix activation_derivative(Activation a, const Matrix& z) {
  Matrix out(z.rows(), z.cols(), 1.0);
  if (a == Activation::None) return out;
  auto o = out.values();
  const auto zv = z.values();
  for (std::size_t i = 0; i < zv.size(); ++i) {
    const double v = zv[i];
    if (a == Activation::ReLU) {
      o[i] = v > 0.0 ? 1.0 : 0.0;
    } else {
      const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
      const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
      o[i] = cdf + v * pdf;
    }
  }
  return out;
}

Matrix forward(const Network& net, const Matrix& x) {
  Matrix h = x;
  for (const auto& layer : net.layers) h = apply_activation(layer.activation, linear_forward(layer.linear, h));
  return h;
}

Network network_from_set(const NamedTensorSet& set) {
  Network net;
  for (const auto& e : set.entries) {
    constexpr std::string_view suffix = ".w";
    if (e.name.size() <= suffix.size() || !e.name.ends_with(suffix)) continue;
    const std::string name = e.name.substr(0, e.name.size() - suffix.size());
    if (e.tensor.dtype() != DType::F32 || e.tensor.rank() != 2) {
      throw FormatError("'" + e.name + "' must be a rank-2 f32 tensor");
    }
    Layer layer;
    layer.linear.name = name;
    layer.linear.w = Matrix::from_tensor(e.tensor);
    const Tensor& b = set.at(name + ".b");
    if (b.dtype() != DType::F32 || b.rank() != 1 || b.dims()[0] != layer.linear.w.rows()) {
      throw FormatError("'" + name + ".b' must be an f32 vector of length " +
                        std::to_string(layer.linear.w.rows()));
    }
    layer.linear.bias = b.to_f64();
    if (const Tensor* act = set.find(name + ".act")) {
      if (act->dtype() != DType::I32 || act->size() != 1 || act->i32_data()[0] < 0 ||
          act->i32_data()[0] > 2) {
        throw FormatError("'" + name + ".act' must be a single i32 code in {0, 1, 2}");
      }
      layer.activation = static_cast<Activation>(act->i32_data()[0]);
    }
    net.layers.push_back(std::move(layer));
  }
  if (net.layers.empty()) throw FormatError("model container has no '<layer>.w' entries");
  try {
    net.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid model: ") + e.what());
  }
  return net;
}

NamedTensorSet network_to_set(const Network& net) {
  NamedTensorSet set;
  for (const auto& layer : net.layers) {
    const auto& l = layer.linear;
    set.add(l.name + ".w", l.w.to_tensor());
    set.add(l.name + ".b", Tensor::from_f64({l.bias.size()}, l.bias));
    set.add(l.name + ".act", Tensor::i32({1}, {static_cast<std::int32_t>(layer.activation)}));
  }
  return set;
}

}  // namespace qcal
