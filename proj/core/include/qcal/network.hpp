#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qcal/matrix.hpp"
#include "qcal/tensor.hpp"

namespace qcal {

enum class Activation { None = 0, ReLU = 1, GELU = 2 };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

// Affine layer f(x) = x w^T + bias with w of shape d_out x d_in.
struct LayerSnapshot {
  std::string name;
  Matrix w;
  std::vector<double> bias;

  std::size_t d_in() const noexcept { return w.cols(); }
  std::size_t d_out() const noexcept { return w.rows(); }
  // w non-empty, bias length == d_out, finite values.
  void validate() const;
};

struct Layer {
  LayerSnapshot linear;
  Activation activation = Activation::None;
};

// Ordered stack of linear layers, each followed by its nonlinearity.
struct Network {
  std::vector<Layer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  // Unique names, chained dims.
  void validate() const;
};

// x w^T + bias; x is n x d_in.
Matrix linear_forward(const LayerSnapshot& layer, const Matrix& x);
// x w^T + bias with an explicit weight (used when w has been fake-quantized).
Matrix linear_forward(const Matrix& w, const std::vector<double>& bias, const Matrix& x);

Matrix apply_activation(Activation a, const Matrix& z);
// Elementwise derivative of the activation evaluated at the pre-activation z.
Matrix activation_derivative(Activation a, const Matrix& z);

Matrix forward(const Network& net, const Matrix& x);

// Model file convention inside a QTS container: for each layer in order,
// "<name>.w" (d_out x d_in f32), "<name>.b" (d_out f32) and optionally
// "<name>.act" (scalar i32: 0 none, 1 relu, 2 gelu). Other entries are ignored
// by network_from_set.
Network network_from_set(const NamedTensorSet& set);
NamedTensorSet network_to_set(const Network& net);

}  // namespace qcal
