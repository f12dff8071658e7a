#include "qcal/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "qcal/errors.hpp"

namespace qcal {

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::F32:
      return "f32";
    case DType::I32:
      return "i32";
  }
  return "unknown";
}

std::size_t element_count(std::span<const std::size_t> dims) {
  if (dims.empty()) throw std::invalid_argument("tensor dims must be non-empty");
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw std::invalid_argument("tensor dims must all be >= 1");
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape dims, Storage data) : dims_(std::move(dims)), data_(std::move(data)) {
  const std::size_t n = element_count(dims_);
  const std::size_t have = std::visit([](const auto& v) { return v.size(); }, data_);
  if (n != have) {
    throw std::invalid_argument("tensor payload has " + std::to_string(have) +
                                " elements but dims imply " + std::to_string(n));
  }
  if (const auto* f = std::get_if<std::vector<float>>(&data_)) {
    for (float v : *f) {
      if (!std::isfinite(v)) throw std::invalid_argument("tensor contains a non-finite value");
    }
  }
}

Tensor Tensor::f32(Shape dims, std::vector<float> data) {
  return Tensor(std::move(dims), Storage(std::move(data)));
}

Tensor Tensor::i32(Shape dims, std::vector<std::int32_t> data) {
  return Tensor(std::move(dims), Storage(std::move(data)));
}

Tensor Tensor::from_f64(Shape dims, std::span<const double> data) {
  std::vector<float> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = static_cast<float>(data[i]);
  return f32(std::move(dims), std::move(out));
}

DType Tensor::dtype() const noexcept {
  return std::holds_alternative<std::vector<float>>(data_) ? DType::F32 : DType::I32;
}

std::size_t Tensor::size() const noexcept {
  return std::visit([](const auto& v) { return v.size(); }, data_);
}

std::span<const float> Tensor::f32_data() const {
  if (const auto* f = std::get_if<std::vector<float>>(&data_)) return *f;
  throw std::logic_error("tensor dtype is i32, not f32");
}

std::span<const std::int32_t> Tensor::i32_data() const {
  if (const auto* q = std::get_if<std::vector<std::int32_t>>(&data_)) return *q;
  throw std::logic_error("tensor dtype is f32, not i32");
}

std::vector<double> Tensor::to_f64() const {
  return std::visit(
      [](const auto& v) {
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]);
        return out;
      },
      data_);
}

bool operator==(const Tensor& a, const Tensor& b) {
  if (a.dtype() != b.dtype() || a.dims_ != b.dims_) return false;
  if (a.dtype() == DType::I32) return a.i32_data().size() == b.i32_data().size() &&
                                      std::memcmp(a.i32_data().data(), b.i32_data().data(),
                                                  a.size() * sizeof(std::int32_t)) == 0;
  const auto fa = a.f32_data();
  const auto fb = b.f32_data();
  for (std::size_t i = 0; i < fa.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(fa[i]) != std::bit_cast<std::uint32_t>(fb[i])) return false;
  }
  return true;
}

void NamedTensorSet::add(std::string name, Tensor tensor) {
  if (contains(name)) throw std::invalid_argument("duplicate tensor name '" + name + "'");
  entries.push_back({std::move(name), std::move(tensor)});
}

const Tensor* NamedTensorSet::find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e.tensor;
  }
  return nullptr;
}

const Tensor& NamedTensorSet::at(std::string_view name) const {
  if (const Tensor* t = find(name)) return *t;
  throw FormatError("missing tensor entry '" + std::string(name) + "'");
}

}  // namespace qcal
