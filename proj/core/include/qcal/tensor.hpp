#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace qcal {

enum class DType : std::uint32_t { F32 = 0, I32 = 1 };

std::string_view dtype_name(DType dtype);

using Shape = std::vector<std::size_t>;

// Product of dims; throws std::invalid_argument on an empty shape or a zero dim.
std::size_t element_count(std::span<const std::size_t> dims);

// Dense row-major array of F32 values or I32 codes. Immutable once built:
// every constructor validates dims against the payload and rejects
// non-finite F32 values.
class Tensor {
 public:
  static Tensor f32(Shape dims, std::vector<float> data);
  static Tensor i32(Shape dims, std::vector<std::int32_t> data);
  // Rounds each value to the nearest float.
  static Tensor from_f64(Shape dims, std::span<const double> data);

  DType dtype() const noexcept;
  const Shape& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept;

  // Throw std::logic_error when the dtype does not match.
  std::span<const float> f32_data() const;
  std::span<const std::int32_t> i32_data() const;

  // Widened copy of the payload (I32 codes convert exactly).
  std::vector<double> to_f64() const;

  // Bit-exact comparison of dtype, dims and payload bytes.
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  using Storage = std::variant<std::vector<float>, std::vector<std::int32_t>>;
  Tensor(Shape dims, Storage data);

  Shape dims_;
  Storage data_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Ordered (name, tensor) list. Names are unique; write_set/read_set enforce it
// and add() refuses duplicates up front.
struct NamedTensorSet {
  std::vector<NamedTensor> entries;

  void add(std::string name, Tensor tensor);
  const Tensor* find(std::string_view name) const;
  // Throws FormatError when the entry is missing.
  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
};

}  // namespace qcal
