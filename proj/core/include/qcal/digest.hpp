#pragma once

#include <string>
#include <string_view>

#include "qcal/tensor.hpp"

namespace qcal {

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

// SHA-256 of the tensor's QTF1 encoding, so a digest recorded in a report can
// be checked against a saved .qtf file directly.
std::string tensor_digest(const Tensor& t);

}  // namespace qcal
