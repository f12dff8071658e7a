#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "qcal/tensor.hpp"

namespace qcal {

// QTF1 file:  "QTF1" | u32 version=1 | u32 dtype | u32 ndim | u64 dim... | payload
// QTS1 file:  "QTS1" | u32 count | { u32 name_len | name | u32 version | u32 dtype
//                                    | u32 ndim | u64 dim... | payload }...
// Every integer and payload element is little-endian.
inline constexpr std::uint32_t kFormatVersion = 1;

// Bytes of a tensor record (version through payload, no magic).
std::size_t record_size(const Tensor& t);
std::string encode_record(const Tensor& t);

// Full QTF1 image of a tensor; what write_tensor puts on disk.
std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(std::string_view bytes);

std::string encode_set(const NamedTensorSet& set);
NamedTensorSet decode_set(std::string_view bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

void write_set(const std::filesystem::path& path, const NamedTensorSet& set);
NamedTensorSet read_set(const std::filesystem::path& path);

// Whole-file helpers shared with the CLI.
std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace qcal
