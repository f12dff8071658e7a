#include "qcal/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>

#include "qcal/errors.hpp"

namespace qcal {
namespace {

constexpr std::string_view kTensorMagic = "QTF1";
constexpr std::string_view kSetMagic = "QTS1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

// Bounds-checked little-endian reader over a byte buffer.
class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::string_view take(std::size_t n, const char* what) {
    if (n > remaining()) {
      throw FormatError(std::string("truncated data while reading ") + what + ": need " +
                        std::to_string(n) + " bytes, have " + std::to_string(remaining()));
    }
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32(const char* what) {
    const auto s = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[i]);
    return v;
  }

  std::uint64_t u64(const char* what) {
    const auto s = take(8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[i]);
    return v;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

Tensor read_record(Reader& in) {
  const std::uint32_t version = in.u32("version");
  if (version != kFormatVersion) {
    throw FormatError("unsupported tensor record version " + std::to_string(version));
  }
  const std::uint32_t dtype = in.u32("dtype");
  if (dtype > static_cast<std::uint32_t>(DType::I32)) {
    throw FormatError("unknown dtype code " + std::to_string(dtype));
  }
  const std::uint32_t ndim = in.u32("ndim");
  if (ndim == 0) throw FormatError("tensor record declares ndim = 0");
  Shape dims(ndim);
  std::uint64_t count = 1;
  for (auto& d : dims) {
    const std::uint64_t v = in.u64("dims");
    if (v == 0) throw FormatError("tensor record declares a zero dimension");
    if (count > std::numeric_limits<std::uint64_t>::max() / v) {
      throw FormatError("tensor dims overflow");
    }
    count *= v;
    d = static_cast<std::size_t>(v);
  }
  if (count > in.remaining() / 4) {
    throw FormatError("truncated payload: dims imply " + std::to_string(count * 4) +
                      " bytes, have " + std::to_string(in.remaining()));
  }
  const auto payload = in.take(static_cast<std::size_t>(count) * 4, "payload");
  auto word = [&](std::size_t i) {
    std::uint32_t v = 0;
    for (int b = 3; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(payload[4 * i + b]);
    return v;
  };
  if (static_cast<DType>(dtype) == DType::F32) {
    std::vector<float> data(count);
    for (std::size_t i = 0; i < data.size(); ++i) {
      data[i] = std::bit_cast<float>(word(i));
      if (!std::isfinite(data[i])) {
        throw FormatError("non-finite f32 value at element " + std::to_string(i));
      }
    }
    return Tensor::f32(std::move(dims), std::move(data));
  }
  std::vector<std::int32_t> data(count);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::bit_cast<std::int32_t>(word(i));
  return Tensor::i32(std::move(dims), std::move(data));
}

void check_magic(Reader& in, std::string_view magic) {
  const auto got = in.take(magic.size(), "magic");
  if (got != magic) {
    throw FormatError("bad magic: expected '" + std::string(magic) + "'");
  }
}

void check_unique(const NamedTensorSet& set) {
  std::set<std::string_view> seen;
  for (const auto& e : set.entries) {
    if (!seen.insert(e.name).second) throw FormatError("duplicate tensor name '" + e.name + "'");
  }
}

}  // namespace

std::size_t record_size(const Tensor& t) {
  return 4 + 4 + 4 + 8 * t.rank() + 4 * t.size();
}

std::string encode_record(const Tensor& t) {
  std::string out;
  out.reserve(record_size(t));
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(t.dtype()));
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.dims()) put_u64(out, d);
  if (t.dtype() == DType::F32) {
    for (float v : t.f32_data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  } else {
    for (std::int32_t v : t.i32_data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::string encode_tensor(const Tensor& t) {
  std::string out(kTensorMagic);
  out += encode_record(t);
  return out;
}

Tensor decode_tensor(std::string_view bytes) {
  Reader in(bytes);
  check_magic(in, kTensorMagic);
  Tensor t = read_record(in);
  if (in.remaining() != 0) {
    throw FormatError(std::to_string(in.remaining()) + " trailing bytes after tensor payload");
  }
  return t;
}

std::string encode_set(const NamedTensorSet& set) {
  check_unique(set);
  std::string out(kSetMagic);
  put_u32(out, static_cast<std::uint32_t>(set.entries.size()));
  for (const auto& e : set.entries) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    out += encode_record(e.tensor);
  }
  return out;
}

NamedTensorSet decode_set(std::string_view bytes) {
  Reader in(bytes);
  check_magic(in, kSetMagic);
  const std::uint32_t count = in.u32("entry count");
  NamedTensorSet set;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = in.u32("name length");
    std::string name(in.take(len, "name"));
    if (set.contains(name)) throw FormatError("duplicate tensor name '" + name + "'");
    try {
      set.entries.push_back({std::move(name), read_record(in)});
    } catch (const FormatError& e) {
      throw FormatError("malformed entry " + std::to_string(i) + ": " + e.what());
    }
  }
  if (in.remaining() != 0) {
    throw FormatError(std::to_string(in.remaining()) + " trailing bytes after last entry");
  }
  return set;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw FormatError("read failure on '" + path.string() + "'");
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw FormatError("write failure on '" + path.string() + "'");
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file_bytes(path, encode_tensor(t));
}

Tensor read_tensor(const std::filesystem::path& path) {
  return decode_tensor(read_file_bytes(path));
}

void write_set(const std::filesystem::path& path, const NamedTensorSet& set) {
  write_file_bytes(path, encode_set(set));
}

NamedTensorSet read_set(const std::filesystem::path& path) {
  return decode_set(read_file_bytes(path));
}

}  // namespace qcal
