#include <gtest/gtest.h>

#include <cstring>
#include <limits>
#include <random>

#include "qcal/errors.hpp"
#include "qcal/tensor_io.hpp"
#include "support/oracles.hpp"

using namespace qcal;

namespace {

// Little-endian writer kept independent of the library encoder.
struct Bytes {
  std::string s;
  Bytes& raw(std::string_view v) {
    s += v;
    return *this;
  }
  Bytes& u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    return *this;
  }
  Bytes& u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    return *this;
  }
  Bytes& f32(float f) {
    std::uint32_t b;
    std::memcpy(&b, &f, 4);
    return u32(b);
  }
};

Tensor random_tensor(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> rank_d(1, 4), dim_d(1, 6), kind(0, 1);
  Shape dims(static_cast<std::size_t>(rank_d(gen)));
  for (auto& d : dims) d = static_cast<std::size_t>(dim_d(gen));
  const std::size_t n = element_count(dims);
  if (kind(gen) == 0) {
    std::uniform_int_distribution<std::uint32_t> bits;
    std::vector<float> v(n);
    for (auto& x : v) {
      do {
        const std::uint32_t b = bits(gen);
        std::memcpy(&x, &b, 4);
      } while (!std::isfinite(x));
    }
    return Tensor::f32(dims, v);
  }
  std::uniform_int_distribution<std::int32_t> vals(std::numeric_limits<std::int32_t>::min(),
                                                   std::numeric_limits<std::int32_t>::max());
  std::vector<std::int32_t> v(n);
  for (auto& x : v) x = vals(gen);
  return Tensor::i32(dims, v);
}

}  // namespace

TEST(TensorIo, EncodesDocumentedLayout) {
  const Tensor t = Tensor::f32({2, 1}, {1.5f, -2.0f});
  const std::string expected = Bytes{}.raw("QTF1").u32(1).u32(0).u32(2).u64(2).u64(1).f32(1.5f).f32(-2.0f).s;
  EXPECT_EQ(encode_tensor(t), expected);
  EXPECT_EQ(record_size(t), expected.size() - 4);
}

TEST(TensorIo, SetLayoutPrefixesNames) {
  NamedTensorSet set;
  set.add("ab", Tensor::i32({1}, {-1}));
  const std::string expected = Bytes{}.raw("QTS1").u32(1).u32(2).raw("ab").u32(1).u32(1).u32(1).u64(1).u32(0xFFFFFFFFu).s;
  EXPECT_EQ(encode_set(set), expected);
}

TEST(TensorIo, RoundTripIsBitExact) {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 50; ++i) {
    const Tensor t = random_tensor(gen);
    EXPECT_EQ(decode_tensor(encode_tensor(t)), t);
  }
}

TEST(TensorIo, NegativeZeroSurvives) {
  const Tensor t = Tensor::f32({2}, {-0.0f, 0.0f});
  const Tensor back = decode_tensor(encode_tensor(t));
  EXPECT_TRUE(std::signbit(back.f32_data()[0]));
  EXPECT_FALSE(std::signbit(back.f32_data()[1]));
}

TEST(TensorIo, RejectsMalformedInput) {
  const std::string good = encode_tensor(Tensor::f32({2}, {1.0f, 2.0f}));
  EXPECT_THROW(decode_tensor("QTF2" + good.substr(4)), FormatError);
  EXPECT_THROW(decode_tensor(good.substr(0, good.size() - 1)), FormatError);
  EXPECT_THROW(decode_tensor(good + "x"), FormatError);
  EXPECT_THROW(decode_tensor(""), FormatError);
  EXPECT_THROW(decode_tensor(Bytes{}.raw("QTF1").u32(2).u32(0).u32(1).u64(1).f32(1).s), FormatError);
  EXPECT_THROW(decode_tensor(Bytes{}.raw("QTF1").u32(1).u32(7).u32(1).u64(1).u32(0).s), FormatError);
  EXPECT_THROW(decode_tensor(Bytes{}.raw("QTF1").u32(1).u32(0).u32(0).s), FormatError);
  EXPECT_THROW(decode_tensor(Bytes{}.raw("QTF1").u32(1).u32(0).u32(1).u64(0).s), FormatError);
  EXPECT_THROW(decode_tensor(Bytes{}.raw("QTF1").u32(1).u32(0).u32(1).u64(1).f32(std::numeric_limits<float>::quiet_NaN()).s),
               FormatError);
  EXPECT_THROW(decode_tensor(Bytes{}.raw("QTF1").u32(1).u32(0).u32(2).u64(1ULL << 62).u64(1ULL << 62).s), FormatError);
}

TEST(TensorIo, TensorConstructionValidates) {
  EXPECT_THROW(Tensor::f32({2, 2}, {1.0f}), std::invalid_argument);
  EXPECT_THROW(Tensor::f32({}, {}), std::invalid_argument);
  EXPECT_THROW(Tensor::f32({0}, {}), std::invalid_argument);
  EXPECT_THROW(Tensor::f32({1}, {std::numeric_limits<float>::infinity()}), std::invalid_argument);
  const Tensor t = Tensor::i32({1}, {3});
  EXPECT_THROW(t.f32_data(), std::logic_error);
}

TEST(TensorIo, SetRoundTripPreservesOrder) {
  std::mt19937_64 gen(11);
  NamedTensorSet set;
  for (const char* name : {"zeta", "alpha", "mid.w", "mid.b"}) set.add(name, random_tensor(gen));
  const NamedTensorSet back = decode_set(encode_set(set));
  ASSERT_EQ(back.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(back.entries[i].name, set.entries[i].name);
    EXPECT_EQ(back.entries[i].tensor, set.entries[i].tensor);
  }
}

TEST(TensorIo, SetRejectsDuplicatesAndGarbage) {
  NamedTensorSet set;
  set.add("a", Tensor::i32({1}, {1}));
  EXPECT_THROW(set.add("a", Tensor::i32({1}, {2})), std::invalid_argument);
  set.entries.push_back({"a", Tensor::i32({1}, {2})});
  EXPECT_THROW(encode_set(set), FormatError);

  const std::string one = Bytes{}.raw("a").u32(1).u32(1).u32(1).u64(1).u32(5).s;
  const std::string dup = Bytes{}.raw("QTS1").u32(2).u32(1).s + one + Bytes{}.u32(1).s + one;
  EXPECT_THROW(decode_set(dup), FormatError);
  EXPECT_THROW(decode_set(Bytes{}.raw("QTS1").u32(1).s), FormatError);
  EXPECT_THROW(decode_set(Bytes{}.raw("QTF1").u32(0).s), FormatError);
  EXPECT_TRUE(decode_set(Bytes{}.raw("QTS1").u32(0).s).empty());
  EXPECT_THROW(set.at("missing"), FormatError);
}

TEST(TensorIo, FilesRoundTrip) {
  qcal::testing::TempDir dir("tio");
  const Tensor t = Tensor::f32({3}, {1.0f, 2.0f, 3.0f});
  write_tensor(dir.path() / "t.qtf", t);
  EXPECT_EQ(read_tensor(dir.path() / "t.qtf"), t);
  NamedTensorSet set;
  set.add("t", t);
  write_set(dir.path() / "s.qts", set);
  EXPECT_EQ(read_set(dir.path() / "s.qts").at("t"), t);
  EXPECT_THROW(read_set(dir.path() / "nope.qts"), FormatError);
}
