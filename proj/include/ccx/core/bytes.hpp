#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccx/core/error.hpp"

namespace ccx {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Appends big-endian encoded scalars to a byte buffer.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put_be(v); }
  void u32(std::uint32_t v) { put_be(v); }
  void u64(std::uint64_t v) { put_be(v); }
  void f32(float v) { put_be(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_be(std::bit_cast<std::uint64_t>(v)); }
  void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  void raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

 private:
  template <typename T>
  void put_be(T v) {
    for (int shift = (sizeof(T) - 1) * 8; shift >= 0; shift -= 8) {
      out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }

  Bytes& out_;
};

/// Reads big-endian scalars from a byte view. Throws MalformedPayload on underrun.
class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8() { return get_be<std::uint8_t>(); }
  std::uint16_t u16() { return get_be<std::uint16_t>(); }
  std::uint32_t u32() { return get_be<std::uint32_t>(); }
  std::uint64_t u64() { return get_be<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get_be<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_be<std::uint64_t>()); }

  ByteView raw(std::size_t n) {
    need(n);
    auto view = in_.subspan(pos_, n);
    pos_ += n;
    return view;
  }

  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw MalformedPayload("truncated input");
  }

  template <typename T>
  T get_be() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v = static_cast<T>((v << 8) | in_[pos_ + i]);
    pos_ += sizeof(T);
    return v;
  }

  ByteView in_;
  std::size_t pos_ = 0;
};

/// FNV-1a, used for payload checksums in tests and diagnostics.
inline std::uint64_t fnv1a(ByteView bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace ccx
