#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace agentnet {

using Bytes = std::vector<uint8_t>;
using Digest32 = std::array<uint8_t, 32>;

std::string hex_encode(std::span<const uint8_t> data);
Bytes hex_decode(std::string_view hex);  // throws Error on odd length / non-hex

/// Length-prefixed binary writer used for all signing/digest bodies.
/// Integers are little-endian; variable-size fields carry a u32 length.
class BodyWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u32(uint32_t v) { append_le(v); }
  void u64(uint64_t v) { append_le(v); }
  void i64(int64_t v) { append_le(static_cast<uint64_t>(v)); }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    append_le(bits);
  }
  void raw(std::span<const uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
  void bytes(std::span<const uint8_t> data) {
    u32(static_cast<uint32_t>(data.size()));
    raw(data);
  }
  void str(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  const Bytes& data() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  template <typename T>
  void append_le(T v) {
    for (size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  Bytes buf_;
};

}  // namespace agentnet
