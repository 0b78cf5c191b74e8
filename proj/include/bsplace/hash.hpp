#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <type_traits>

namespace bsplace {

// FNV-1a 64-bit over a byte stream. Multi-byte scalars are fed in
// little-endian order so ids agree across hosts.
class Fnv1a64 {
 public:
  void bytes(std::span<const std::uint8_t> data) {
    for (std::uint8_t b : data) {
      h_ ^= b;
      h_ *= 0x100000001b3ULL;
    }
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void scalar(T v) {
    std::uint64_t raw = 0;
    if constexpr (std::is_floating_point_v<T>) {
      static_assert(sizeof(T) == 8);
      raw = std::bit_cast<std::uint64_t>(v);
    } else {
      raw = static_cast<std::uint64_t>(v);
    }
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      std::uint8_t b = static_cast<std::uint8_t>(raw >> (8 * k));
      bytes({&b, 1});
    }
  }

  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace bsplace
