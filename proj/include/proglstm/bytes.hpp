#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace proglstm::bytes {

// Explicit little-endian encoding, independent of host byte order.

inline void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
  }
}

inline void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
  }
}

/// Rounds to the nearest float (ties to even) and appends its bits.
inline void put_f32(std::vector<std::byte>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

inline void put_f64(std::vector<std::byte>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t get_u32(std::span<const std::byte> in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(in[offset + i]) << (8 * i);
  }
  return v;
}

inline std::uint64_t get_u64(std::span<const std::byte> in, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(in[offset + i]) << (8 * i);
  }
  return v;
}

inline double get_f32(std::span<const std::byte> in, std::size_t offset) {
  return static_cast<double>(std::bit_cast<float>(get_u32(in, offset)));
}

inline double get_f64(std::span<const std::byte> in, std::size_t offset) {
  return std::bit_cast<double>(get_u64(in, offset));
}

} // namespace proglstm::bytes
