#pragma once

#include <cstdint>

namespace proglstm {

/// SplitMix64: a counter-based 64-bit generator. The n-th output is
/// mix(seed + n * 0x9E3779B97F4A7C15), so the stream is a pure function of
/// (seed, n) and identical on every platform.
///
/// Normal variates use the Marsaglia polar method with a logarithm built
/// from IEEE basic operations only, so they are portable too (given the
/// project-wide -ffp-contract=off).
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Uniform on [-1, 1).
  double symmetric() noexcept { return 2.0 * uniform() - 1.0; }

  /// Standard normal.
  double normal() noexcept;

  std::uint64_t counter_state() const noexcept { return state_; }

private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Natural logarithm of a positive finite double computed with +, -, *, /
/// and frexp only. Accurate to a few ulp; bit-reproducible.
double portable_log(double x) noexcept;

/// Derives an independent stream seed from a base seed and a tag.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

} // namespace proglstm
