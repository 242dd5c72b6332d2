#pragma once

#include <cstdint>

#include "revdeconv/errors.hpp"

namespace revdeconv {

/// Number of fractional bits shared by every value in a run.
struct FixedFormat {
  int frac_bits = 16;

  /// Throws ParameterError unless frac_bits is in [0, 31].
  void validate() const;
  [[nodiscard]] double scale() const;
};

/// 32-bit two's-complement fixed-point scalar; real value is raw / 2^F.
///
/// Addition wraps modulo 2^32. Multiplication forms the exact 64-bit product,
/// arithmetic-shifts it right by F (rounding toward negative infinity) and
/// keeps the low 32 bits.
struct Fixed32 {
  std::int32_t raw = 0;

  friend constexpr bool operator==(Fixed32, Fixed32) = default;
};

[[nodiscard]] constexpr std::int32_t wrap_add(std::int32_t a, std::int32_t b) noexcept {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
}

[[nodiscard]] constexpr std::int32_t wrap_sub(std::int32_t a, std::int32_t b) noexcept {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) - static_cast<std::uint32_t>(b));
}

[[nodiscard]] constexpr std::int32_t fixed_mul_raw(std::int32_t a, std::int32_t b, int frac_bits) noexcept {
  const std::int64_t product = static_cast<std::int64_t>(a) * static_cast<std::int64_t>(b);
  return static_cast<std::int32_t>(product >> frac_bits);
}

[[nodiscard]] constexpr Fixed32 fx_add(Fixed32 a, Fixed32 b) noexcept { return {wrap_add(a.raw, b.raw)}; }
[[nodiscard]] constexpr Fixed32 fx_sub(Fixed32 a, Fixed32 b) noexcept { return {wrap_sub(a.raw, b.raw)}; }

[[nodiscard]] constexpr Fixed32 fx_mul(Fixed32 a, Fixed32 b, FixedFormat fmt) noexcept {
  return {fixed_mul_raw(a.raw, b.raw, fmt.frac_bits)};
}

/// acc + a*b with the truncating multiply and wrapping add.
[[nodiscard]] constexpr Fixed32 fx_mac(Fixed32 acc, Fixed32 a, Fixed32 b, FixedFormat fmt) noexcept {
  return {wrap_add(acc.raw, fixed_mul_raw(a.raw, b.raw, fmt.frac_bits))};
}

/// Round-to-nearest-even quantisation. Throws RangeError outside [-2^(31-F), 2^(31-F))
/// or for non-finite v.
[[nodiscard]] Fixed32 fx_from_real(double v, FixedFormat fmt);

[[nodiscard]] double fx_to_real(Fixed32 v, FixedFormat fmt) noexcept;

/// 1.0 in the given format. Not representable for F = 31.
[[nodiscard]] Fixed32 fx_one(FixedFormat fmt);

}  // namespace revdeconv
