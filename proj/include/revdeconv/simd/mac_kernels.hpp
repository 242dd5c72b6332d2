#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace revdeconv::simd {

/// Instruction-set variants of the fixed-point row kernel.
enum class Isa { scalar, avx2, neon };

/// y[j * y_stride] += (x[j] * weight) >> frac_bits for j in [0, count).
///
/// Every variant must produce bit-identical results: 64-bit product,
/// arithmetic shift, low 32 bits, wrapping add.
using MacRowFn = void (*)(std::int32_t* y, std::ptrdiff_t y_stride, const std::int32_t* x, std::int32_t weight,
                          std::size_t count, int frac_bits);

void mac_row_scalar(std::int32_t* y, std::ptrdiff_t y_stride, const std::int32_t* x, std::int32_t weight,
                    std::size_t count, int frac_bits);

#if defined(__x86_64__) || defined(_M_X64)
void mac_row_avx2(std::int32_t* y, std::ptrdiff_t y_stride, const std::int32_t* x, std::int32_t weight,
                  std::size_t count, int frac_bits);
#endif

#if defined(__aarch64__)
void mac_row_neon(std::int32_t* y, std::ptrdiff_t y_stride, const std::int32_t* x, std::int32_t weight,
                  std::size_t count, int frac_bits);
#endif

/// True when the variant was compiled in and the running CPU supports it.
[[nodiscard]] bool isa_available(Isa isa) noexcept;

/// Best available variant; REVDECONV_ISA=scalar|avx2|neon overrides it.
[[nodiscard]] Isa detect_isa();

[[nodiscard]] std::vector<Isa> available_isas();

/// Throws ParameterError when the variant is unavailable.
[[nodiscard]] MacRowFn mac_row_kernel(Isa isa);

[[nodiscard]] std::string_view isa_name(Isa isa) noexcept;

/// Accepts "scalar", "avx2", "neon" and "auto". Throws ParameterError otherwise.
[[nodiscard]] Isa parse_isa(std::string_view name);

}  // namespace revdeconv::simd
