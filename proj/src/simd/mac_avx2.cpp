// Compiled with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include "revdeconv/simd/mac_kernels.hpp"

namespace revdeconv::simd {
namespace {

// Truncated products of 8 lanes. Only bits [F, F+32) of each 64-bit product
// survive the narrowing, so a logical shift gives the same low word as an
// arithmetic one and AVX2's missing srai_epi64 is not needed.
inline __m256i products8(__m256i xv, __m256i wv, __m128i shift) {
  const __m256i even = _mm256_srl_epi64(_mm256_mul_epi32(xv, wv), shift);
  const __m256i odd = _mm256_srl_epi64(_mm256_mul_epi32(_mm256_srli_epi64(xv, 32), wv), shift);
  return _mm256_blend_epi32(even, _mm256_slli_epi64(odd, 32), 0b10101010);
}

}  // namespace

void mac_row_avx2(std::int32_t* y, std::ptrdiff_t y_stride, const std::int32_t* x, std::int32_t weight,
                  std::size_t count, int frac_bits) {
  const __m256i wv = _mm256_set1_epi64x(static_cast<std::int64_t>(weight));
  const __m128i shift = _mm_cvtsi32_si128(frac_bits);
  std::size_t j = 0;
  if (y_stride == 1) {
    for (; j + 8 <= count; j += 8) {
      const __m256i xv = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(x + j));
      __m256i* dst = reinterpret_cast<__m256i*>(y + j);
      _mm256_storeu_si256(dst, _mm256_add_epi32(_mm256_loadu_si256(dst), products8(xv, wv, shift)));
    }
  } else {
    alignas(32) std::int32_t lanes[8];
    for (; j + 8 <= count; j += 8) {
      const __m256i xv = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(x + j));
      _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), products8(xv, wv, shift));
      std::int32_t* row = y + static_cast<std::ptrdiff_t>(j) * y_stride;
      for (int lane = 0; lane < 8; ++lane) {
        std::int32_t& dst = row[lane * y_stride];
        dst = static_cast<std::int32_t>(static_cast<std::uint32_t>(dst) + static_cast<std::uint32_t>(lanes[lane]));
      }
    }
  }
  if (j < count) {
    mac_row_scalar(y + static_cast<std::ptrdiff_t>(j) * y_stride, y_stride, x + j, weight, count - j, frac_bits);
  }
}

}  // namespace revdeconv::simd
