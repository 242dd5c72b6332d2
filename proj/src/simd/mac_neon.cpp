#include <arm_neon.h>

#include "revdeconv/simd/mac_kernels.hpp"

namespace revdeconv::simd {

void mac_row_neon(std::int32_t* y, std::ptrdiff_t y_stride, const std::int32_t* x, std::int32_t weight,
                  std::size_t count, int frac_bits) {
  const int32x2_t wv = vdup_n_s32(weight);
  const int64x2_t shift = vdupq_n_s64(-static_cast<std::int64_t>(frac_bits));
  std::size_t j = 0;
  for (; j + 4 <= count; j += 4) {
    const int32x4_t xv = vld1q_s32(x + j);
    // vshlq with a negative count is an arithmetic right shift.
    const int64x2_t lo = vshlq_s64(vmull_s32(vget_low_s32(xv), wv), shift);
    const int64x2_t hi = vshlq_s64(vmull_s32(vget_high_s32(xv), wv), shift);
    const int32x4_t prod = vcombine_s32(vmovn_s64(lo), vmovn_s64(hi));
    if (y_stride == 1) {
      vst1q_s32(y + j, vaddq_s32(vld1q_s32(y + j), prod));
    } else {
      std::int32_t lanes[4];
      vst1q_s32(lanes, prod);
      std::int32_t* row = y + static_cast<std::ptrdiff_t>(j) * y_stride;
      for (int lane = 0; lane < 4; ++lane) {
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
