#include "revdeconv/fixed_point.hpp"
#include "revdeconv/simd/mac_kernels.hpp"

namespace revdeconv::simd {

void mac_row_scalar(std::int32_t* y, std::ptrdiff_t y_stride, const std::int32_t* x, std::int32_t weight,
                    std::size_t count, int frac_bits) {
  for (std::size_t j = 0; j < count; ++j) {
    std::int32_t& dst = y[static_cast<std::ptrdiff_t>(j) * y_stride];
    dst = wrap_add(dst, fixed_mul_raw(x[j], weight, frac_bits));
  }
}

}  // namespace revdeconv::simd
