#include "revdeconv/fixed_point.hpp"

#include <cfenv>
#include <cmath>

#include <fmt/format.h>

namespace revdeconv {

void FixedFormat::validate() const {
  if (frac_bits < 0 || frac_bits > 31) {
    throw ParameterError(fmt::format("frac_bits must be in [0, 31], got {}", frac_bits));
  }
}

double FixedFormat::scale() const { return std::ldexp(1.0, frac_bits); }

Fixed32 fx_from_real(double v, FixedFormat fmt) {
  fmt.validate();
  const double limit = std::ldexp(1.0, 31 - fmt.frac_bits);
  if (!std::isfinite(v) || v >= limit || v < -limit) {
    throw RangeError(fmt::format("{} is outside the Q{}.{} range", v, 31 - fmt.frac_bits, fmt.frac_bits));
  }
  // Scaling by a power of two is exact, so rounding happens only here.
  const double scaled = std::ldexp(v, fmt.frac_bits);
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double rounded = std::nearbyint(scaled);
  std::fesetround(saved);
  if (rounded >= 2147483648.0 || rounded < -2147483648.0) {
    throw RangeError(fmt::format("{} rounds outside the 32-bit range", v));
  }
  return {static_cast<std::int32_t>(rounded)};
}

double fx_to_real(Fixed32 v, FixedFormat fmt) noexcept { return std::ldexp(static_cast<double>(v.raw), -fmt.frac_bits); }

Fixed32 fx_one(FixedFormat fmt) {
  fmt.validate();
  if (fmt.frac_bits == 31) {
    throw RangeError("1.0 is not representable with 31 fraction bits");
  }
  return {static_cast<std::int32_t>(1) << fmt.frac_bits};
}

}  // namespace revdeconv
