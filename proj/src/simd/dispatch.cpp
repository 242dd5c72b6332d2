#include <cstdlib>
#include <string>

#include <fmt/format.h>

#include "revdeconv/errors.hpp"
#include "revdeconv/simd/mac_kernels.hpp"

namespace revdeconv::simd {

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") != 0;
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (isa_available(isa)) {
      out.push_back(isa);
    }
  }
  return out;
}

Isa detect_isa() {
  if (const char* forced = std::getenv("REVDECONV_ISA"); forced != nullptr && *forced != '\0' && std::string_view(forced) != "auto") {
    const Isa isa = parse_isa(forced);
    if (isa_available(isa)) {
      return isa;
    }
    throw ParameterError(fmt::format("REVDECONV_ISA={} is not supported on this CPU", forced));
  }
  if (isa_available(Isa::avx2)) {
    return Isa::avx2;
  }
  if (isa_available(Isa::neon)) {
    return Isa::neon;
  }
  return Isa::scalar;
}

MacRowFn mac_row_kernel(Isa isa) {
  if (!isa_available(isa)) {
    throw ParameterError(fmt::format("{} kernels are not available on this machine", isa_name(isa)));
  }
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2:
      return &mac_row_avx2;
#endif
#if defined(__aarch64__)
    case Isa::neon:
      return &mac_row_neon;
#endif
    default:
      return &mac_row_scalar;
  }
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "neon") return Isa::neon;
  if (name == "auto") return detect_isa();
  throw ParameterError(fmt::format("unknown instruction set '{}'", name));
}

}  // namespace revdeconv::simd
