#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "revdeconv/fixed_point.hpp"
#include "revdeconv/rng.hpp"
#include "revdeconv/tensor.hpp"

namespace testing {

using namespace revdeconv;

inline std::filesystem::path source_dir() { return REVDECONV_SOURCE_DIR; }
inline std::filesystem::path config_path(const std::string& name) { return source_dir() / "configs" / name; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("revdeconv_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Raw values drawn from [-range, range] in units of 2^-F.
inline FeatureMap random_map(int c, int h, int w, DeterministicRng& rng, int range = 1 << 16) {
  FeatureMap m(c, h, w);
  for (std::int32_t& v : m.raw()) v = rng.uniform_int(-range, range);
  return m;
}

inline WeightTensor random_weights(const LayerParams& layer, DeterministicRng& rng, int range = 1 << 16,
                                   double zero_fraction = 0.0) {
  WeightTensor w(layer.in_channels, layer.out_channels, layer.kernel);
  for (std::int32_t& v : w.raw_weights()) {
    v = rng.uniform() < zero_fraction ? 0 : rng.uniform_int(-range, range);
  }
  for (std::int32_t& v : w.raw_bias()) v = rng.uniform_int(-range, range);
  return w;
}

/// Layer with S in {1,2,4}, K in {1,3,4,5}, P in [0,K-1], dims within max_dim.
inline LayerParams random_layer(DeterministicRng& rng, int max_dim = 32, int max_channels = 8) {
  static constexpr int strides[] = {1, 2, 4};
  static constexpr int kernels[] = {1, 3, 4, 5};
  for (;;) {
    LayerParams l;
    l.stride = strides[rng.uniform_int(0, 2)];
    l.kernel = kernels[rng.uniform_int(0, 3)];
    l.padding = rng.uniform_int(0, l.kernel - 1);
    l.in_channels = rng.uniform_int(1, max_channels);
    l.out_channels = rng.uniform_int(1, max_channels);
    l.in_height = rng.uniform_int(1, max_dim);
    l.in_width = rng.uniform_int(1, max_dim);
    if (l.out_height() >= 1 && l.out_width() >= 1 && l.out_height() <= max_dim && l.out_width() <= max_dim) return l;
  }
}

/// floor((a*b) / 2^F) wrapped to 32 bits, by exact 128-bit division.
inline std::int32_t mul_oracle(std::int32_t a, std::int32_t b, int frac_bits) {
  const __int128 p = static_cast<__int128>(a) * b;
  const __int128 d = static_cast<__int128>(1) << frac_bits;
  __int128 q = p / d;
  if (p % d != 0 && p < 0) q -= 1;
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(static_cast<std::uint64_t>(q)));
}

/// Scatter transposed convolution with a plain int64 accumulator and
/// per-product truncation, in output-major order.
inline FeatureMap gather_oracle(const FeatureMap& x, const WeightTensor& w, const LayerParams& l, int frac_bits) {
  FeatureMap y(l.out_channels, l.out_height(), l.out_width());
  for (int oc = 0; oc < l.out_channels; ++oc) {
    for (int oh = 0; oh < l.out_height(); ++oh) {
      for (int ow = 0; ow < l.out_width(); ++ow) {
        std::uint32_t acc = static_cast<std::uint32_t>(w.bias(oc).raw);
        for (int ic = 0; ic < l.in_channels; ++ic) {
          for (int ih = 0; ih < l.in_height; ++ih) {
            for (int iw = 0; iw < l.in_width; ++iw) {
              const int kh = oh - ih * l.stride + l.padding;
              const int kw = ow - iw * l.stride + l.padding;
              if (kh < 0 || kh >= l.kernel || kw < 0 || kw >= l.kernel) continue;
              acc += static_cast<std::uint32_t>(mul_oracle(x.at(ic, ih, iw).raw, w.at(ic, oc, kh, kw).raw, frac_bits));
            }
          }
        }
        y.set(oc, oh, ow, Fixed32{static_cast<std::int32_t>(acc)});
      }
    }
  }
  return y;
}

}  // namespace testing
