#pragma once

#include <cstdint>

#include "revdeconv/tensor.hpp"

namespace revdeconv {

/// Scatter counts gathered by the brute-force oracle.
struct ReferenceStats {
  std::uint64_t scattered = 0;  // contributions that landed inside the output
  std::uint64_t clipped = 0;    // contributions dropped at the borders
};

/// Input-space transposed convolution: every input pixel scatters a K*K
/// weighted patch to o = i*S + k - P. Loop order (i_c, o_c, i_h, i_w, k_h, k_w)
/// is fixed. No activation is applied.
[[nodiscard]] FeatureMap deconv_reference(const FeatureMap& x, const WeightTensor& w, const LayerParams& layer,
                                          FixedFormat fmt, ReferenceStats* stats = nullptr);

}  // namespace revdeconv
