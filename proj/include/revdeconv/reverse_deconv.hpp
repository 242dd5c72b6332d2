#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "revdeconv/simd/mac_kernels.hpp"
#include "revdeconv/tensor.hpp"

namespace revdeconv {

/// Per-tap stride-hole offsets, f[k] = mod(S - mod(P - k, S), S) with a
/// non-negative modulo. Adding f[k] to a stride-aligned output coordinate
/// lands on the first output that tap k actually produces.
struct OffsetTable {
  std::vector<int> f_h;
  std::vector<int> f_w;
  int stride = 1;
  int padding = 0;

  /// Entries held by the table (2K).
  [[nodiscard]] std::size_t entries() const noexcept { return f_h.size() + f_w.size(); }
};

/// Always-non-negative remainder.
[[nodiscard]] constexpr int euclid_mod(int a, int m) noexcept {
  const int r = a % m;
  return r < 0 ? r + m : r;
}

/// Builds the table with one offset evaluation per (axis, tap). Throws ParameterError for S < 1.
[[nodiscard]] OffsetTable compute_offsets(int kernel, int stride, int padding);

/// (o + P - k) / S. Throws std::logic_error when the division is not exact,
/// which only happens if the offsets were misapplied.
[[nodiscard]] int input_index(int o, int k, int stride, int padding);

/// ceil(T/S) + ceil(K/S): input rows an output tile of T rows depends on.
[[nodiscard]] int tile_input_dim(int t_out, int stride, int kernel);

/// One square output block and the input window cached for it.
struct TileSpec {
  int t_oh = 1;  // nominal tiling factor
  int t_ow = 1;
  int origin_h = 0;  // output-space origin
  int origin_w = 0;
  int height = 1;  // extent after clipping at the image edge
  int width = 1;
  int t_ih = 1;  // allocated input capacity, tile_input_dim + 1
  int t_iw = 1;
  int in_origin_h = 0;  // first cached input row/column
  int in_origin_w = 0;
};

/// Inclusive input-index bounds per axis.
struct InputSpan {
  int min_h = 0;
  int max_h = -1;
  int min_w = 0;
  int max_w = -1;

  [[nodiscard]] int rows() const noexcept { return max_h - min_h + 1; }
  [[nodiscard]] int cols() const noexcept { return max_w - min_w + 1; }
};

/// Square tiles covering the output in row-major block order; edge tiles are clipped.
[[nodiscard]] std::vector<TileSpec> make_tiles(const LayerParams& layer, int t_oh);

/// Min/max input index touched by any valid (output, tap) pair of the tile,
/// or nullopt when nothing contributes (bias-only block).
[[nodiscard]] std::optional<InputSpan> exact_input_span(const TileSpec& tile, const OffsetTable& offsets,
                                                        const LayerParams& layer);

/// MAC bookkeeping for one run. Sums are associative so per-worker counters
/// reduce to the same totals under any schedule.
struct OpCounter {
  std::uint64_t macs_executed = 0;
  std::uint64_t macs_skipped = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;
  std::uint64_t blocks = 0;

  OpCounter& operator+=(const OpCounter& other) noexcept;
  friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

/// Cached input window for one channel: rows x cols starting at (origin_h, origin_w).
struct InputTileView {
  std::span<const std::int32_t> data;
  int origin_h = 0;
  int origin_w = 0;
  int rows = 0;
  int cols = 0;
};

/// Output block being accumulated, tile.height x tile.width, row-major.
struct OutputBlockView {
  std::span<std::int32_t> data;
  int rows = 0;
  int cols = 0;
};

/// Accumulates one input channel into an output block: taps (k_h, k_w) in
/// order, then stride-aligned outputs shifted by the cached offsets, each
/// reading x at (o + P - k) / S. Taps with zero weight are skipped when
/// zero_skip is set. The block must already hold the bias.
void deconv_block(const InputTileView& x_tile, std::span<const std::int32_t> w_block, const OffsetTable& offsets,
                  const TileSpec& tile, const LayerParams& layer, bool zero_skip, FixedFormat fmt,
                  simd::MacRowFn kernel, OutputBlockView y_block, OpCounter& counter);

struct DeconvOptions {
  int t_oh = 0;  // 0 selects a single tile covering the whole output
  bool zero_skip = true;
  int workers = 1;
  simd::Isa isa = simd::Isa::scalar;
  /// Test hook: shift every offset by one stride phase so the index math breaks.
  bool corrupt_offsets = false;
};

struct DeconvResult {
  FeatureMap output;
  OpCounter ops;
};

/// Output-space tiled transposed convolution. Blocks are (o_c, tile) pairs,
/// each runs the full input-channel loop and writes a disjoint region, so the
/// output does not depend on the worker count.
[[nodiscard]] DeconvResult deconv_layer(const FeatureMap& x, const WeightTensor& w, const LayerParams& layer,
                                        FixedFormat fmt, const DeconvOptions& options);

}  // namespace revdeconv
