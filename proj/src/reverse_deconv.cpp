#include "revdeconv/reverse_deconv.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

namespace revdeconv {
namespace {

constexpr std::uint64_t kWordBytes = sizeof(std::int32_t);

// First output coordinate >= origin that tap offset f reaches: the
// stride-aligned grid shifted by f, re-phased for tiles whose origin is not a
// multiple of S. Equals origin + f when origin is aligned.
int first_output(int origin, int offset, int stride) { return origin + euclid_mod(offset - origin, stride); }

std::optional<std::pair<int, int>> axis_span(int origin, int extent, std::span<const int> offsets, int stride,
                                             int padding, int in_dim) {
  int lo = in_dim;
  int hi = -1;
  const int end = origin + extent;
  for (int k = 0; k < static_cast<int>(offsets.size()); ++k) {
    for (int o = first_output(origin, offsets[k], stride); o < end; o += stride) {
      const int i = input_index(o, k, stride, padding);
      if (i >= 0 && i < in_dim) {
        lo = std::min(lo, i);
        hi = std::max(hi, i);
      }
    }
  }
  if (hi < lo) {
    return std::nullopt;
  }
  return std::make_pair(lo, hi);
}

}  // namespace

OffsetTable compute_offsets(int kernel, int stride, int padding) {
  if (stride < 1) {
    throw ParameterError(fmt::format("stride must be >= 1, got {}", stride));
  }
  if (kernel < 1) {
    throw ParameterError(fmt::format("kernel must be >= 1, got {}", kernel));
  }
  if (padding < 0) {
    throw ParameterError(fmt::format("padding must be >= 0, got {}", padding));
  }
  OffsetTable table;
  table.stride = stride;
  table.padding = padding;
  table.f_h.resize(static_cast<std::size_t>(kernel));
  table.f_w.resize(static_cast<std::size_t>(kernel));
  for (int k = 0; k < kernel; ++k) {
    table.f_h[k] = euclid_mod(stride - euclid_mod(padding - k, stride), stride);
  }
  for (int k = 0; k < kernel; ++k) {
    table.f_w[k] = euclid_mod(stride - euclid_mod(padding - k, stride), stride);
  }
  return table;
}

int input_index(int o, int k, int stride, int padding) {
  const int numerator = o + padding - k;
  if (euclid_mod(numerator, stride) != 0) {
    throw std::logic_error(fmt::format("output {} is not reachable from tap {} (S={}, P={})", o, k, stride, padding));
  }
  // Exact division, so truncation direction does not matter.
  return numerator / stride;
}

int tile_input_dim(int t_out, int stride, int kernel) {
  if (t_out < 1 || stride < 1 || kernel < 1) {
    throw ParameterError(fmt::format("tile_input_dim needs positive arguments, got T={} S={} K={}", t_out, stride,
                                     kernel));
  }
  return (t_out + stride - 1) / stride + (kernel + stride - 1) / stride;
}

std::vector<TileSpec> make_tiles(const LayerParams& layer, int t_oh) {
  layer.validate();
  if (t_oh < 1) {
    throw ParameterError(fmt::format("tiling factor must be >= 1, got {}", t_oh));
  }
  const int out_h = layer.out_height();
  const int out_w = layer.out_width();
  const int capacity = tile_input_dim(t_oh, layer.stride, layer.kernel) + 1;
  std::vector<TileSpec> tiles;
  for (int oh = 0; oh < out_h; oh += t_oh) {
    for (int ow = 0; ow < out_w; ow += t_oh) {
      TileSpec tile;
      tile.t_oh = t_oh;
      tile.t_ow = t_oh;
      tile.origin_h = oh;
      tile.origin_w = ow;
      tile.height = std::min(t_oh, out_h - oh);
      tile.width = std::min(t_oh, out_w - ow);
      tile.t_ih = capacity;
      tile.t_iw = capacity;
      tiles.push_back(tile);
    }
  }
  return tiles;
}

std::optional<InputSpan> exact_input_span(const TileSpec& tile, const OffsetTable& offsets, const LayerParams& layer) {
  const auto rows = axis_span(tile.origin_h, tile.height, offsets.f_h, layer.stride, layer.padding, layer.in_height);
  if (!rows) {
    return std::nullopt;
  }
  const auto cols = axis_span(tile.origin_w, tile.width, offsets.f_w, layer.stride, layer.padding, layer.in_width);
  if (!cols) {
    return std::nullopt;
  }
  return InputSpan{rows->first, rows->second, cols->first, cols->second};
}

OpCounter& OpCounter::operator+=(const OpCounter& other) noexcept {
  macs_executed += other.macs_executed;
  macs_skipped += other.macs_skipped;
  bytes_read += other.bytes_read;
  bytes_written += other.bytes_written;
  blocks += other.blocks;
  return *this;
}

void deconv_block(const InputTileView& x_tile, std::span<const std::int32_t> w_block, const OffsetTable& offsets,
                  const TileSpec& tile, const LayerParams& layer, bool zero_skip, FixedFormat fmt,
                  simd::MacRowFn kernel, OutputBlockView y_block, OpCounter& counter) {
  const int stride = layer.stride;
  const int padding = layer.padding;
  const int taps = layer.kernel;
  if (w_block.size() != static_cast<std::size_t>(taps) * taps ||
      offsets.f_h.size() != static_cast<std::size_t>(taps) || offsets.f_w.size() != static_cast<std::size_t>(taps)) {
    throw std::logic_error("weight block or offset table does not match the kernel size");
  }
  if (y_block.rows != tile.height || y_block.cols != tile.width ||
      y_block.data.size() != static_cast<std::size_t>(tile.height) * tile.width) {
    throw std::logic_error("output block does not match the tile extent");
  }

  const int row_end = tile.origin_h + tile.height;
  const int col_end = tile.origin_w + tile.width;
  std::vector<std::pair<int, int>> rows;  // (local output row, input row)
  rows.reserve(static_cast<std::size_t>(tile.height));

  for (int kh = 0; kh < taps; ++kh) {
    rows.clear();
    for (int oh = first_output(tile.origin_h, offsets.f_h[kh], stride); oh < row_end; oh += stride) {
      const int ih = input_index(oh, kh, stride, padding);
      if (ih >= 0 && ih < layer.in_height) {
        rows.emplace_back(oh - tile.origin_h, ih);
      }
    }
    if (rows.empty()) {
      continue;
    }
    for (int kw = 0; kw < taps; ++kw) {
      const std::int32_t weight = w_block[static_cast<std::size_t>(kh) * taps + kw];
      const int ow0 = first_output(tile.origin_w, offsets.f_w[kw], stride);
      if (ow0 >= col_end) {
        continue;
      }
      const int outputs = (col_end - ow0 + stride - 1) / stride;
      // Consecutive strided outputs read consecutive input columns.
      const int iw0 = input_index(ow0, kw, stride, padding);
      const int j_lo = std::max(0, -iw0);
      const int j_hi = std::min(outputs, layer.in_width - iw0);
      if (j_lo >= j_hi) {
        continue;
      }
      const auto count = static_cast<std::size_t>(j_hi - j_lo);
      if (zero_skip && weight == 0) {
        counter.macs_skipped += count * rows.size();
        continue;
      }
      const int x_col = iw0 + j_lo - x_tile.origin_w;
      if (x_col < 0 || x_col + (j_hi - j_lo) > x_tile.cols) {
        throw std::logic_error("input tile does not cover the requested columns");
      }
      const int y_col = ow0 - tile.origin_w + j_lo * stride;
      for (const auto& [local_row, ih] : rows) {
        const int x_row = ih - x_tile.origin_h;
        if (x_row < 0 || x_row >= x_tile.rows) {
          throw std::logic_error("input tile does not cover the requested rows");
        }
        kernel(y_block.data.data() + static_cast<std::ptrdiff_t>(local_row) * y_block.cols + y_col, stride,
               x_tile.data.data() + static_cast<std::ptrdiff_t>(x_row) * x_tile.cols + x_col, weight, count,
               fmt.frac_bits);
      }
      counter.macs_executed += count * rows.size();
    }
  }
}

DeconvResult deconv_layer(const FeatureMap& x, const WeightTensor& w, const LayerParams& layer, FixedFormat fmt,
                          const DeconvOptions& options) {
  layer.validate();
  fmt.validate();
  layer.check_operands(x, w);
  const int out_h = layer.out_height();
  const int out_w = layer.out_width();
  const int t_oh = options.t_oh == 0 ? std::max(out_h, out_w) : options.t_oh;
  if (t_oh < 1 || t_oh > std::max(out_h, out_w)) {
    throw ParameterError(fmt::format("tiling factor {} outside [1, {}]", t_oh, std::max(out_h, out_w)));
  }

  OffsetTable offsets = compute_offsets(layer.kernel, layer.stride, layer.padding);
  if (options.corrupt_offsets && layer.stride > 1) {
    for (int& f : offsets.f_h) f = (f + 1) % layer.stride;
    for (int& f : offsets.f_w) f = (f + 1) % layer.stride;
  }
  const simd::MacRowFn kernel = simd::mac_row_kernel(options.isa);

  std::vector<TileSpec> tiles = make_tiles(layer, t_oh);
  std::vector<std::optional<InputSpan>> spans;
  spans.reserve(tiles.size());
  for (TileSpec& tile : tiles) {
    spans.push_back(exact_input_span(tile, offsets, layer));
    if (spans.back()) {
      tile.in_origin_h = spans.back()->min_h;
      tile.in_origin_w = spans.back()->min_w;
    }
  }

  FeatureMap y(layer.out_channels, out_h, out_w);
  const std::size_t block_count = tiles.size() * static_cast<std::size_t>(layer.out_channels);
  const std::size_t weight_words = static_cast<std::size_t>(layer.kernel) * layer.kernel;

  auto run_block = [&](std::size_t item, OpCounter& ops, std::vector<std::int32_t>& y_buf,
                       std::vector<std::int32_t>& x_buf) {
    const int oc = static_cast<int>(item / tiles.size());
    const TileSpec& tile = tiles[item % tiles.size()];
    const auto& span = spans[item % tiles.size()];

    y_buf.assign(static_cast<std::size_t>(tile.height) * tile.width, w.bias(oc).raw);
    const OutputBlockView y_view{y_buf, tile.height, tile.width};
    for (int ic = 0; ic < layer.in_channels; ++ic) {
      ops.bytes_read += weight_words * kWordBytes;
      if (!span) {
        continue;
      }
      // Sequential fetch of the input window, then random access on-chip.
      const int rows = span->rows();
      const int cols = span->cols();
      x_buf.resize(static_cast<std::size_t>(rows) * cols);
      const auto plane = x.plane(ic);
      for (int r = 0; r < rows; ++r) {
        const auto src = plane.subspan(static_cast<std::size_t>(span->min_h + r) * layer.in_width + span->min_w,
                                       static_cast<std::size_t>(cols));
        std::copy(src.begin(), src.end(), x_buf.begin() + static_cast<std::ptrdiff_t>(r) * cols);
      }
      ops.bytes_read += static_cast<std::uint64_t>(rows) * cols * kWordBytes;
      const InputTileView x_view{x_buf, span->min_h, span->min_w, rows, cols};
      deconv_block(x_view, w.block(ic, oc), offsets, tile, layer, options.zero_skip, fmt, kernel, y_view, ops);
    }
    auto out_plane = y.plane(oc);
    for (int r = 0; r < tile.height; ++r) {
      std::copy_n(y_buf.begin() + static_cast<std::ptrdiff_t>(r) * tile.width, tile.width,
                  out_plane.begin() + static_cast<std::ptrdiff_t>(tile.origin_h + r) * out_w + tile.origin_w);
    }
    ops.bytes_written += static_cast<std::uint64_t>(tile.height) * tile.width * kWordBytes;
    ops.blocks += 1;
  };

  const int workers = std::max(1, options.workers);
  OpCounter total;
  if (workers == 1 || block_count <= 1) {
    std::vector<std::int32_t> y_buf;
    std::vector<std::int32_t> x_buf;
    for (std::size_t item = 0; item < block_count; ++item) {
      run_block(item, total, y_buf, x_buf);
    }
    return {std::move(y), total};
  }

  std::atomic<std::size_t> next{0};
  std::vector<OpCounter> partial(static_cast<std::size_t>(workers));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        std::vector<std::int32_t> y_buf;
        std::vector<std::int32_t> x_buf;
        try {
          for (std::size_t item = next++; item < block_count; item = next++) {
            run_block(item, partial[static_cast<std::size_t>(t)], y_buf, x_buf);
          }
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = block_count;
        }
      });
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
  for (const OpCounter& ops : partial) {
    total += ops;
  }
  return {std::move(y), total};
}

}  // namespace revdeconv
