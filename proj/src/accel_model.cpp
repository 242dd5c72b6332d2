#include "revdeconv/accel_model.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

namespace revdeconv {
namespace {

// Number of input positions along one axis whose tap k lands inside the output.
std::uint64_t valid_positions(int in_dim, int out_dim, int k, int stride, int padding) {
  std::uint64_t n = 0;
  for (int i = 0; i < in_dim; ++i) {
    const int o = i * stride + k - padding;
    if (o >= 0 && o < out_dim) ++n;
  }
  return n;
}

std::vector<std::uint64_t> axis_counts(int in_dim, int out_dim, const LayerParams& layer) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(layer.kernel));
  for (int k = 0; k < layer.kernel; ++k) {
    counts[k] = valid_positions(in_dim, out_dim, k, layer.stride, layer.padding);
  }
  return counts;
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

void PlatformModel::validate() const {
  if (num_cus == 0 || clock_hz == 0 || ddr_bw_bytes_per_s == 0 || word_bytes == 0 || dsp_count == 0 ||
      dsp_per_cu == 0 || bram_bytes == 0) {
    throw ParameterError("platform parameters must all be strictly positive");
  }
}

std::uint64_t dense_macs(const LayerParams& layer) {
  layer.validate();
  const auto rows = axis_counts(layer.in_height, layer.out_height(), layer);
  const auto cols = axis_counts(layer.in_width, layer.out_width(), layer);
  std::uint64_t per_pair = 0;
  for (std::uint64_t r : rows) {
    for (std::uint64_t c : cols) per_pair += r * c;
  }
  return per_pair * static_cast<std::uint64_t>(layer.in_channels) * static_cast<std::uint64_t>(layer.out_channels);
}

LayerWorkload dense_workload(const LayerParams& layer) {
  LayerWorkload load;
  load.nnz_per_out_channel.assign(static_cast<std::size_t>(layer.out_channels),
                                  static_cast<std::uint64_t>(layer.in_channels) * layer.kernel * layer.kernel);
  load.macs = dense_macs(layer);
  return load;
}

LayerWorkload workload_from_weights(const LayerParams& layer, const WeightTensor& w) {
  layer.validate();
  if (w.in_channels() != layer.in_channels || w.out_channels() != layer.out_channels || w.kernel() != layer.kernel) {
    throw ShapeError(fmt::format("weights do not match layer {}", layer.describe()));
  }
  const auto rows = axis_counts(layer.in_height, layer.out_height(), layer);
  const auto cols = axis_counts(layer.in_width, layer.out_width(), layer);
  LayerWorkload load;
  load.nnz_per_out_channel.assign(static_cast<std::size_t>(layer.out_channels), 0);
  for (int ic = 0; ic < layer.in_channels; ++ic) {
    for (int oc = 0; oc < layer.out_channels; ++oc) {
      for (int kh = 0; kh < layer.kernel; ++kh) {
        for (int kw = 0; kw < layer.kernel; ++kw) {
          if (w.at(ic, oc, kh, kw).raw == 0) continue;
          ++load.nnz_per_out_channel[oc];
          load.macs += rows[kh] * cols[kw];
        }
      }
    }
  }
  return load;
}

std::uint64_t transfer_cycles(std::uint64_t bytes, const PlatformModel& platform) {
  const auto numerator = static_cast<unsigned __int128>(bytes) * platform.clock_hz;
  const auto bw = static_cast<unsigned __int128>(platform.ddr_bw_bytes_per_s);
  const auto cycles = (numerator + bw - 1) / bw;
  if (cycles > std::numeric_limits<std::uint64_t>::max()) {
    throw RangeError(fmt::format("transfer of {} bytes overflows the cycle counter", bytes));
  }
  return static_cast<std::uint64_t>(cycles);
}

std::uint64_t block_read_cycles(const std::optional<InputSpan>& span, const LayerParams& layer,
                                const PlatformModel& platform) {
  const auto channels = static_cast<std::uint64_t>(layer.in_channels);
  std::uint64_t input_words = 0;
  if (span) {
    input_words = static_cast<std::uint64_t>(span->rows()) * span->cols() * channels;
  }
  const std::uint64_t weight_words = static_cast<std::uint64_t>(layer.kernel) * layer.kernel * channels;
  return transfer_cycles(input_words * platform.word_bytes, platform) +
         transfer_cycles(weight_words * platform.word_bytes, platform);
}

std::uint64_t block_compute_cycles(const TileSpec& tile, const LayerParams& layer, std::uint64_t nnz_weights,
                                   bool zero_skip, const PlatformModel& platform) {
  const std::uint64_t dense = static_cast<std::uint64_t>(layer.in_channels) * layer.kernel * layer.kernel;
  if (nnz_weights > dense) {
    throw ParameterError(fmt::format("nnz {} exceeds the {} taps of an output channel", nnz_weights, dense));
  }
  const std::uint64_t taps = zero_skip ? nnz_weights : dense;
  const auto stride = static_cast<std::uint64_t>(layer.stride);
  const auto h = static_cast<std::uint64_t>(tile.height);
  const auto w = static_cast<std::uint64_t>(tile.width);
  return taps * ceil_div(h, stride) * ceil_div(w, stride) + h * w * platform.bias_init_cycles_per_pixel;
}

std::uint64_t block_write_cycles(const TileSpec& tile, const PlatformModel& platform) {
  const std::uint64_t words = static_cast<std::uint64_t>(tile.height) * tile.width;
  return transfer_cycles(words * platform.word_bytes, platform);
}

std::uint64_t pipeline_cycles(std::span<const StageCycles> blocks) {
  std::uint64_t read_done = 0;
  std::uint64_t compute_done = 0;
  std::uint64_t write_done = 0;
  for (const StageCycles& b : blocks) {
    read_done += b.read;
    compute_done = std::max(compute_done, read_done) + b.compute;
    write_done = std::max(write_done, compute_done) + b.write;
  }
  return write_done;
}

std::uint64_t layer_bytes_moved(const LayerParams& layer, int t_oh, const PlatformModel& platform) {
  layer.validate();
  const int t_eff = std::min(t_oh, std::max(layer.out_height(), layer.out_width()));
  const OffsetTable offsets = compute_offsets(layer.kernel, layer.stride, layer.padding);
  const auto channels = static_cast<std::uint64_t>(layer.in_channels);
  const std::uint64_t weight_words = static_cast<std::uint64_t>(layer.kernel) * layer.kernel * channels;
  std::uint64_t words = 0;
  for (const TileSpec& tile : make_tiles(layer, t_eff)) {
    const auto span = exact_input_span(tile, offsets, layer);
    const std::uint64_t input_words = span ? static_cast<std::uint64_t>(span->rows()) * span->cols() * channels : 0;
    words += input_words + weight_words + static_cast<std::uint64_t>(tile.height) * tile.width;
  }
  return words * static_cast<std::uint64_t>(layer.out_channels) * platform.word_bytes;
}

std::optional<std::string> resource_violation(const LayerParams& layer, int t_oh, const PlatformModel& platform) {
  if (static_cast<std::uint64_t>(platform.num_cus) * platform.dsp_per_cu > platform.dsp_count) {
    return fmt::format("{} CUs x {} DSPs exceed the {} available", platform.num_cus, platform.dsp_per_cu,
                       platform.dsp_count);
  }
  const auto t_in = static_cast<std::uint64_t>(tile_input_dim(t_oh, layer.stride, layer.kernel) + 1);
  const auto t_out = static_cast<std::uint64_t>(t_oh);
  const auto k = static_cast<std::uint64_t>(layer.kernel);
  const std::uint64_t needed = platform.num_cus * (t_in * t_in + k * k + t_out * t_out) * platform.word_bytes;
  if (needed > platform.bram_bytes) {
    return fmt::format("T_OH={} needs {} bytes of on-chip buffer, {} available", t_oh, needed, platform.bram_bytes);
  }
  return std::nullopt;
}

LayerLatency simulate_layer(const LayerParams& layer, int t_oh, const PlatformModel& platform,
                            const LayerWorkload& workload, bool zero_skip) {
  layer.validate();
  platform.validate();
  if (t_oh < 1) {
    throw ParameterError(fmt::format("tiling factor must be >= 1, got {}", t_oh));
  }
  if (workload.nnz_per_out_channel.size() != static_cast<std::size_t>(layer.out_channels)) {
    throw ShapeError("workload does not cover every output channel");
  }
  if (auto reason = resource_violation(layer, t_oh, platform)) {
    throw InfeasibleDesign(*reason);
  }

  const int t_eff = std::min(t_oh, std::max(layer.out_height(), layer.out_width()));
  const OffsetTable offsets = compute_offsets(layer.kernel, layer.stride, layer.padding);
  const std::vector<TileSpec> tiles = make_tiles(layer, t_eff);

  struct TileCost {
    std::uint64_t read;
    std::uint64_t write;
    std::uint64_t input_words;
  };
  std::vector<TileCost> tile_costs;
  tile_costs.reserve(tiles.size());
  for (const TileSpec& tile : tiles) {
    const auto span = exact_input_span(tile, offsets, layer);
    const std::uint64_t words = span ? static_cast<std::uint64_t>(span->rows()) * span->cols() : 0;
    tile_costs.push_back({block_read_cycles(span, layer, platform), block_write_cycles(tile, platform), words});
  }

  const std::size_t cus = platform.num_cus;
  std::vector<std::vector<StageCycles>> per_cu(cus);
  LayerLatency report;
  const auto channels = static_cast<std::uint64_t>(layer.in_channels);
  const std::uint64_t weight_words = static_cast<std::uint64_t>(layer.kernel) * layer.kernel * channels;
  std::size_t block = 0;
  for (int oc = 0; oc < layer.out_channels; ++oc) {
    for (std::size_t t = 0; t < tiles.size(); ++t, ++block) {
      const StageCycles cost{
          tile_costs[t].read,
          block_compute_cycles(tiles[t], layer, workload.nnz_per_out_channel[oc], zero_skip, platform),
          tile_costs[t].write,
      };
      per_cu[block % cus].push_back(cost);
      const std::uint64_t out_words = static_cast<std::uint64_t>(tiles[t].height) * tiles[t].width;
      report.bytes_moved += (tile_costs[t].input_words * channels + weight_words + out_words) * platform.word_bytes;
    }
  }
  report.blocks = block;

  for (const auto& blocks : per_cu) {
    StageCycles totals;
    for (const StageCycles& b : blocks) {
      totals.read += b.read;
      totals.compute += b.compute;
      totals.write += b.write;
    }
    report.read_cycles = std::max(report.read_cycles, totals.read);
    report.compute_cycles = std::max(report.compute_cycles, totals.compute);
    report.write_cycles = std::max(report.write_cycles, totals.write);
    report.pipelined_cycles = std::max(report.pipelined_cycles, pipeline_cycles(blocks));
  }
  report.macs = workload.macs;
  report.seconds = static_cast<double>(report.pipelined_cycles) / static_cast<double>(platform.clock_hz);
  report.giga_ops = 2.0 * static_cast<double>(report.macs) / 1e9;
  report.effective_gops_per_s = report.seconds > 0.0 ? report.giga_ops / report.seconds : 0.0;
  return report;
}

double network_throughput(std::span<const LayerLatency> reports) {
  if (reports.empty()) {
    throw ParameterError("network_throughput needs at least one layer report");
  }
  double ops = 0.0;
  double seconds = 0.0;
  for (const LayerLatency& r : reports) {
    ops += r.giga_ops;
    seconds += r.seconds;
  }
  return ops / seconds;
}

}  // namespace revdeconv
