#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "revdeconv/reverse_deconv.hpp"
#include "revdeconv/tensor.hpp"

namespace revdeconv {

/// Accelerator platform parameters. Defaults describe a PYNQ-Z2-class part
/// with 16 CUs at 125 MHz; the sustainable DDR bandwidth is a measured input.
struct PlatformModel {
  std::uint32_t num_cus = 16;
  std::uint64_t clock_hz = 125'000'000;
  std::uint64_t ddr_bw_bytes_per_s = 1'000'000'000;
  std::uint32_t word_bytes = 4;
  std::uint32_t dsp_count = 220;
  std::uint32_t dsp_per_cu = 8;
  std::uint64_t bram_bytes = 630 * 1024;
  /// Per-block bias initialisation cost, cycles per output pixel.
  std::uint32_t bias_init_cycles_per_pixel = 1;

  /// Throws ParameterError unless every field is strictly positive.
  void validate() const;

  /// One MAC per CU per cycle, two ops per MAC.
  [[nodiscard]] double compute_roof_ops_per_s() const noexcept {
    return static_cast<double>(num_cus) * static_cast<double>(clock_hz) * 2.0;
  }
};

/// Weight sparsity summary of one layer as seen by the model.
struct LayerWorkload {
  std::vector<std::uint64_t> nnz_per_out_channel;  // non-zero taps over all i_c, per o_c
  std::uint64_t macs = 0;  // multiply-accumulates that land inside the output, non-zero taps only
};

/// Every weight treated as non-zero.
[[nodiscard]] LayerWorkload dense_workload(const LayerParams& layer);
[[nodiscard]] LayerWorkload workload_from_weights(const LayerParams& layer, const WeightTensor& w);

/// Valid MACs of a layer if every weight were non-zero.
[[nodiscard]] std::uint64_t dense_macs(const LayerParams& layer);

/// ceil(bytes * clock / bandwidth), exact in integer arithmetic. Throws RangeError past 2^64 cycles.
[[nodiscard]] std::uint64_t transfer_cycles(std::uint64_t bytes, const PlatformModel& platform);

/// Input window (rows x cols x I_C words, nothing for an empty span) plus the
/// K*K*I_C weight block, each converted to cycles separately.
[[nodiscard]] std::uint64_t block_read_cycles(const std::optional<InputSpan>& span, const LayerParams& layer,
                                              const PlatformModel& platform);

/// (zero_skip ? nnz : I_C*K^2) * ceil(h/S) * ceil(w/S) + bias initialisation.
[[nodiscard]] std::uint64_t block_compute_cycles(const TileSpec& tile, const LayerParams& layer,
                                                 std::uint64_t nnz_weights, bool zero_skip,
                                                 const PlatformModel& platform);

[[nodiscard]] std::uint64_t block_write_cycles(const TileSpec& tile, const PlatformModel& platform);

/// Stage latencies of one block on a CU.
struct StageCycles {
  std::uint64_t read = 0;
  std::uint64_t compute = 0;
  std::uint64_t write = 0;
};

/// Completion time of a read -> compute -> write pipeline fed the blocks in
/// order. Each stage starts a block once it has finished the previous block
/// and the upstream stage has finished this one.
[[nodiscard]] std::uint64_t pipeline_cycles(std::span<const StageCycles> blocks);

/// External traffic of one layer at tiling factor t_oh: cached input windows
/// (re-fetched per block), K*K*I_C weights per block and one write per output.
[[nodiscard]] std::uint64_t layer_bytes_moved(const LayerParams& layer, int t_oh, const PlatformModel& platform);

/// Per-layer estimate. Stage totals are those of the busiest CU for each stage.
struct LayerLatency {
  std::uint64_t read_cycles = 0;
  std::uint64_t compute_cycles = 0;
  std::uint64_t write_cycles = 0;
  std::uint64_t pipelined_cycles = 0;
  std::uint64_t blocks = 0;
  std::uint64_t macs = 0;
  std::uint64_t bytes_moved = 0;
  double seconds = 0.0;
  double giga_ops = 0.0;
  double effective_gops_per_s = 0.0;
};

/// nullopt when t_oh fits the platform; otherwise the reason it does not.
/// BRAM: num_cus * (T_IH^2 + K^2 + T_OH^2) * word_bytes <= bram_bytes with the
/// allocated T_IH; DSP: num_cus * dsp_per_cu <= dsp_count.
[[nodiscard]] std::optional<std::string> resource_violation(const LayerParams& layer, int t_oh,
                                                            const PlatformModel& platform);

/// Blocks ordered (o_c, tile) and dealt round-robin to CUs; layer time is the
/// slowest CU. Tiles larger than the output are clipped to it. Throws
/// InfeasibleDesign when the resource check fails.
[[nodiscard]] LayerLatency simulate_layer(const LayerParams& layer, int t_oh, const PlatformModel& platform,
                                          const LayerWorkload& workload, bool zero_skip);

/// Sum of giga_ops over sum of seconds. Throws ParameterError on an empty list.
[[nodiscard]] double network_throughput(std::span<const LayerLatency> reports);

}  // namespace revdeconv
