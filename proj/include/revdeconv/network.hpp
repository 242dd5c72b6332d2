#pragma once

#include <cstdint>
#include <vector>

#include "revdeconv/netio.hpp"
#include "revdeconv/reverse_deconv.hpp"
#include "revdeconv/sample_set.hpp"

namespace revdeconv {

/// relu: max(0, x) on raw values; tanh: de-quantise, std::tanh, re-quantise.
void apply_activation(FeatureMap& map, Activation activation, FixedFormat fmt);

struct RunOptions {
  int t_oh = 0;  // global tiling factor, clipped per layer; 0 uses one tile per layer
  bool zero_skip = true;
  int workers = 1;
  simd::Isa isa = simd::Isa::scalar;
  bool corrupt_offsets = false;
};

struct NetworkRun {
  FeatureMap output;
  std::vector<OpCounter> layer_ops;
};

/// Feeds input through every layer with deconv_layer, applying each layer's activation.
[[nodiscard]] NetworkRun run_network(const NetworkConfig& config, const std::vector<WeightTensor>& weights,
                                     const FeatureMap& input, const RunOptions& options);

/// Tiling factor actually used for a layer when the network-wide factor is t_oh.
[[nodiscard]] int layer_tiling(const LayerParams& layer, int t_oh) noexcept;

/// Gaussian weights with standard deviation gain / sqrt(I_C * K^2 / S^2) and
/// small Gaussian biases, quantised to the network format.
[[nodiscard]] std::vector<WeightTensor> random_weights(const NetworkConfig& config, std::uint64_t seed,
                                                       double gain = 1.0);

/// Heavy-tailed (Laplace) weights, so most of the mass sits in a few large taps.
[[nodiscard]] std::vector<WeightTensor> laplace_weights(const NetworkConfig& config, std::uint64_t seed,
                                                        double gain = 1.0);

/// Standard normal latent vector shaped as the first layer's input.
[[nodiscard]] FeatureMap random_latent(const NetworkConfig& config, std::uint64_t seed);

/// Random map of the given shape with values uniform in [-1, 1).
[[nodiscard]] FeatureMap random_feature_map(int channels, int height, int width, FixedFormat fmt,
                                            std::uint64_t seed);

/// `count` latent inputs drawn from consecutive seeds starting at `seed`.
[[nodiscard]] std::vector<FeatureMap> latent_batch(const NetworkConfig& config, std::uint64_t seed, std::size_t count);

/// De-quantised, flattened network outputs for a batch of inputs.
[[nodiscard]] SampleSet generate_samples(const NetworkConfig& config, const std::vector<WeightTensor>& weights,
                                         const std::vector<FeatureMap>& inputs, const RunOptions& options);

}  // namespace revdeconv
