#include "revdeconv/network.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "revdeconv/rng.hpp"

namespace revdeconv {
namespace {

Fixed32 quantise_clamped(double v, FixedFormat fmt) {
  const double limit = std::ldexp(1.0, 31 - fmt.frac_bits) * 0.999;
  return fx_from_real(std::clamp(v, -limit, limit), fmt);
}

template <typename Draw>
std::vector<WeightTensor> draw_weights(const NetworkConfig& config, std::uint64_t seed, Draw&& draw) {
  DeterministicRng rng(seed);
  std::vector<WeightTensor> out;
  out.reserve(config.layers.size());
  for (const LayerConfig& lc : config.layers) {
    const LayerParams& l = lc.params;
    const double fan_in =
        std::max(1.0, static_cast<double>(l.in_channels) * l.kernel * l.kernel / (static_cast<double>(l.stride) * l.stride));
    const double scale = 1.0 / std::sqrt(fan_in);
    WeightTensor w(l.in_channels, l.out_channels, l.kernel);
    for (std::int32_t& v : w.raw_weights()) v = quantise_clamped(draw(rng) * scale, config.format).raw;
    for (std::int32_t& v : w.raw_bias()) v = quantise_clamped(0.05 * rng.normal(), config.format).raw;
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

void apply_activation(FeatureMap& map, Activation activation, FixedFormat fmt) {
  switch (activation) {
    case Activation::none:
      return;
    case Activation::relu:
      for (std::int32_t& v : map.raw()) v = std::max(v, 0);
      return;
    case Activation::tanh:
      for (std::int32_t& v : map.raw()) v = fx_from_real(std::tanh(fx_to_real(Fixed32{v}, fmt)), fmt).raw;
      return;
  }
}

int layer_tiling(const LayerParams& layer, int t_oh) noexcept {
  const int full = std::max(layer.out_height(), layer.out_width());
  return t_oh <= 0 ? full : std::min(t_oh, full);
}

NetworkRun run_network(const NetworkConfig& config, const std::vector<WeightTensor>& weights, const FeatureMap& input,
                       const RunOptions& options) {
  if (weights.size() != config.layers.size()) {
    throw ShapeError(fmt::format("network has {} layers but {} weight tensors", config.layers.size(), weights.size()));
  }
  NetworkRun run;
  FeatureMap current = input;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerConfig& lc = config.layers[i];
    DeconvOptions opts;
    opts.t_oh = layer_tiling(lc.params, options.t_oh);
    opts.zero_skip = options.zero_skip;
    opts.workers = options.workers;
    opts.isa = options.isa;
    opts.corrupt_offsets = options.corrupt_offsets;
    DeconvResult result = deconv_layer(current, weights[i], lc.params, config.format, opts);
    apply_activation(result.output, lc.activation, config.format);
    run.layer_ops.push_back(result.ops);
    current = std::move(result.output);
  }
  run.output = std::move(current);
  return run;
}

std::vector<WeightTensor> random_weights(const NetworkConfig& config, std::uint64_t seed, double gain) {
  return draw_weights(config, seed, [gain](DeterministicRng& rng) { return gain * rng.normal(); });
}

std::vector<WeightTensor> laplace_weights(const NetworkConfig& config, std::uint64_t seed, double gain) {
  // Laplace(b) has variance 2b^2; match the Gaussian variance.
  return draw_weights(config, seed, [gain](DeterministicRng& rng) { return rng.laplace(gain / std::sqrt(2.0)); });
}

FeatureMap random_latent(const NetworkConfig& config, std::uint64_t seed) {
  const LayerParams& first = config.layers.front().params;
  DeterministicRng rng(seed);
  FeatureMap z(first.in_channels, first.in_height, first.in_width);
  for (std::int32_t& v : z.raw()) v = quantise_clamped(rng.normal(), config.format).raw;
  return z;
}

FeatureMap random_feature_map(int channels, int height, int width, FixedFormat fmt, std::uint64_t seed) {
  DeterministicRng rng(seed);
  FeatureMap map(channels, height, width);
  for (std::int32_t& v : map.raw()) v = fx_from_real(2.0 * rng.uniform() - 1.0, fmt).raw;
  return map;
}

std::vector<FeatureMap> latent_batch(const NetworkConfig& config, std::uint64_t seed, std::size_t count) {
  std::vector<FeatureMap> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_latent(config, seed + i));
  return out;
}

SampleSet generate_samples(const NetworkConfig& config, const std::vector<WeightTensor>& weights,
                           const std::vector<FeatureMap>& inputs, const RunOptions& options) {
  SampleSet samples;
  std::vector<double> flat;
  for (const FeatureMap& z : inputs) {
    const NetworkRun run = run_network(config, weights, z, options);
    flat.resize(run.output.size());
    const auto raw = run.output.raw();
    for (std::size_t i = 0; i < raw.size(); ++i) flat[i] = fx_to_real(Fixed32{raw[i]}, config.format);
    samples.push_back(flat);
  }
  return samples;
}

}  // namespace revdeconv
