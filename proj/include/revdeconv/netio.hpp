#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revdeconv/accel_model.hpp"
#include "revdeconv/sample_set.hpp"
#include "revdeconv/tensor.hpp"

namespace revdeconv {

enum class Activation { none, relu, tanh };

[[nodiscard]] std::string_view activation_name(Activation a) noexcept;

struct LayerConfig {
  LayerParams params;
  Activation activation = Activation::none;
};

/// A generator network: ordered deconvolution layers plus the platform it is
/// modelled on.
struct NetworkConfig {
  std::string name;
  FixedFormat format;
  std::vector<LayerConfig> layers;
  PlatformModel platform;
  std::filesystem::path weights_path;  // resolved against the config's directory; may be empty
  int t_oh = 0;                        // 0: not fixed, chosen by design space exploration

  [[nodiscard]] std::vector<LayerParams> layer_params() const;
};

/// Throws ShapeError naming the first pair of layers whose channels or spatial
/// dimensions do not chain.
void validate_chain(const std::vector<LayerConfig>& layers);

/// YAML network description; see README for the schema. Throws FormatError with
/// the offending line on syntax or schema errors.
[[nodiscard]] NetworkConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {},
                                         std::string_view source = "<config>");
[[nodiscard]] NetworkConfig load_config(const std::filesystem::path& path);

/// Little-endian layout: "RVDW", u16 version (1), u16 F, then per layer
/// u32 I_C, u32 O_C, u32 K, I_C*O_C*K*K i32 weights in [i_c][o_c][k_h][k_w]
/// order and O_C i32 biases.
[[nodiscard]] std::string encode_weights(const std::vector<WeightTensor>& weights, FixedFormat fmt);
[[nodiscard]] std::vector<WeightTensor> decode_weights(std::string_view bytes, const NetworkConfig& config);
void save_weights(const std::filesystem::path& path, const std::vector<WeightTensor>& weights, FixedFormat fmt);
[[nodiscard]] std::vector<WeightTensor> load_weights(const std::filesystem::path& path, const NetworkConfig& config);

/// "RVDF", u32 C, u32 H, u32 W, then C*H*W i32 values channel-major.
[[nodiscard]] std::string encode_feature_map(const FeatureMap& map);
[[nodiscard]] FeatureMap decode_feature_map(std::string_view bytes);
void save_feature_map(const std::filesystem::path& path, const FeatureMap& map);
[[nodiscard]] FeatureMap load_feature_map(const std::filesystem::path& path);

struct MapDims {
  int channels = 0;
  int height = 0;
  int width = 0;
};

/// Loads and throws ShapeError unless the dimensions match.
[[nodiscard]] FeatureMap load_feature_map(const std::filesystem::path& path, MapDims expected);

/// "RVDS", u16 version (1), u16 F, u32 n, u32 d, then n*d i32 fixed-point values.
[[nodiscard]] std::string encode_sample_set(const SampleSet& samples, FixedFormat fmt);
[[nodiscard]] SampleSet decode_sample_set(std::string_view bytes, FixedFormat fmt);
void save_sample_set(const std::filesystem::path& path, const SampleSet& samples, FixedFormat fmt);
[[nodiscard]] SampleSet load_sample_set(const std::filesystem::path& path, FixedFormat fmt);

/// One "c h w value" line per element, values de-quantised.
[[nodiscard]] std::string feature_map_text(const FeatureMap& map, FixedFormat fmt);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace revdeconv
