#include "revdeconv/netio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace revdeconv {
namespace {

constexpr std::uint16_t kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Little-endian encoding helpers.

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

void put_i32(std::string& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }

class Reader {
 public:
  Reader(std::string_view bytes, std::string_view what) : bytes_(bytes), what_(what) {}

  void expect_magic(std::string_view magic) {
    if (bytes_.substr(0, magic.size()) != magic) {
      throw FormatError(fmt::format("{}: bad magic, expected '{}'", what_, magic));
    }
    pos_ = magic.size();
  }

  std::uint16_t u16() {
    need(2);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += 2;
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }

  std::uint32_t u32() {
    need(4);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += 4;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }

  std::vector<std::int32_t> i32_array(std::size_t count) {
    if (count > (bytes_.size() - pos_) / 4) {
      throw FormatError(fmt::format("{}: truncated, needs {} more values", what_, count));
    }
    std::vector<std::int32_t> out(count);
    for (auto& v : out) v = static_cast<std::int32_t>(u32());
    return out;
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw FormatError(fmt::format("{}: {} trailing bytes", what_, bytes_.size() - pos_));
    }
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(fmt::format("{}: truncated at byte {}", what_, pos_));
    }
  }

  std::string_view bytes_;
  std::string_view what_;
  std::size_t pos_ = 0;
};

int checked_dim(std::uint32_t v, std::string_view what) {
  if (v == 0 || v > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw FormatError(fmt::format("{} has invalid value {}", what, v));
  }
  return static_cast<int>(v);
}

// ---------------------------------------------------------------------------
// Config parsing.

[[noreturn]] void schema_error(std::string_view source, const YAML::Node& node, const std::string& message) {
  const auto mark = node.Mark();
  throw FormatError(fmt::format("{}:{}: {}", source, mark.line + 1, message));
}

void reject_unknown_keys(std::string_view source, const YAML::Node& map, const std::set<std::string>& allowed) {
  for (const auto& item : map) {
    const auto key = item.first.as<std::string>();
    if (allowed.count(key) == 0) {
      schema_error(source, item.first, fmt::format("unknown key '{}'", key));
    }
  }
}

template <typename T>
T scalar(std::string_view source, const YAML::Node& parent, const char* key) {
  const YAML::Node node = parent[key];
  if (!node) {
    schema_error(source, parent, fmt::format("missing required key '{}'", key));
  }
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    schema_error(source, node, fmt::format("'{}' has the wrong type", key));
  }
}

template <typename T>
T scalar_or(std::string_view source, const YAML::Node& parent, const char* key, T fallback) {
  if (!parent[key]) return fallback;
  return scalar<T>(source, parent, key);
}

Activation parse_activation(std::string_view source, const YAML::Node& node) {
  const auto name = node.as<std::string>();
  if (name == "none") return Activation::none;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  schema_error(source, node, fmt::format("unknown activation '{}'", name));
}

PlatformModel parse_platform(std::string_view source, const YAML::Node& node) {
  reject_unknown_keys(source, node,
                      {"num_cus", "clock_hz", "ddr_bw_bytes_per_s", "word_bytes", "dsp_count", "dsp_per_cu",
                       "bram_bytes", "bias_init_cycles_per_pixel"});
  PlatformModel p;
  p.num_cus = scalar_or<std::uint32_t>(source, node, "num_cus", p.num_cus);
  p.clock_hz = scalar_or<std::uint64_t>(source, node, "clock_hz", p.clock_hz);
  p.ddr_bw_bytes_per_s = scalar_or<std::uint64_t>(source, node, "ddr_bw_bytes_per_s", p.ddr_bw_bytes_per_s);
  p.word_bytes = scalar_or<std::uint32_t>(source, node, "word_bytes", p.word_bytes);
  p.dsp_count = scalar_or<std::uint32_t>(source, node, "dsp_count", p.dsp_count);
  p.dsp_per_cu = scalar_or<std::uint32_t>(source, node, "dsp_per_cu", p.dsp_per_cu);
  p.bram_bytes = scalar_or<std::uint64_t>(source, node, "bram_bytes", p.bram_bytes);
  p.bias_init_cycles_per_pixel =
      scalar_or<std::uint32_t>(source, node, "bias_init_cycles_per_pixel", p.bias_init_cycles_per_pixel);
  try {
    p.validate();
  } catch (const ParameterError& e) {
    schema_error(source, node, e.what());
  }
  return p;
}

LayerConfig parse_layer(std::string_view source, const YAML::Node& node, std::size_t index) {
  if (!node.IsMap()) {
    schema_error(source, node, fmt::format("layer {} must be a mapping", index));
  }
  reject_unknown_keys(source, node, {"input", "out_channels", "kernel", "stride", "padding", "activation"});
  const YAML::Node input = node["input"];
  if (!input || !input.IsSequence() || input.size() != 3) {
    schema_error(source, input ? input : node, fmt::format("layer {}: 'input' must be [channels, height, width]", index));
  }
  LayerConfig layer;
  try {
    layer.params.in_channels = input[0].as<int>();
    layer.params.in_height = input[1].as<int>();
    layer.params.in_width = input[2].as<int>();
  } catch (const YAML::Exception&) {
    schema_error(source, input, fmt::format("layer {}: 'input' entries must be integers", index));
  }
  layer.params.out_channels = scalar<int>(source, node, "out_channels");
  layer.params.kernel = scalar<int>(source, node, "kernel");
  layer.params.stride = scalar_or<int>(source, node, "stride", 1);
  layer.params.padding = scalar_or<int>(source, node, "padding", 0);
  if (node["activation"]) {
    layer.activation = parse_activation(source, node["activation"]);
  }
  try {
    layer.params.validate();
  } catch (const ParameterError& e) {
    schema_error(source, node, fmt::format("layer {}: {}", index, e.what()));
  }
  return layer;
}

}  // namespace

std::string_view activation_name(Activation a) noexcept {
  switch (a) {
    case Activation::none:
      return "none";
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
  }
  return "unknown";
}

std::vector<LayerParams> NetworkConfig::layer_params() const {
  std::vector<LayerParams> out;
  out.reserve(layers.size());
  for (const LayerConfig& l : layers) out.push_back(l.params);
  return out;
}

void validate_chain(const std::vector<LayerConfig>& layers) {
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    const LayerParams& a = layers[i].params;
    const LayerParams& b = layers[i + 1].params;
    if (a.out_channels != b.in_channels || a.out_height() != b.in_height || a.out_width() != b.in_width) {
      throw ShapeError(fmt::format("layers {} and {} do not chain: layer {} produces {}x{}x{}, layer {} expects {}x{}x{}",
                                   i, i + 1, i, a.out_channels, a.out_height(), a.out_width(), i + 1, b.in_channels,
                                   b.in_height, b.in_width));
    }
  }
}

NetworkConfig parse_config(std::string_view text, const std::filesystem::path& base_dir, std::string_view source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw FormatError(fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg));
  }
  if (!root.IsMap()) {
    throw FormatError(fmt::format("{}: top level must be a mapping", source));
  }
  reject_unknown_keys(source, root, {"name", "frac_bits", "weights", "t_oh", "platform", "layers"});

  NetworkConfig config;
  config.name = scalar<std::string>(source, root, "name");
  config.format.frac_bits = scalar_or<int>(source, root, "frac_bits", 16);
  try {
    config.format.validate();
  } catch (const ParameterError& e) {
    schema_error(source, root["frac_bits"], e.what());
  }
  if (root["weights"]) {
    config.weights_path = base_dir / scalar<std::string>(source, root, "weights");
  }
  config.t_oh = scalar_or<int>(source, root, "t_oh", 0);
  if (config.t_oh < 0) {
    schema_error(source, root["t_oh"], "t_oh must be >= 0");
  }
  if (root["platform"]) {
    config.platform = parse_platform(source, root["platform"]);
  }
  const YAML::Node layers = root["layers"];
  if (!layers || !layers.IsSequence() || layers.size() == 0) {
    schema_error(source, layers ? layers : root, "'layers' must be a non-empty list");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    config.layers.push_back(parse_layer(source, layers[i], i));
  }
  try {
    validate_chain(config.layers);
  } catch (const ShapeError& e) {
    throw FormatError(fmt::format("{}: {}", source, e.what()));
  }
  return config;
}

NetworkConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.parent_path(), path.string());
}

std::string encode_weights(const std::vector<WeightTensor>& weights, FixedFormat fmt) {
  fmt.validate();
  std::string out = "RVDW";
  put_u16(out, kFormatVersion);
  put_u16(out, static_cast<std::uint16_t>(fmt.frac_bits));
  for (const WeightTensor& w : weights) {
    put_u32(out, static_cast<std::uint32_t>(w.in_channels()));
    put_u32(out, static_cast<std::uint32_t>(w.out_channels()));
    put_u32(out, static_cast<std::uint32_t>(w.kernel()));
    for (std::int32_t v : w.raw_weights()) put_i32(out, v);
    for (std::int32_t v : w.raw_bias()) put_i32(out, v);
  }
  return out;
}

std::vector<WeightTensor> decode_weights(std::string_view bytes, const NetworkConfig& config) {
  Reader in(bytes, "weights");
  in.expect_magic("RVDW");
  if (const auto version = in.u16(); version != kFormatVersion) {
    throw FormatError(fmt::format("weights: unsupported version {}", version));
  }
  if (const auto frac = in.u16(); frac != config.format.frac_bits) {
    throw FormatError(fmt::format("weights: stored with F={}, config uses F={}", frac, config.format.frac_bits));
  }
  std::vector<WeightTensor> out;
  out.reserve(config.layers.size());
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerParams& layer = config.layers[i].params;
    const int ic = checked_dim(in.u32(), "weights: in_channels");
    const int oc = checked_dim(in.u32(), "weights: out_channels");
    const int k = checked_dim(in.u32(), "weights: kernel");
    if (ic != layer.in_channels || oc != layer.out_channels || k != layer.kernel) {
      throw FormatError(fmt::format("weights: layer {} is {}x{}x{}, config expects {}x{}x{}", i, ic, oc, k,
                                    layer.in_channels, layer.out_channels, layer.kernel));
    }
    auto values = in.i32_array(static_cast<std::size_t>(ic) * oc * k * k);
    auto bias = in.i32_array(static_cast<std::size_t>(oc));
    out.emplace_back(ic, oc, k, std::move(values), std::move(bias));
  }
  in.expect_end();
  return out;
}

void save_weights(const std::filesystem::path& path, const std::vector<WeightTensor>& weights, FixedFormat fmt) {
  write_file(path, encode_weights(weights, fmt));
}

std::vector<WeightTensor> load_weights(const std::filesystem::path& path, const NetworkConfig& config) {
  return decode_weights(read_file(path), config);
}

std::string encode_feature_map(const FeatureMap& map) {
  std::string out = "RVDF";
  put_u32(out, static_cast<std::uint32_t>(map.channels()));
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  for (std::int32_t v : map.raw()) put_i32(out, v);
  return out;
}

FeatureMap decode_feature_map(std::string_view bytes) {
  Reader in(bytes, "feature map");
  in.expect_magic("RVDF");
  const int c = checked_dim(in.u32(), "feature map: channels");
  const int h = checked_dim(in.u32(), "feature map: height");
  const int w = checked_dim(in.u32(), "feature map: width");
  auto values = in.i32_array(static_cast<std::size_t>(c) * h * w);
  in.expect_end();
  return FeatureMap(c, h, w, std::move(values));
}

void save_feature_map(const std::filesystem::path& path, const FeatureMap& map) {
  write_file(path, encode_feature_map(map));
}

FeatureMap load_feature_map(const std::filesystem::path& path) { return decode_feature_map(read_file(path)); }

FeatureMap load_feature_map(const std::filesystem::path& path, MapDims expected) {
  FeatureMap map = load_feature_map(path);
  if (map.channels() != expected.channels || map.height() != expected.height || map.width() != expected.width) {
    throw ShapeError(fmt::format("{} is {}x{}x{}, expected {}x{}x{}", path.string(), map.channels(), map.height(),
                                 map.width(), expected.channels, expected.height, expected.width));
  }
  return map;
}

std::string encode_sample_set(const SampleSet& samples, FixedFormat fmt) {
  std::string out = "RVDS";
  put_u16(out, kFormatVersion);
  put_u16(out, static_cast<std::uint16_t>(fmt.frac_bits));
  put_u32(out, static_cast<std::uint32_t>(samples.count()));
  put_u32(out, static_cast<std::uint32_t>(samples.dim()));
  for (double v : samples.values()) put_i32(out, fx_from_real(v, fmt).raw);
  return out;
}

SampleSet decode_sample_set(std::string_view bytes, FixedFormat fmt) {
  Reader in(bytes, "sample set");
  in.expect_magic("RVDS");
  if (const auto version = in.u16(); version != kFormatVersion) {
    throw FormatError(fmt::format("sample set: unsupported version {}", version));
  }
  if (const auto frac = in.u16(); frac != fmt.frac_bits) {
    throw FormatError(fmt::format("sample set: stored with F={}, expected F={}", frac, fmt.frac_bits));
  }
  const auto n = static_cast<std::size_t>(checked_dim(in.u32(), "sample set: count"));
  const auto d = static_cast<std::size_t>(checked_dim(in.u32(), "sample set: dimension"));
  const auto raw = in.i32_array(n * d);
  in.expect_end();
  std::vector<double> values(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) values[i] = fx_to_real(Fixed32{raw[i]}, fmt);
  return SampleSet(n, d, std::move(values));
}

void save_sample_set(const std::filesystem::path& path, const SampleSet& samples, FixedFormat fmt) {
  write_file(path, encode_sample_set(samples, fmt));
}

SampleSet load_sample_set(const std::filesystem::path& path, FixedFormat fmt) {
  return decode_sample_set(read_file(path), fmt);
}

std::string feature_map_text(const FeatureMap& map, FixedFormat fmt) {
  std::string out;
  for (int c = 0; c < map.channels(); ++c) {
    for (int h = 0; h < map.height(); ++h) {
      for (int w = 0; w < map.width(); ++w) {
        out += fmt::format("{} {} {} {:.9g}\n", c, h, w, fx_to_real(map.at(c, h, w), fmt));
      }
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FileError(fmt::format("cannot open {}", path.string()));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FileError(fmt::format("cannot open {} for writing", path.string()));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw FileError(fmt::format("failed writing {}", path.string()));
  }
}

}  // namespace revdeconv
