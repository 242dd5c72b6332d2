#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "revdeconv/fixed_point.hpp"

namespace revdeconv {

/// Channel-major activation map; element (c, h, w) lives at c*H*W + h*W + w.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int channels, int height, int width);
  FeatureMap(int channels, int height, int width, std::vector<std::int32_t> raw);

  [[nodiscard]] int channels() const noexcept { return channels_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  [[nodiscard]] std::size_t index(int c, int h, int w) const noexcept {
    return (static_cast<std::size_t>(c) * height_ + h) * width_ + w;
  }

  [[nodiscard]] Fixed32 at(int c, int h, int w) const { return {data_.at(index(c, h, w))}; }
  void set(int c, int h, int w, Fixed32 v) { data_.at(index(c, h, w)) = v.raw; }

  [[nodiscard]] std::span<const std::int32_t> raw() const noexcept { return data_; }
  [[nodiscard]] std::span<std::int32_t> raw() noexcept { return data_; }
  [[nodiscard]] std::span<const std::int32_t> plane(int c) const noexcept {
    return std::span<const std::int32_t>(data_).subspan(index(c, 0, 0), plane_size());
  }
  [[nodiscard]] std::span<std::int32_t> plane(int c) noexcept {
    return std::span<std::int32_t>(data_).subspan(index(c, 0, 0), plane_size());
  }
  [[nodiscard]] std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height_) * width_;
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<std::int32_t> data_;
};

/// Deconvolution weights indexed [i_c][o_c][k_h][k_w] plus one bias per output channel.
class WeightTensor {
 public:
  WeightTensor() = default;
  WeightTensor(int in_channels, int out_channels, int kernel);
  WeightTensor(int in_channels, int out_channels, int kernel, std::vector<std::int32_t> weights,
               std::vector<std::int32_t> bias);

  [[nodiscard]] int in_channels() const noexcept { return in_channels_; }
  [[nodiscard]] int out_channels() const noexcept { return out_channels_; }
  [[nodiscard]] int kernel() const noexcept { return kernel_; }

  [[nodiscard]] std::size_t index(int ic, int oc, int kh, int kw) const noexcept {
    return ((static_cast<std::size_t>(ic) * out_channels_ + oc) * kernel_ + kh) * kernel_ + kw;
  }
  [[nodiscard]] Fixed32 at(int ic, int oc, int kh, int kw) const { return {weights_.at(index(ic, oc, kh, kw))}; }
  void set(int ic, int oc, int kh, int kw, Fixed32 v) { weights_.at(index(ic, oc, kh, kw)) = v.raw; }
  [[nodiscard]] Fixed32 bias(int oc) const { return {bias_.at(static_cast<std::size_t>(oc))}; }
  void set_bias(int oc, Fixed32 v) { bias_.at(static_cast<std::size_t>(oc)) = v.raw; }

  /// K*K taps for one (i_c, o_c) pair, row-major.
  [[nodiscard]] std::span<const std::int32_t> block(int ic, int oc) const noexcept {
    return std::span<const std::int32_t>(weights_).subspan(index(ic, oc, 0, 0),
                                                           static_cast<std::size_t>(kernel_) * kernel_);
  }

  [[nodiscard]] std::span<const std::int32_t> raw_weights() const noexcept { return weights_; }
  [[nodiscard]] std::span<std::int32_t> raw_weights() noexcept { return weights_; }
  [[nodiscard]] std::span<const std::int32_t> raw_bias() const noexcept { return bias_; }
  [[nodiscard]] std::span<std::int32_t> raw_bias() noexcept { return bias_; }

  friend bool operator==(const WeightTensor&, const WeightTensor&) = default;

 private:
  int in_channels_ = 0;
  int out_channels_ = 0;
  int kernel_ = 0;
  std::vector<std::int32_t> weights_;
  std::vector<std::int32_t> bias_;
};

/// Geometry of one transposed-convolution layer.
struct LayerParams {
  int in_channels = 1;
  int in_height = 1;
  int in_width = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int padding = 0;

  /// (I - 1) * S + K - 2P
  [[nodiscard]] int out_height() const noexcept { return (in_height - 1) * stride + kernel - 2 * padding; }
  [[nodiscard]] int out_width() const noexcept { return (in_width - 1) * stride + kernel - 2 * padding; }

  /// Throws ParameterError when any dimension is out of range.
  void validate() const;

  /// Throws ShapeError unless x and w match this geometry.
  void check_operands(const FeatureMap& x, const WeightTensor& w) const;

  [[nodiscard]] std::string describe() const;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

}  // namespace revdeconv
