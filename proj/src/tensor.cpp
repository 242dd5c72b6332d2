#include "revdeconv/tensor.hpp"

#include <fmt/format.h>

namespace revdeconv {
namespace {

void require_positive(int value, const char* what) {
  if (value < 1) {
    throw ParameterError(fmt::format("{} must be >= 1, got {}", what, value));
  }
}

}  // namespace

FeatureMap::FeatureMap(int channels, int height, int width)
    : FeatureMap(channels, height, width,
                 std::vector<std::int32_t>(static_cast<std::size_t>(channels < 0 ? 0 : channels) *
                                           static_cast<std::size_t>(height < 0 ? 0 : height) *
                                           static_cast<std::size_t>(width < 0 ? 0 : width))) {}

FeatureMap::FeatureMap(int channels, int height, int width, std::vector<std::int32_t> raw)
    : channels_(channels), height_(height), width_(width), data_(std::move(raw)) {
  require_positive(channels, "channels");
  require_positive(height, "height");
  require_positive(width, "width");
  const auto expected = static_cast<std::size_t>(channels) * height * width;
  if (data_.size() != expected) {
    throw ShapeError(fmt::format("feature map {}x{}x{} needs {} values, got {}", channels, height, width, expected,
                                 data_.size()));
  }
}

WeightTensor::WeightTensor(int in_channels, int out_channels, int kernel)
    : WeightTensor(in_channels, out_channels, kernel,
                   std::vector<std::int32_t>(static_cast<std::size_t>(in_channels < 0 ? 0 : in_channels) *
                                             static_cast<std::size_t>(out_channels < 0 ? 0 : out_channels) *
                                             static_cast<std::size_t>(kernel < 0 ? 0 : kernel) *
                                             static_cast<std::size_t>(kernel < 0 ? 0 : kernel)),
                   std::vector<std::int32_t>(static_cast<std::size_t>(out_channels < 0 ? 0 : out_channels))) {}

WeightTensor::WeightTensor(int in_channels, int out_channels, int kernel, std::vector<std::int32_t> weights,
                           std::vector<std::int32_t> bias)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {
  require_positive(in_channels, "in_channels");
  require_positive(out_channels, "out_channels");
  require_positive(kernel, "kernel");
  const auto expected = static_cast<std::size_t>(in_channels) * out_channels * kernel * kernel;
  if (weights_.size() != expected) {
    throw ShapeError(fmt::format("weight tensor {}x{}x{}x{} needs {} values, got {}", in_channels, out_channels, kernel,
                                 kernel, expected, weights_.size()));
  }
  if (bias_.size() != static_cast<std::size_t>(out_channels)) {
    throw ShapeError(fmt::format("bias needs {} values, got {}", out_channels, bias_.size()));
  }
}

void LayerParams::validate() const {
  require_positive(in_channels, "in_channels");
  require_positive(in_height, "in_height");
  require_positive(in_width, "in_width");
  require_positive(out_channels, "out_channels");
  require_positive(kernel, "kernel");
  require_positive(stride, "stride");
  if (padding < 0) {
    throw ParameterError(fmt::format("padding must be >= 0, got {}", padding));
  }
  if (out_height() < 1 || out_width() < 1) {
    throw ParameterError(fmt::format("layer {} has an empty output", describe()));
  }
}

void LayerParams::check_operands(const FeatureMap& x, const WeightTensor& w) const {
  if (x.channels() != in_channels || x.height() != in_height || x.width() != in_width) {
    throw ShapeError(fmt::format("input is {}x{}x{}, layer expects {}x{}x{}", x.channels(), x.height(), x.width(),
                                 in_channels, in_height, in_width));
  }
  if (w.in_channels() != in_channels || w.out_channels() != out_channels || w.kernel() != kernel) {
    throw ShapeError(fmt::format("weights are {}x{}x{}x{}, layer expects {}x{}x{}x{}", w.in_channels(),
                                 w.out_channels(), w.kernel(), w.kernel(), in_channels, out_channels, kernel, kernel));
  }
}

std::string LayerParams::describe() const {
  return fmt::format("{}x{}x{} -> {}x{}x{} (K={} S={} P={})", in_channels, in_height, in_width, out_channels,
                     out_height(), out_width(), kernel, stride, padding);
}

}  // namespace revdeconv
