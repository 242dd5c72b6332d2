#include "revdeconv/reference.hpp"

namespace revdeconv {

FeatureMap deconv_reference(const FeatureMap& x, const WeightTensor& w, const LayerParams& layer, FixedFormat fmt,
                            ReferenceStats* stats) {
  layer.validate();
  fmt.validate();
  layer.check_operands(x, w);

  const int out_h = layer.out_height();
  const int out_w = layer.out_width();
  FeatureMap y(layer.out_channels, out_h, out_w);
  for (int oc = 0; oc < layer.out_channels; ++oc) {
    for (int h = 0; h < out_h; ++h) {
      for (int v = 0; v < out_w; ++v) {
        y.set(oc, h, v, w.bias(oc));
      }
    }
  }

  ReferenceStats counts;
  for (int ic = 0; ic < layer.in_channels; ++ic) {
    for (int oc = 0; oc < layer.out_channels; ++oc) {
      for (int ih = 0; ih < layer.in_height; ++ih) {
        for (int iw = 0; iw < layer.in_width; ++iw) {
          const Fixed32 xv = x.at(ic, ih, iw);
          for (int kh = 0; kh < layer.kernel; ++kh) {
            for (int kw = 0; kw < layer.kernel; ++kw) {
              const int oh = ih * layer.stride + kh - layer.padding;
              const int ow = iw * layer.stride + kw - layer.padding;
              if (oh < 0 || oh >= out_h || ow < 0 || ow >= out_w) {
                ++counts.clipped;
                continue;
              }
              y.set(oc, oh, ow, fx_mac(y.at(oc, oh, ow), w.at(ic, oc, kh, kw), xv, fmt));
              ++counts.scattered;
            }
          }
        }
      }
    }
  }
  if (stats != nullptr) {
    *stats = counts;
  }
  return y;
}

}  // namespace revdeconv
