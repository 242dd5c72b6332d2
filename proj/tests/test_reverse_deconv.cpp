#include <doctest.h>

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "revdeconv/errors.hpp"
#include "revdeconv/reference.hpp"
#include "revdeconv/reverse_deconv.hpp"
#include "support.hpp"

using namespace revdeconv;

namespace {

// Offset straight from the definition, with a hand-rolled non-negative modulo.
int offset_direct(int k, int s, int p) {
  auto m = [](int a, int n) { return ((a % n) + n) % n; };
  return m(s - m(p - k, s), s);
}

struct Span {
  int min_h = std::numeric_limits<int>::max(), max_h = -1, min_w = std::numeric_limits<int>::max(), max_w = -1;
  bool empty() const { return max_h < 0; }
};

// Forward scan: every input pixel and tap, keep the ones that land in the tile.
Span brute_span(const TileSpec& t, const LayerParams& l) {
  Span s;
  for (int ih = 0; ih < l.in_height; ++ih)
    for (int iw = 0; iw < l.in_width; ++iw)
      for (int kh = 0; kh < l.kernel; ++kh)
        for (int kw = 0; kw < l.kernel; ++kw) {
          const int oh = ih * l.stride + kh - l.padding;
          const int ow = iw * l.stride + kw - l.padding;
          if (oh < t.origin_h || oh >= t.origin_h + t.height || ow < t.origin_w || ow >= t.origin_w + t.width)
            continue;
          s.min_h = std::min(s.min_h, ih);
          s.max_h = std::max(s.max_h, ih);
          s.min_w = std::min(s.min_w, iw);
          s.max_w = std::max(s.max_w, iw);
        }
  return s;
}

std::vector<int> tilings(const LayerParams& l) {
  const int o = std::max(l.out_height(), l.out_width());
  std::vector<int> ts;
  for (int t : {1, 3, o - 1, o})
    if (t >= 1 && t <= o && std::find(ts.begin(), ts.end(), t) == ts.end()) ts.push_back(t);
  return ts;
}

}  // namespace

TEST_CASE("offset table examples") {
  const OffsetTable a = compute_offsets(5, 2, 2);
  CHECK(a.f_h == std::vector<int>{0, 1, 0, 1, 0});
  CHECK(a.f_w == a.f_h);
  CHECK(a.entries() == 10);
  CHECK(compute_offsets(3, 2, 0).f_h == std::vector<int>{0, 1, 0});
  for (int k = 1; k <= 7; ++k) {
    const auto t = compute_offsets(k, 1, k / 2);
    CHECK(std::all_of(t.f_h.begin(), t.f_h.end(), [](int f) { return f == 0; }));
  }
  CHECK_THROWS_AS((void)compute_offsets(3, 0, 0), ParameterError);
  CHECK_THROWS_AS((void)compute_offsets(0, 1, 0), ParameterError);
}

TEST_CASE("offsets exhaustive: direct evaluation and exact division") {
  for (int s = 1; s <= 8; ++s)
    for (int k = 1; k <= 7; ++k)
      for (int p = 0; p <= 6; ++p) {
        const OffsetTable t = compute_offsets(k, s, p);
        REQUIRE(t.entries() == static_cast<std::size_t>(2 * k));
        for (int tap = 0; tap < k; ++tap) {
          REQUIRE(t.f_h[tap] == offset_direct(tap, s, p));
          REQUIRE(t.f_w[tap] == t.f_h[tap]);
          for (int base = 0; base <= 8 * s; base += s) {
            REQUIRE((base + t.f_h[tap] + p - tap) % s == 0);
          }
        }
      }
}

TEST_CASE("input index examples") {
  CHECK(input_index(0 + 1, 1, 2, 2) == 1);
  CHECK(input_index(7, 0, 1, 0) == 7);
  CHECK(input_index(4 + 0, 2, 2, 2) == 2);
  CHECK(input_index(0, 3, 2, 1) == -1);  // negative but exact: caller clips
  CHECK_THROWS_AS((void)input_index(1, 0, 2, 0), std::logic_error);
}

TEST_CASE("tile input dimension examples") {
  CHECK(tile_input_dim(12, 2, 5) == 9);
  CHECK(tile_input_dim(24, 2, 5) == 15);
  CHECK(tile_input_dim(1, 1, 1) == 2);
}

TEST_CASE("tiles partition the output exactly once") {
  DeterministicRng rng(21);
  for (int n = 0; n < 200; ++n) {
    const LayerParams l = testing::random_layer(rng, 40, 2);
    const int o = std::max(l.out_height(), l.out_width());
    const int t = rng.uniform_int(1, o);
    std::vector<int> hits(static_cast<std::size_t>(l.out_height() * l.out_width()), 0);
    for (const TileSpec& tile : make_tiles(l, t)) {
      REQUIRE(tile.t_oh == t);
      REQUIRE(tile.t_ow == t);
      REQUIRE(tile.height >= 1);
      REQUIRE(tile.height <= t);
      REQUIRE(tile.width <= t);
      REQUIRE(tile.t_ih == tile_input_dim(t, l.stride, l.kernel) + 1);
      for (int h = 0; h < tile.height; ++h)
        for (int w = 0; w < tile.width; ++w) ++hits[(tile.origin_h + h) * l.out_width() + tile.origin_w + w];
    }
    REQUIRE(std::all_of(hits.begin(), hits.end(), [](int c) { return c == 1; }));
  }
}

TEST_CASE("exact input span matches a forward brute-force scan") {
  SUBCASE("identity geometry") {
    const LayerParams l{1, 8, 8, 1, 1, 1, 0};
    const TileSpec tile = make_tiles(l, 4).front();
    const auto span = exact_input_span(tile, compute_offsets(1, 1, 0), l);
    REQUIRE(span);
    CHECK(span->min_h == 0);
    CHECK(span->max_h == 3);
  }
  SUBCASE("K5 S2 P2, T=12") {
    const LayerParams l{1, 14, 14, 1, 5, 2, 2};
    const auto offsets = compute_offsets(5, 2, 2);
    for (const TileSpec& tile : make_tiles(l, 12)) {
      const auto span = exact_input_span(tile, offsets, l);
      const Span b = brute_span(tile, l);
      REQUIRE(span);
      CHECK(span->min_h == b.min_h);
      CHECK(span->max_h == b.max_h);
      CHECK(span->min_w == b.min_w);
      CHECK(span->max_w == b.max_w);
    }
  }
  SUBCASE("random geometries") {
    DeterministicRng rng(22);
    for (int n = 0; n < 300; ++n) {
      const LayerParams l = testing::random_layer(rng, 24, 1);
      const int t = rng.uniform_int(1, std::max(l.out_height(), l.out_width()));
      const auto offsets = compute_offsets(l.kernel, l.stride, l.padding);
      for (const TileSpec& tile : make_tiles(l, t)) {
        const auto span = exact_input_span(tile, offsets, l);
        const Span b = brute_span(tile, l);
        REQUIRE(span.has_value() == !b.empty());
        if (!span) continue;
        REQUIRE(span->min_h == b.min_h);
        REQUIRE(span->max_h == b.max_h);
        REQUIRE(span->min_w == b.min_w);
        REQUIRE(span->max_w == b.max_w);
      }
    }
  }
}

TEST_CASE("bias-only tile has no span") {
  // K=1, S=4: outputs between stride positions receive nothing
  const LayerParams l{1, 3, 3, 1, 1, 4, 0};
  const auto tiles = make_tiles(l, 1);
  const auto offsets = compute_offsets(1, 4, 0);
  CHECK(exact_input_span(tiles[0], offsets, l).has_value());
  CHECK_FALSE(exact_input_span(tiles[1], offsets, l).has_value());
}

TEST_CASE("span never exceeds the allocated capacity (500 configs)") {
  DeterministicRng rng(23);
  for (int n = 0; n < 500; ++n) {
    const LayerParams l = testing::random_layer(rng, 32, 1);
    const int t = rng.uniform_int(1, std::max(l.out_height(), l.out_width()));
    const auto offsets = compute_offsets(l.kernel, l.stride, l.padding);
    for (const TileSpec& tile : make_tiles(l, t)) {
      const auto span = exact_input_span(tile, offsets, l);
      if (!span) continue;
      REQUIRE(span->rows() <= tile_input_dim(t, l.stride, l.kernel) + 1);
      REQUIRE(span->cols() <= tile_input_dim(t, l.stride, l.kernel) + 1);
    }
  }
}

TEST_CASE("deconv_block examples") {
  const FixedFormat fmt{16};
  const auto kernel = simd::mac_row_kernel(simd::Isa::scalar);

  SUBCASE("zero weights with zero skipping leave the block alone") {
    const LayerParams l{1, 4, 4, 1, 3, 2, 1};
    DeterministicRng rng(1);
    const FeatureMap x = testing::random_map(1, 4, 4, rng);
    const TileSpec tile = make_tiles(l, l.out_height()).front();
    const auto offsets = compute_offsets(3, 2, 1);
    std::vector<std::int32_t> y(static_cast<std::size_t>(tile.height * tile.width), 42);
    const std::vector<std::int32_t> zeros(9, 0);
    OpCounter ops;
    deconv_block({x.raw(), 0, 0, 4, 4}, zeros, offsets, tile, l, true, fmt, kernel, {y, tile.height, tile.width}, ops);
    CHECK(std::all_of(y.begin(), y.end(), [](std::int32_t v) { return v == 42; }));
    CHECK(ops.macs_executed == 0);
    CHECK(ops.macs_skipped > 0);
  }

  SUBCASE("identity copies the co-located input") {
    const LayerParams l{1, 6, 6, 1, 1, 1, 0};
    DeterministicRng rng(2);
    const FeatureMap x = testing::random_map(1, 6, 6, rng);
    const auto tiles = make_tiles(l, 4);
    const auto offsets = compute_offsets(1, 1, 0);
    const std::vector<std::int32_t> one{1 << 16};
    for (const TileSpec& tile : tiles) {
      std::vector<std::int32_t> y(static_cast<std::size_t>(tile.height * tile.width), 0);
      OpCounter ops;
      deconv_block({x.raw(), 0, 0, 6, 6}, one, offsets, tile, l, true, fmt, kernel, {y, tile.height, tile.width},
                   ops);
      for (int r = 0; r < tile.height; ++r)
        for (int c = 0; c < tile.width; ++c)
          REQUIRE(y[r * tile.width + c] == x.at(0, tile.origin_h + r, tile.origin_w + c).raw);
    }
  }

  SUBCASE("random single-channel layer, every tile matches the oracle window") {
    DeterministicRng rng(3);
    for (int n = 0; n < 40; ++n) {
      LayerParams l = testing::random_layer(rng, 20, 1);
      l.in_channels = l.out_channels = 1;
      const FeatureMap x = testing::random_map(1, l.in_height, l.in_width, rng);
      WeightTensor w = testing::random_weights(l, rng);
      w.set_bias(0, {0});
      const FeatureMap ref = deconv_reference(x, w, l, fmt);
      const int t = rng.uniform_int(1, std::max(l.out_height(), l.out_width()));
      const auto offsets = compute_offsets(l.kernel, l.stride, l.padding);
      for (const TileSpec& tile : make_tiles(l, t)) {
        std::vector<std::int32_t> y(static_cast<std::size_t>(tile.height * tile.width), 0);
        OpCounter ops;
        deconv_block({x.raw(), 0, 0, l.in_height, l.in_width}, w.block(0, 0), offsets, tile, l, false, fmt, kernel,
                     {y, tile.height, tile.width}, ops);
        for (int r = 0; r < tile.height; ++r)
          for (int c = 0; c < tile.width; ++c)
            REQUIRE(y[r * tile.width + c] == ref.at(0, tile.origin_h + r, tile.origin_w + c).raw);
      }
    }
  }
}

TEST_CASE("deconv_layer equals the oracle on 200 random geometries at every tiling") {
  DeterministicRng rng(31);
  const FixedFormat fmt{16};
  for (int n = 0; n < 200; ++n) {
    const LayerParams l = testing::random_layer(rng);
    const FeatureMap x = testing::random_map(l.in_channels, l.in_height, l.in_width, rng);
    const WeightTensor w = testing::random_weights(l, rng);
    const FeatureMap ref = testing::gather_oracle(x, w, l, fmt.frac_bits);
    for (int t : tilings(l)) {
      DeconvOptions o;
      o.t_oh = t;
      REQUIRE_MESSAGE(deconv_layer(x, w, l, fmt, o).output == ref, l.describe(), " t=", t);
    }
  }
}

TEST_CASE("other fraction widths") {
  DeterministicRng rng(32);
  for (int f : {0, 8, 24, 31}) {
    for (int n = 0; n < 20; ++n) {
      const LayerParams l = testing::random_layer(rng, 16, 3);
      const FeatureMap x = testing::random_map(l.in_channels, l.in_height, l.in_width, rng, 1 << 30);
      const WeightTensor w = testing::random_weights(l, rng, 1 << 30);
      DeconvOptions o;
      o.t_oh = rng.uniform_int(1, std::max(l.out_height(), l.out_width()));
      REQUIRE(deconv_layer(x, w, l, {f}, o).output == testing::gather_oracle(x, w, l, f));
    }
  }
}

TEST_CASE("worker count does not change the output or the counters") {
  DeterministicRng rng(33);
  for (int n = 0; n < 20; ++n) {
    const LayerParams l = testing::random_layer(rng);
    const FeatureMap x = testing::random_map(l.in_channels, l.in_height, l.in_width, rng);
    const WeightTensor w = testing::random_weights(l, rng, 1 << 16, 0.3);
    DeconvOptions one;
    one.t_oh = rng.uniform_int(1, std::max(l.out_height(), l.out_width()));
    DeconvOptions eight = one;
    eight.workers = 8;
    const DeconvResult a = deconv_layer(x, w, l, {16}, one);
    const DeconvResult b = deconv_layer(x, w, l, {16}, eight);
    REQUIRE(a.output == b.output);
    REQUIRE(a.ops == b.ops);
  }
}

TEST_CASE("zero skipping changes counts, never values") {
  DeterministicRng rng(34);
  for (int n = 0; n < 60; ++n) {
    const LayerParams l = testing::random_layer(rng, 20, 4);
    const FeatureMap x = testing::random_map(l.in_channels, l.in_height, l.in_width, rng);
    const WeightTensor w = testing::random_weights(l, rng, 1 << 16, 0.5);
    DeconvOptions on;
    on.t_oh = rng.uniform_int(1, std::max(l.out_height(), l.out_width()));
    DeconvOptions off = on;
    off.zero_skip = false;
    const DeconvResult a = deconv_layer(x, w, l, {16}, on);
    const DeconvResult b = deconv_layer(x, w, l, {16}, off);
    REQUIRE(a.output == b.output);

    std::uint64_t zero_macs = 0;
    std::uint64_t all_macs = 0;
    for (int ic = 0; ic < l.in_channels; ++ic)
      for (int oc = 0; oc < l.out_channels; ++oc)
        for (int ih = 0; ih < l.in_height; ++ih)
          for (int iw = 0; iw < l.in_width; ++iw)
            for (int kh = 0; kh < l.kernel; ++kh)
              for (int kw = 0; kw < l.kernel; ++kw) {
                const int oh = ih * l.stride + kh - l.padding;
                const int ow = iw * l.stride + kw - l.padding;
                if (oh < 0 || oh >= l.out_height() || ow < 0 || ow >= l.out_width()) continue;
                ++all_macs;
                zero_macs += w.at(ic, oc, kh, kw).raw == 0 ? 1 : 0;
              }
    REQUIRE(a.ops.macs_skipped == zero_macs);
    REQUIRE(a.ops.macs_executed == all_macs - zero_macs);
    REQUIRE(b.ops.macs_skipped == 0);
    REQUIRE(b.ops.macs_executed == all_macs);
  }
}

TEST_CASE("corrupted offsets are caught") {
  const LayerParams l{2, 5, 5, 2, 4, 2, 1};
  DeterministicRng rng(35);
  const FeatureMap x = testing::random_map(2, 5, 5, rng);
  const WeightTensor w = testing::random_weights(l, rng);
  DeconvOptions o;
  o.corrupt_offsets = true;
  CHECK_THROWS_AS((void)deconv_layer(x, w, l, {16}, o), std::logic_error);
}

TEST_CASE("deconv_layer argument errors") {
  const LayerParams l{1, 3, 3, 1, 3, 1, 0};
  DeconvOptions o;
  o.t_oh = 6;
  CHECK_THROWS_AS((void)deconv_layer(FeatureMap(1, 3, 3), WeightTensor(1, 1, 3), l, {16}, o), ParameterError);
  o.t_oh = 0;
  CHECK_THROWS_AS((void)deconv_layer(FeatureMap(2, 3, 3), WeightTensor(1, 1, 3), l, {16}, o), ShapeError);
}
