#include <doctest.h>

#include <string>
#include <vector>

#include "revdeconv/errors.hpp"
#include "revdeconv/netio.hpp"
#include "revdeconv/network.hpp"
#include "support.hpp"

using namespace revdeconv;
using namespace std::string_literals;

namespace {

const char* kSmall = R"(name: small
frac_bits: 12
t_oh: 3
platform:
  num_cus: 4
  ddr_bw_bytes_per_s: 2000000000
layers:
  - {input: [3, 2, 2], out_channels: 2, kernel: 3, stride: 2, padding: 1, activation: relu}
  - {input: [2, 3, 3], out_channels: 1, kernel: 4, stride: 2, padding: 1}
)";

template <class Fn>
std::string error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config parsing") {
  const NetworkConfig c = parse_config(kSmall, "/base");
  CHECK(c.name == "small");
  CHECK(c.format.frac_bits == 12);
  CHECK(c.t_oh == 3);
  CHECK(c.platform.num_cus == 4);
  CHECK(c.platform.ddr_bw_bytes_per_s == 2000000000ULL);
  CHECK(c.platform.clock_hz == PlatformModel{}.clock_hz);
  REQUIRE(c.layers.size() == 2);
  CHECK(c.layers[0].params == LayerParams{3, 2, 2, 2, 3, 2, 1});
  CHECK(c.layers[0].activation == Activation::relu);
  CHECK(c.layers[1].activation == Activation::none);
  CHECK(c.weights_path.empty());
}

TEST_CASE("shipped configs load") {
  const NetworkConfig m = load_config(testing::config_path("mnist_dcgan.cfg"));
  CHECK(m.layers.size() == 3);
  CHECK(m.layers.front().params.in_channels == 100);
  CHECK(m.layers.back().params.out_height() == 28);
  CHECK(m.layers.back().params.out_channels == 1);
  const NetworkConfig c = load_config(testing::config_path("celeba_dcgan.cfg"));
  CHECK(c.layers.size() == 5);
  CHECK(c.layers.back().params.out_height() == 64);
  CHECK(c.layers.back().params.out_channels == 3);
  const NetworkConfig t = load_config(testing::config_path("toy_generator.cfg"));
  CHECK(t.weights_path == testing::config_path("toy_generator.rvdw"));
}

TEST_CASE("config errors carry a line number") {
  std::string bad = kSmall;
  bad.replace(bad.find("out_channels: 2"), 15, "out_channels: 5");
  const std::string chain = error_of([&] { (void)parse_config(bad, {}, "net.cfg"); });
  CHECK(chain.find("layers 0 and 1") != std::string::npos);

  const std::string unknown = error_of([&] { (void)parse_config("name: x\nfrobnicate: 1\nlayers: []\n", {}, "a.cfg"); });
  CHECK(unknown.find("a.cfg:2") != std::string::npos);

  const std::string syntax = error_of([&] { (void)parse_config("name: x\nlayers: [\n  - {", {}, "b.cfg"); });
  CHECK(syntax.find("b.cfg:") != std::string::npos);

  std::string neg = kSmall;
  neg.replace(neg.find("stride: 2"), 9, "stride: 0");
  const std::string geom = error_of([&] { (void)parse_config(neg, {}, "c.cfg"); });
  CHECK(geom.find("c.cfg:8") != std::string::npos);

  CHECK_THROWS_AS((void)parse_config("name: x\nlayers: []\n"), FormatError);
  std::string wide = kSmall;
  wide.replace(wide.find("frac_bits: 12"), 13, "frac_bits: 40");
  CHECK(error_of([&] { (void)parse_config(wide, {}, "d.cfg"); }).find("d.cfg:2") != std::string::npos);
  CHECK_THROWS_AS((void)load_config("/nonexistent/x.cfg"), FileError);
}

TEST_CASE("weights round trip") {
  const NetworkConfig c = parse_config(kSmall);
  const auto w = random_weights(c, 3);
  const std::string bytes = encode_weights(w, c.format);
  CHECK(bytes.substr(0, 4) == "RVDW");
  CHECK(decode_weights(bytes, c) == w);
  CHECK(encode_weights(decode_weights(bytes, c), c.format) == bytes);

  const auto dir = testing::scratch_dir("netio_w");
  save_weights(dir / "w.rvdw", w, c.format);
  CHECK(load_weights(dir / "w.rvdw", c) == w);

  for (std::size_t cut : {0UL, 3UL, 8UL, 20UL, bytes.size() - 1}) {
    CHECK_THROWS_AS((void)decode_weights(bytes.substr(0, cut), c), FormatError);
  }
  CHECK_THROWS_AS((void)decode_weights(bytes + "x", c), FormatError);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS((void)decode_weights(magic, c), FormatError);
  NetworkConfig other = c;
  other.format.frac_bits = 16;
  CHECK_THROWS_AS((void)decode_weights(bytes, other), FormatError);
  NetworkConfig reshaped = c;
  reshaped.layers[1].params.kernel = 3;
  reshaped.layers[1].params.padding = 0;  // keeps the output non-empty
  CHECK_THROWS_AS((void)decode_weights(bytes, reshaped), FormatError);
}

TEST_CASE("feature map byte layout") {
  // 1x2x2 with values 1, -1, 0x01020304, 0 written by hand
  const std::string expect = "RVDF"s + "\x01\0\0\0"s + "\x02\0\0\0"s + "\x02\0\0\0"s + "\x01\0\0\0"s +
                             "\xff\xff\xff\xff"s + "\x04\x03\x02\x01"s + "\0\0\0\0"s;
  const FeatureMap m(1, 2, 2, {1, -1, 0x01020304, 0});
  CHECK(encode_feature_map(m) == expect);
  CHECK(decode_feature_map(expect) == m);
}

TEST_CASE("feature map round trips and errors") {
  DeterministicRng rng(4);
  const auto dir = testing::scratch_dir("netio_f");
  for (int n = 0; n < 50; ++n) {
    const FeatureMap m = testing::random_map(rng.uniform_int(1, 4), rng.uniform_int(1, 9), rng.uniform_int(1, 9), rng,
                                             1 << 30);
    REQUIRE(decode_feature_map(encode_feature_map(m)) == m);
  }
  const FeatureMap m(2, 3, 1, {1, 2, 3, 4, 5, 6});
  save_feature_map(dir / "m.rvdf", m);
  CHECK(load_feature_map(dir / "m.rvdf") == m);
  CHECK(load_feature_map(dir / "m.rvdf", {2, 3, 1}) == m);
  CHECK_THROWS_AS((void)load_feature_map(dir / "m.rvdf", {2, 1, 3}), ShapeError);
  const std::string bytes = encode_feature_map(m);
  CHECK_THROWS_AS((void)decode_feature_map(bytes.substr(0, bytes.size() - 2)), FormatError);
  CHECK_THROWS_AS((void)decode_feature_map(bytes + "\0"s), FormatError);
  CHECK_THROWS_AS((void)load_feature_map(dir / "missing.rvdf"), FileError);
  CHECK(feature_map_text(FeatureMap(1, 1, 2, {65536, -32768}), {16}) == "0 0 0 1\n0 0 1 -0.5\n");
}

TEST_CASE("sample set round trip") {
  const SampleSet s(3, 2, {0.5, -1.25, 2.0, 0.0, 1.0 / 65536.0, -3.0});
  const std::string bytes = encode_sample_set(s, {16});
  CHECK(bytes.substr(0, 4) == "RVDS");
  const SampleSet back = decode_sample_set(bytes, {16});
  CHECK(back.count() == 3);
  CHECK(back.dim() == 2);
  CHECK(std::equal(back.values().begin(), back.values().end(), s.values().begin()));
  CHECK_THROWS_AS((void)decode_sample_set(bytes, {12}), FormatError);
  CHECK_THROWS_AS((void)decode_sample_set(bytes.substr(0, 20), {16}), FormatError);
}

TEST_CASE("shipped toy fixture matches its config") {
  const NetworkConfig c = load_config(testing::config_path("toy_generator.cfg"));
  const auto w = load_weights(c.weights_path, c);
  CHECK(w.size() == 2);
  const SampleSet gt = load_sample_set(testing::config_path("toy_generator_gt.rvds"), c.format);
  CHECK(gt.count() == 512);
  CHECK(gt.dim() == 196);
}
