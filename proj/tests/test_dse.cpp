#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "revdeconv/dse.hpp"
#include "revdeconv/errors.hpp"
#include "revdeconv/netio.hpp"
#include "support.hpp"

using namespace revdeconv;

// Recorded from the first verified run of the MNIST config.
constexpr double MNIST_AI_T12_GOLDEN = 1.6916062282144593;

namespace {

std::vector<LayerParams> mnist() { return load_config(testing::config_path("mnist_dcgan.cfg")).layer_params(); }
std::vector<LayerParams> celeba() { return load_config(testing::config_path("celeba_dcgan.cfg")).layer_params(); }

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("arithmetic intensity") {
  const auto layers = mnist();
  const PlatformModel pm;
  const double ai12 = arithmetic_intensity(layers, 12, pm);
  MESSAGE("MNIST AI at T_OH=12: ", ai12);
  CHECK(ai12 == doctest::Approx(MNIST_AI_T12_GOLDEN).epsilon(1e-12));
  const int top = max_output_height(layers);
  CHECK(top == 28);
  for (const auto& net : {mnist(), celeba()}) {
    const int o = max_output_height(net);
    const double best = arithmetic_intensity(net, o, pm);
    for (int t = 1; t <= o; ++t) {
      REQUIRE(arithmetic_intensity(net, t, pm) <= best);
      if (2 * t <= o) REQUIRE(arithmetic_intensity(net, t, pm) <= arithmetic_intensity(net, 2 * t, pm));
    }
    // factors beyond the largest output behave like one tile per layer
    CHECK(arithmetic_intensity(net, o + 5, pm) == best);
  }
  CHECK_THROWS_AS((void)arithmetic_intensity(layers, 0, pm), ParameterError);
}

TEST_CASE("AI is 2 * MACs over traffic for a one-layer network") {
  const LayerParams l{3, 5, 5, 2, 3, 2, 1};
  const std::vector<LayerParams> net{l};
  const PlatformModel pm;
  for (int t = 1; t <= 9; ++t) {
    CHECK(arithmetic_intensity(net, t, pm) ==
          2.0 * static_cast<double>(dense_macs(l)) / static_cast<double>(layer_bytes_moved(l, t, pm)));
  }
}

TEST_CASE("roofline law and classification at every point") {
  DeterministicRng rng(1);
  for (int n = 0; n < 40; ++n) {
    PlatformModel pm;
    pm.ddr_bw_bytes_per_s = static_cast<std::uint64_t>(rng.uniform_int(1, 8000)) * 1'000'000ULL;
    pm.bram_bytes = static_cast<std::uint64_t>(rng.uniform_int(20, 700)) * 1024;
    const auto net = n % 2 ? mnist() : celeba();
    const auto points = enumerate_designs(net, pm, 1, max_output_height(net));
    REQUIRE(points.size() == static_cast<std::size_t>(max_output_height(net)));
    const double roof = pm.compute_roof_ops_per_s();
    for (const DesignPoint& p : points) {
      REQUIRE(p.attainable_gops == std::min(roof, static_cast<double>(pm.ddr_bw_bytes_per_s) * p.ai) / 1e9);
      if (!p.feasible) {
        REQUIRE(p.limiting == Limit::resource);
        REQUIRE(!p.reason.empty());
      } else if (static_cast<double>(pm.ddr_bw_bytes_per_s) * p.ai < roof) {
        REQUIRE(p.limiting == Limit::bandwidth);
      } else {
        REQUIRE(p.limiting == Limit::compute);
      }
      // feasibility is pointwise
      const auto alone = enumerate_designs(net, pm, p.t_oh, p.t_oh);
      REQUIRE(alone.size() == 1);
      REQUIRE(alone[0].feasible == p.feasible);
    }
  }
}

TEST_CASE("select_tiling is the brute-force argmax and ignores order") {
  DeterministicRng rng(2);
  for (int n = 0; n < 60; ++n) {
    PlatformModel pm;
    pm.ddr_bw_bytes_per_s = static_cast<std::uint64_t>(rng.uniform_int(1, 8000)) * 1'000'000ULL;
    pm.bram_bytes = static_cast<std::uint64_t>(rng.uniform_int(30, 700)) * 1024;
    const auto net = n % 2 ? mnist() : celeba();
    auto points = enumerate_designs(net, pm, 1, max_output_height(net));
    const DesignPoint* best = nullptr;
    for (const DesignPoint& p : points) {
      if (!p.feasible) continue;
      if (!best || p.attainable_gops > best->attainable_gops) best = &p;  // first max = smallest t
    }
    if (!best) {
      CHECK_THROWS_AS((void)select_tiling(points), InfeasiblePlatform);
      continue;
    }
    const int expect = best->t_oh;
    REQUIRE(select_tiling(points).t_oh == expect);
    for (int shuffle = 0; shuffle < 3; ++shuffle) {
      for (std::size_t i = points.size(); i > 1; --i) {
        std::swap(points[i - 1], points[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
      }
      REQUIRE(select_tiling(points).t_oh == expect);
    }
    REQUIRE(select_tiling(net, pm).t_oh == expect);
  }
}

TEST_CASE("select_tiling edge cases") {
  std::vector<DesignPoint> pts(3);
  pts[0] = {4, 1.0, 2.0, false, Limit::resource, "x"};
  pts[1] = {7, 1.0, 1.5, true, Limit::bandwidth, ""};
  pts[2] = {9, 1.0, 1.0, true, Limit::bandwidth, ""};
  CHECK(select_tiling(pts).t_oh == 7);
  pts[2].attainable_gops = 1.5;
  CHECK(select_tiling(pts).t_oh == 7);
  std::swap(pts[1], pts[2]);
  CHECK(select_tiling(pts).t_oh == 7);
  const std::vector<DesignPoint> single{pts[2]};
  CHECK(select_tiling(single).t_oh == pts[2].t_oh);
  pts[1].feasible = pts[2].feasible = false;
  CHECK_THROWS_AS((void)select_tiling(pts), InfeasiblePlatform);
  PlatformModel tiny;
  tiny.bram_bytes = 16;
  CHECK_THROWS_AS((void)select_tiling(mnist(), tiny), InfeasiblePlatform);
  CHECK_THROWS_AS((void)enumerate_designs(mnist(), PlatformModel{}, 5, 4), ParameterError);
  CHECK(enumerate_designs(mnist(), PlatformModel{}, 5, 5).size() == 1);
}

TEST_CASE("roofline reports") {
  const auto net = mnist();
  const PlatformModel pm;
  const auto points = enumerate_designs(net, pm, 1, 28);
  const std::string csv = roofline_csv(points);
  CHECK(csv.rfind("t_oh,ai_ops_per_byte,attainable_gops,feasible,limiting\n", 0) == 0);
  CHECK(count_of(csv, "\n") == points.size() + 1);
  const std::string svg = roofline_svg(points, pm, "mnist");
  CHECK(count_of(svg, "<circle class=\"point\"") == points.size());
  CHECK(count_of(svg, "class=\"roof\"") == 1);

  const auto dir = testing::scratch_dir("dse");
  const RooflineFiles a = emit_roofline(points, pm, dir / "a", "r");
  const RooflineFiles b = emit_roofline(enumerate_designs(net, pm, 1, 28), pm, dir / "b", "r");
  CHECK(read_file(a.csv) == read_file(b.csv));
  CHECK(read_file(a.svg) == read_file(b.svg));
  CHECK(read_file(a.csv) == csv);
  // a regular file where a directory is expected
  write_file(dir / "blocker", "x");
  CHECK_THROWS_AS((void)emit_roofline(points, pm, dir / "blocker" / "sub", "r"), FileError);
}
