#include "revdeconv/dse.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "revdeconv/netio.hpp"

namespace revdeconv {

std::string_view limit_name(Limit limit) noexcept {
  switch (limit) {
    case Limit::compute:
      return "compute";
    case Limit::bandwidth:
      return "bandwidth";
    case Limit::resource:
      return "resource";
  }
  return "unknown";
}

double arithmetic_intensity(std::span<const LayerParams> layers, int t_oh, const PlatformModel& platform) {
  if (t_oh < 1) {
    throw ParameterError(fmt::format("tiling factor must be >= 1, got {}", t_oh));
  }
  double ops = 0.0;
  double bytes = 0.0;
  for (const LayerParams& layer : layers) {
    ops += 2.0 * static_cast<double>(dense_macs(layer));
    bytes += static_cast<double>(layer_bytes_moved(layer, t_oh, platform));
  }
  return bytes > 0.0 ? ops / bytes : 0.0;
}

double roofline_attainable_gops(double ai, const PlatformModel& platform) {
  return std::min(platform.compute_roof_ops_per_s(), static_cast<double>(platform.ddr_bw_bytes_per_s) * ai) / 1e9;
}

int max_output_height(std::span<const LayerParams> layers) {
  int out = 1;
  for (const LayerParams& layer : layers) out = std::max(out, layer.out_height());
  return out;
}

std::vector<DesignPoint> enumerate_designs(std::span<const LayerParams> layers, const PlatformModel& platform,
                                           int t_min, int t_max) {
  platform.validate();
  if (layers.empty()) {
    throw ParameterError("design space exploration needs at least one layer");
  }
  if (t_min < 1 || t_max < t_min) {
    throw ParameterError(fmt::format("empty tiling range [{}, {}]", t_min, t_max));
  }
  std::vector<DesignPoint> points;
  points.reserve(static_cast<std::size_t>(t_max - t_min + 1));
  for (int t = t_min; t <= t_max; ++t) {
    DesignPoint point;
    point.t_oh = t;
    point.ai = arithmetic_intensity(layers, t, platform);
    point.attainable_gops = roofline_attainable_gops(point.ai, platform);
    for (const LayerParams& layer : layers) {
      if (auto reason = resource_violation(layer, t, platform)) {
        point.feasible = false;
        point.reason = *reason;
        break;
      }
    }
    if (!point.feasible) {
      point.limiting = Limit::resource;
    } else if (static_cast<double>(platform.ddr_bw_bytes_per_s) * point.ai < platform.compute_roof_ops_per_s()) {
      point.limiting = Limit::bandwidth;
    } else {
      point.limiting = Limit::compute;
    }
    points.push_back(std::move(point));
  }
  return points;
}

DesignPoint select_tiling(std::span<const DesignPoint> points) {
  const DesignPoint* best = nullptr;
  for (const DesignPoint& p : points) {
    if (!p.feasible) continue;
    if (best == nullptr || p.attainable_gops > best->attainable_gops ||
        (p.attainable_gops == best->attainable_gops && p.t_oh < best->t_oh)) {
      best = &p;
    }
  }
  if (best == nullptr) {
    throw InfeasiblePlatform("no candidate tiling factor fits the platform");
  }
  return *best;
}

DesignPoint select_tiling(std::span<const LayerParams> layers, const PlatformModel& platform) {
  const auto points = enumerate_designs(layers, platform, 1, max_output_height(layers));
  return select_tiling(points);
}

std::string roofline_csv(std::span<const DesignPoint> points) {
  std::string out = "t_oh,ai_ops_per_byte,attainable_gops,feasible,limiting\n";
  for (const DesignPoint& p : points) {
    out += fmt::format("{},{:.9g},{:.9g},{},{}\n", p.t_oh, p.ai, p.attainable_gops, p.feasible ? 1 : 0,
                       limit_name(p.limiting));
  }
  return out;
}

std::string roofline_svg(std::span<const DesignPoint> points, const PlatformModel& platform, std::string_view title) {
  constexpr double width = 640.0;
  constexpr double height = 420.0;
  constexpr double left = 70.0;
  constexpr double right = 20.0;
  constexpr double top = 40.0;
  constexpr double bottom = 50.0;

  const double roof = platform.compute_roof_ops_per_s() / 1e9;
  const double bw_gbs = static_cast<double>(platform.ddr_bw_bytes_per_s) / 1e9;
  double ai_lo = roof / bw_gbs;
  double ai_hi = ai_lo;
  double y_lo = roof;
  for (const DesignPoint& p : points) {
    if (p.ai > 0.0) {
      ai_lo = std::min(ai_lo, p.ai);
      ai_hi = std::max(ai_hi, p.ai);
      y_lo = std::min(y_lo, p.attainable_gops);
    }
  }
  const double x0 = std::log10(ai_lo) - 0.2;
  const double x1 = std::log10(ai_hi) + 0.2;
  const double y0 = std::log10(y_lo) - 0.2;
  const double y1 = std::log10(roof) + 0.2;
  auto px = [&](double ai) { return left + (std::log10(ai) - x0) / (x1 - x0) * (width - left - right); };
  auto py = [&](double gops) { return height - bottom - (std::log10(gops) - y0) / (y1 - y0) * (height - top - bottom); };

  std::optional<int> chosen;
  try {
    chosen = select_tiling(points).t_oh;
  } catch (const InfeasiblePlatform&) {
  }

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
      "viewBox=\"0 0 {0:.0f} {1:.0f}\">\n",
      width, height);
  svg += fmt::format("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
  svg += fmt::format("<text x=\"{:.1f}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n", width / 2,
                     title);
  svg += fmt::format(
      "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"black\"/>\n"
      "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{3:.1f}\" stroke=\"black\"/>\n",
      left, height - bottom, width - right, top);
  svg += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"12\" text-anchor=\"middle\">arithmetic intensity (ops/byte, "
      "log)</text>\n",
      (left + width - right) / 2, height - 12);
  svg += fmt::format(
      "<text x=\"16\" y=\"{:.1f}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1f})\">"
      "attainable GOps/s (log)</text>\n",
      (top + height - bottom) / 2, (top + height - bottom) / 2);

  // Bandwidth slope up to the ridge point, then the flat compute roof.
  const double ridge = roof / bw_gbs;
  const double slope_start = std::pow(10.0, x0);
  svg += fmt::format(
      "<polyline class=\"roof\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" "
      "points=\"{:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f}\"/>\n",
      px(slope_start), py(bw_gbs * slope_start), px(ridge), py(roof), px(std::pow(10.0, x1)), py(roof));

  for (const DesignPoint& p : points) {
    if (p.ai <= 0.0) continue;
    const bool is_best = chosen == p.t_oh;
    const char* color = is_best ? "green" : (p.feasible ? "gray" : "red");
    svg += fmt::format(
        "<circle class=\"point\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\" fill=\"{}\"><title>T_OH={} AI={:.4g} "
        "{:.4g} GOps/s {}</title></circle>\n",
        px(p.ai), py(p.attainable_gops), is_best ? 6 : 3, color, p.t_oh, p.ai, p.attainable_gops,
        limit_name(p.limiting));
  }
  svg += "</svg>\n";
  return svg;
}


RooflineFiles emit_roofline(std::span<const DesignPoint> points, const PlatformModel& platform,
                            const std::filesystem::path& dir, std::string_view stem) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw FileError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  }
  RooflineFiles files{dir / fmt::format("{}.csv", stem), dir / fmt::format("{}.svg", stem)};
  write_file(files.csv, roofline_csv(points));
  write_file(files.svg, roofline_svg(points, platform, stem));
  return files;
}

}  // namespace revdeconv
