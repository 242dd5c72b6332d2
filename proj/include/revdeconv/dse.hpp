#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "revdeconv/accel_model.hpp"

namespace revdeconv {

enum class Limit { compute, bandwidth, resource };

[[nodiscard]] std::string_view limit_name(Limit limit) noexcept;

/// One candidate global tiling factor on the roofline.
struct DesignPoint {
  int t_oh = 1;
  double ai = 0.0;               // ops per byte of external traffic
  double attainable_gops = 0.0;  // min(compute roof, bandwidth * ai), GOps/s
  bool feasible = true;
  Limit limiting = Limit::compute;
  std::string reason;  // why the point is infeasible, empty otherwise
};

/// Sum over layers of 2 * dense MACs divided by the sum of bytes moved at t_oh.
[[nodiscard]] double arithmetic_intensity(std::span<const LayerParams> layers, int t_oh,
                                          const PlatformModel& platform);

/// GOps/s the roofline allows at a given intensity.
[[nodiscard]] double roofline_attainable_gops(double ai, const PlatformModel& platform);

/// Largest output height over the layers; the default upper end of the search.
[[nodiscard]] int max_output_height(std::span<const LayerParams> layers);

/// One point per t_oh in [t_min, t_max]; infeasible candidates are kept and marked.
[[nodiscard]] std::vector<DesignPoint> enumerate_designs(std::span<const LayerParams> layers,
                                                         const PlatformModel& platform, int t_min, int t_max);

/// Feasible point with the highest attainable throughput, ties toward smaller
/// t_oh. Throws InfeasiblePlatform when no point is feasible.
[[nodiscard]] DesignPoint select_tiling(std::span<const DesignPoint> points);
[[nodiscard]] DesignPoint select_tiling(std::span<const LayerParams> layers, const PlatformModel& platform);

struct RooflineFiles {
  std::filesystem::path csv;
  std::filesystem::path svg;
};

/// CSV header: t_oh,ai_ops_per_byte,attainable_gops,feasible,limiting
[[nodiscard]] std::string roofline_csv(std::span<const DesignPoint> points);
[[nodiscard]] std::string roofline_svg(std::span<const DesignPoint> points, const PlatformModel& platform,
                                       std::string_view title);

/// Writes <dir>/<stem>.csv and <dir>/<stem>.svg. Throws FileError on I/O failure.
RooflineFiles emit_roofline(std::span<const DesignPoint> points, const PlatformModel& platform,
                            const std::filesystem::path& dir, std::string_view stem);

}  // namespace revdeconv
