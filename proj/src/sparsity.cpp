#include "revdeconv/sparsity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace revdeconv {
namespace {

void check_fraction(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParameterError(fmt::format("pruning fraction must be in [0, 1], got {}", p));
  }
}

std::int64_t magnitude(std::int32_t v) { return std::abs(static_cast<std::int64_t>(v)); }

// Flat positions of the `count` smallest magnitudes, ties toward lower index.
std::vector<std::size_t> smallest_positions(const std::vector<std::int32_t>& values, std::size_t count) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto by_magnitude = [&](std::size_t a, std::size_t b) {
    const auto ma = magnitude(values[a]);
    const auto mb = magnitude(values[b]);
    return ma != mb ? ma < mb : a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(), by_magnitude);
  order.resize(count);
  return order;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

// Sum of k(a_i, b_j) over all pairs; skip_diagonal drops i == j.
double kernel_sum(const SampleSet& a, const SampleSet& b, double inv_two_sigma_sq, bool skip_diagonal) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.count(); ++i) {
    const auto ai = a.sample(i);
    for (std::size_t j = 0; j < b.count(); ++j) {
      if (skip_diagonal && i == j) continue;
      sum += std::exp(-squared_distance(ai, b.sample(j)) * inv_two_sigma_sq);
    }
  }
  return sum;
}

}  // namespace

std::size_t prune_count(std::size_t n, double p) {
  check_fraction(p);
  const double exact = p * static_cast<double>(n);
  const auto count = static_cast<std::size_t>(std::floor(exact + 1e-9 * std::max(1.0, exact)));
  return std::min(count, n);
}

WeightTensor prune_by_magnitude(const WeightTensor& w, double p) {
  std::vector<WeightTensor> single{w};
  return std::move(prune_network(single, p).front());
}

std::vector<WeightTensor> prune_network(const std::vector<WeightTensor>& weights, double p) {
  check_fraction(p);
  std::vector<std::int32_t> flat;
  for (const WeightTensor& w : weights) {
    const auto raw = w.raw_weights();
    flat.insert(flat.end(), raw.begin(), raw.end());
  }
  for (std::size_t pos : smallest_positions(flat, prune_count(flat.size(), p))) {
    flat[pos] = 0;
  }
  std::vector<WeightTensor> out = weights;
  std::size_t offset = 0;
  for (WeightTensor& w : out) {
    auto raw = w.raw_weights();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), raw.size(), raw.begin());
    offset += raw.size();
  }
  return out;
}

double median_bandwidth(const SampleSet& ground_truth) {
  const std::size_t n = ground_truth.count();
  if (n < 2) {
    throw ParameterError("median bandwidth needs at least two samples");
  }
  std::vector<double> distances;
  distances.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      distances.push_back(std::sqrt(squared_distance(ground_truth.sample(i), ground_truth.sample(j))));
    }
  }
  const std::size_t mid = distances.size() / 2;
  std::nth_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(mid), distances.end());
  double median = distances[mid];
  if (distances.size() % 2 == 0) {
    const double lower = *std::max_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  if (median <= 0.0) {
    throw DegenerateBandwidth("median pairwise distance of the ground truth is zero");
  }
  return median;
}

double mmd_squared(const SampleSet& x, const SampleSet& y, double sigma, MmdEstimator estimator) {
  if (x.dim() != y.dim()) {
    throw ShapeError(fmt::format("sample dimensions differ: {} vs {}", x.dim(), y.dim()));
  }
  if (!(sigma > 0.0)) {
    throw ParameterError(fmt::format("kernel bandwidth must be positive, got {}", sigma));
  }
  const auto nx = static_cast<double>(x.count());
  const auto ny = static_cast<double>(y.count());
  if (x.count() == 0 || y.count() == 0) {
    throw ParameterError("MMD needs non-empty sample sets");
  }
  const double inv = 1.0 / (2.0 * sigma * sigma);
  if (estimator == MmdEstimator::biased) {
    const double xx = kernel_sum(x, x, inv, false) / (nx * nx);
    const double yy = kernel_sum(y, y, inv, false) / (ny * ny);
    const double xy = kernel_sum(x, y, inv, false) / (nx * ny);
    // A squared RKHS norm; clamp the rounding residue that can dip below zero.
    return std::max(0.0, xx + yy - 2.0 * xy);
  }
  if (x.count() < 2 || y.count() < 2) {
    throw ParameterError("the unbiased MMD estimator needs at least two samples per set");
  }
  const double xx = kernel_sum(x, x, inv, true) / (nx * (nx - 1.0));
  const double yy = kernel_sum(y, y, inv, true) / (ny * (ny - 1.0));
  const double xy = kernel_sum(x, y, inv, false) / (nx * ny);
  return xx + yy - 2.0 * xy;
}

double tradeoff_metric(double d0, double dp, double t0, double tp) {
  const double quality = d0 == dp ? 1.0 : d0 / dp;
  const double speed = t0 == tp ? 1.0 : t0 / tp;
  return quality * speed;
}

void apply_tradeoff_metric(std::vector<SparsityPoint>& points) {
  const auto base = std::find_if(points.begin(), points.end(), [](const SparsityPoint& s) { return s.p == 0.0; });
  if (base == points.end()) {
    throw ParameterError("the sparsity grid must include p = 0 as the baseline");
  }
  const double d0 = base->d_p;
  const double t0 = base->t_p;
  for (SparsityPoint& s : points) s.metric = tradeoff_metric(d0, s.d_p, t0, s.t_p);
}

double modeled_network_seconds(const NetworkConfig& config, const std::vector<WeightTensor>& weights, int t_oh,
                               const PlatformModel& platform, bool zero_skip) {
  double seconds = 0.0;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerParams& layer = config.layers[i].params;
    const LayerWorkload load = workload_from_weights(layer, weights.at(i));
    seconds += simulate_layer(layer, layer_tiling(layer, t_oh), platform, load, zero_skip).seconds;
  }
  return seconds;
}

SweepResult sparsity_sweep(const NetworkConfig& config, const std::vector<WeightTensor>& weights,
                           const std::vector<FeatureMap>& noise_inputs, const SampleSet& ground_truth,
                           std::span<const double> p_grid, const PlatformModel& platform,
                           const SweepOptions& options) {
  if (std::find(p_grid.begin(), p_grid.end(), 0.0) == p_grid.end()) {
    throw ParameterError("the sparsity grid must include p = 0 as the baseline");
  }
  if (noise_inputs.empty()) {
    throw ParameterError("the sweep needs at least one noise input");
  }
  const int t_oh = options.t_oh > 0 ? options.t_oh : config.t_oh;

  SweepResult result;
  result.sigma = median_bandwidth(ground_truth);
  RunOptions run;
  run.t_oh = t_oh;
  run.zero_skip = true;
  run.workers = options.workers;
  run.isa = options.isa;

  for (double p : p_grid) {
    const std::vector<WeightTensor> pruned = prune_network(weights, p);
    const auto start = std::chrono::steady_clock::now();
    const SampleSet generated = generate_samples(config, pruned, noise_inputs, run);
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    SparsityPoint point;
    point.p = p;
    point.t_p = options.wall_clock ? elapsed : modeled_network_seconds(config, pruned, t_oh, platform, true);
    point.d_p = mmd_squared(generated, ground_truth, result.sigma, options.estimator);
    result.points.push_back(point);
  }
  apply_tradeoff_metric(result.points);

  const auto best = std::max_element(result.points.begin(), result.points.end(),
                                     [](const SparsityPoint& a, const SparsityPoint& b) {
                                       return a.metric < b.metric || (a.metric == b.metric && a.p > b.p);
                                     });
  result.argmax_p = best->p;
  return result;
}

std::string sweep_csv(std::span<const SparsityPoint> points) {
  std::string out = "p,t_p_seconds,d_p_mmd2,metric\n";
  for (const SparsityPoint& s : points) {
    out += fmt::format("{:.6g},{:.9g},{:.9g},{:.9g}\n", s.p, s.t_p, s.d_p, s.metric);
  }
  return out;
}

std::string sweep_svg(std::span<const SparsityPoint> points, std::string_view title) {
  constexpr double width = 640.0;
  constexpr double height = 420.0;
  constexpr double left = 60.0;
  constexpr double right = 130.0;
  constexpr double top = 40.0;
  constexpr double bottom = 50.0;

  const auto base = std::find_if(points.begin(), points.end(), [](const SparsityPoint& s) { return s.p == 0.0; });
  const double t0 = base != points.end() ? base->t_p : 1.0;
  const double d0 = base != points.end() ? base->d_p : 1.0;

  struct Series {
    const char* name;
    const char* color;
    std::vector<double> values;
  };
  std::vector<Series> series{{"latency ratio t0/tp", "steelblue", {}},
                             {"quality ratio d0/dp", "darkorange", {}},
                             {"trade-off metric", "green", {}}};
  double y_max = 1.0;
  for (const SparsityPoint& s : points) {
    series[0].values.push_back(s.t_p > 0.0 ? t0 / s.t_p : 0.0);
    series[1].values.push_back(s.d_p > 0.0 ? d0 / s.d_p : 1.0);
    series[2].values.push_back(std::isfinite(s.metric) ? s.metric : 0.0);
    for (const Series& ser : series) y_max = std::max(y_max, ser.values.back());
  }
  auto px = [&](double p) { return left + p * (width - left - right); };
  auto py = [&](double v) { return height - bottom - v / (y_max * 1.05) * (height - top - bottom); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
      "viewBox=\"0 0 {0:.0f} {1:.0f}\">\n",
      width, height);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += fmt::format("<text x=\"{:.1f}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
                     (left + width - right) / 2, title);
  svg += fmt::format(
      "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"black\"/>\n"
      "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{3:.1f}\" stroke=\"black\"/>\n",
      left, height - bottom, width - right, top);
  svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"12\" text-anchor=\"middle\">pruned fraction p</text>\n",
                     (left + width - right) / 2, height - 12);
  for (std::size_t k = 0; k < series.size(); ++k) {
    std::string coords;
    for (std::size_t i = 0; i < points.size(); ++i) {
      coords += fmt::format("{}{:.2f},{:.2f}", i == 0 ? "" : " ", px(points[i].p), py(series[k].values[i]));
    }
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", series[k].color,
                       coords);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"11\" fill=\"{}\">{}</text>\n", width - right + 8,
                       top + 20.0 * static_cast<double>(k + 1), series[k].color, series[k].name);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace revdeconv
