#pragma once

#include <span>
#include <string>
#include <vector>

#include "revdeconv/accel_model.hpp"
#include "revdeconv/netio.hpp"
#include "revdeconv/network.hpp"
#include "revdeconv/sample_set.hpp"

namespace revdeconv {

/// floor(p * n), tolerant of p values like 0.3 that sit just below the decimal.
[[nodiscard]] std::size_t prune_count(std::size_t n, double p);

/// Zeroes the floor(p*N) smallest-magnitude weights of one tensor (biases
/// untouched); ties go to the lower flat index. Throws ParameterError unless p in [0, 1].
[[nodiscard]] WeightTensor prune_by_magnitude(const WeightTensor& w, double p);

/// Same ranking applied globally across every layer of a network.
[[nodiscard]] std::vector<WeightTensor> prune_network(const std::vector<WeightTensor>& weights, double p);

/// Median of all pairwise Euclidean distances (mean of the middle pair for an
/// even count). Throws DegenerateBandwidth when it is zero.
[[nodiscard]] double median_bandwidth(const SampleSet& ground_truth);

enum class MmdEstimator { biased, unbiased };

/// Squared MMD with the Gaussian kernel exp(-|x-y|^2 / (2 sigma^2)).
/// The biased (V-statistic) form averages every pair including the diagonal
/// and is never negative; the unbiased form drops the within-set diagonals.
[[nodiscard]] double mmd_squared(const SampleSet& x, const SampleSet& y, double sigma,
                                 MmdEstimator estimator = MmdEstimator::biased);

/// (d0 / dp) * (t0 / tp); equal distances count as ratio 1 even when both are 0.
[[nodiscard]] double tradeoff_metric(double d0, double dp, double t0, double tp);

struct SparsityPoint {
  double p = 0.0;
  double t_p = 0.0;  // seconds
  double d_p = 0.0;  // squared MMD to the ground truth
  double metric = 0.0;
};

/// Fills metric for every point relative to the p == 0 entry. Throws
/// ParameterError when there is no p == 0 point.
void apply_tradeoff_metric(std::vector<SparsityPoint>& points);

/// Sum of modelled layer latencies for the given weights with zero-skipping on.
[[nodiscard]] double modeled_network_seconds(const NetworkConfig& config, const std::vector<WeightTensor>& weights,
                                             int t_oh, const PlatformModel& platform, bool zero_skip = true);

struct SweepOptions {
  int t_oh = 0;  // 0 uses the config's factor, or one tile per layer if unset
  int workers = 1;
  simd::Isa isa = simd::Isa::scalar;
  MmdEstimator estimator = MmdEstimator::biased;
  bool wall_clock = false;  // time the host run instead of the model
};

struct SweepResult {
  std::vector<SparsityPoint> points;
  double argmax_p = 0.0;
  double sigma = 0.0;
};

/// For each p: prune globally, run the generator on the shared noise inputs
/// with zero-skipping, model the latency from the pruned sparsity, and measure
/// squared MMD against the ground truth. The grid must contain 0.
[[nodiscard]] SweepResult sparsity_sweep(const NetworkConfig& config, const std::vector<WeightTensor>& weights,
                                         const std::vector<FeatureMap>& noise_inputs, const SampleSet& ground_truth,
                                         std::span<const double> p_grid, const PlatformModel& platform,
                                         const SweepOptions& options);

/// CSV header: p,t_p_seconds,d_p_mmd2,metric
[[nodiscard]] std::string sweep_csv(std::span<const SparsityPoint> points);

/// Latency ratio t0/tp, quality ratio d0/dp and their product against p.
[[nodiscard]] std::string sweep_svg(std::span<const SparsityPoint> points, std::string_view title);

}  // namespace revdeconv
