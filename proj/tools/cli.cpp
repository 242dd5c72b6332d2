#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "revdeconv/dse.hpp"
#include "revdeconv/errors.hpp"
#include "revdeconv/netio.hpp"
#include "revdeconv/network.hpp"
#include "revdeconv/reference.hpp"
#include "revdeconv/reverse_deconv.hpp"
#include "revdeconv/sparsity.hpp"

namespace revdeconv::cli {
namespace fs = std::filesystem;

namespace {

struct InferArgs {
  std::string config, weights, input, output, text_output, isa = "auto";
  int t_oh = -1;
  bool zero_skip = true;
  int workers = 1;
};

struct VerifyArgs {
  std::string config, weights, report, isa = "auto";
  int trials = 2;
  int geometries = 200;
  std::uint64_t seed = 1;
  int workers = 1;
  bool corrupt_offsets = false;
};

struct DseArgs {
  std::string config, out = ".";
  int t_min = 1;
  int t_max = 0;
  double bw = 0.0;
};

struct SparsityArgs {
  std::string config, weights, ground_truth, grid = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9", out = ".";
  std::string isa = "auto";
  std::size_t samples = 512;
  std::uint64_t seed = 1;
  int t_oh = 0;
  int workers = 1;
  bool unbiased = false;
  bool wall_clock = false;
};

struct BenchArgs {
  std::string config, weights, isa = "auto";
  int repeat = 5;
  int t_oh = -1;
  int workers = 1;
  std::uint64_t seed = 1;
};

struct FixtureArgs {
  std::string config, weights_out, gt_out, input_out, dist = "gaussian";
  std::uint64_t seed = 7;
  std::uint64_t gt_seed = 1000000;
  std::size_t samples = 512;
  double gain = 1.0;
};

std::vector<WeightTensor> weights_for(const NetworkConfig& config, const std::string& path, std::uint64_t seed) {
  if (!path.empty()) return load_weights(path, config);
  if (!config.weights_path.empty()) return load_weights(config.weights_path, config);
  return random_weights(config, seed);
}

WeightTensor random_tensor(const LayerParams& layer, FixedFormat fmt, DeterministicRng& rng) {
  WeightTensor w(layer.in_channels, layer.out_channels, layer.kernel);
  for (std::int32_t& v : w.raw_weights()) v = fx_from_real(2.0 * rng.uniform() - 1.0, fmt).raw;
  for (std::int32_t& v : w.raw_bias()) v = fx_from_real(2.0 * rng.uniform() - 1.0, fmt).raw;
  return w;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || p < 0.0 || p > 1.0) {
      throw ParameterError(fmt::format("bad sparsity grid entry '{}'", item));
    }
    grid.push_back(p);
  }
  if (grid.empty()) throw ParameterError("empty sparsity grid");
  return grid;
}

// One comparison of the tiled kernel against the scatter oracle.
std::string check_case(const FeatureMap& x, const WeightTensor& w, const LayerParams& layer, FixedFormat fmt,
                       int t_oh, const VerifyArgs& args, simd::Isa isa, bool& passed) {
  const FeatureMap expected = deconv_reference(x, w, layer, fmt);
  DeconvOptions opts;
  opts.t_oh = t_oh;
  opts.workers = args.workers;
  opts.isa = isa;
  opts.corrupt_offsets = args.corrupt_offsets;
  try {
    const DeconvResult got = deconv_layer(x, w, layer, fmt, opts);
    const auto a = got.output.raw();
    const auto b = expected.raw();
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < a.size(); ++i) mismatches += a[i] != b[i] ? 1 : 0;
    passed = mismatches == 0;
    return passed ? std::string() : fmt::format("{} of {} outputs differ", mismatches, a.size());
  } catch (const std::logic_error& e) {
    passed = false;
    return e.what();
  }
}

int cmd_infer(const InferArgs& args, std::ostream& out) {
  const NetworkConfig config = load_config(args.config);
  const std::string weights_path = args.weights.empty() ? config.weights_path.string() : args.weights;
  if (weights_path.empty()) throw ParameterError("infer needs --weights or a weights entry in the config");
  const auto weights = load_weights(weights_path, config);
  const LayerParams& first = config.layers.front().params;
  const FeatureMap input = load_feature_map(args.input, {first.in_channels, first.in_height, first.in_width});

  RunOptions opts;
  opts.t_oh = args.t_oh >= 0 ? args.t_oh : config.t_oh;
  opts.zero_skip = args.zero_skip;
  opts.workers = args.workers;
  opts.isa = simd::parse_isa(args.isa);
  const auto start = std::chrono::steady_clock::now();
  const NetworkRun run = run_network(config, weights, input, opts);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  save_feature_map(args.output, run.output);
  if (!args.text_output.empty()) write_file(args.text_output, feature_map_text(run.output, config.format));

  fmt::print(out, "network {} ({} layers), isa {}, zero-skip {}\n", config.name, config.layers.size(),
             simd::isa_name(opts.isa), opts.zero_skip ? "on" : "off");
  OpCounter total;
  for (std::size_t i = 0; i < run.layer_ops.size(); ++i) {
    const OpCounter& c = run.layer_ops[i];
    fmt::print(out, "layer {}: t_oh={} blocks={} macs={} skipped={} read={}B written={}B\n", i,
               layer_tiling(config.layers[i].params, opts.t_oh), c.blocks, c.macs_executed, c.macs_skipped,
               c.bytes_read, c.bytes_written);
    total += c;
  }
  fmt::print(out, "total: macs={} skipped={} read={}B written={}B\n", total.macs_executed, total.macs_skipped,
             total.bytes_read, total.bytes_written);
  fmt::print(out, "output {}x{}x{} -> {} ({:.3f} ms)\n", run.output.channels(), run.output.height(),
             run.output.width(), args.output, ms);
  return ok;
}

int cmd_verify(const VerifyArgs& args, std::ostream& out) {
  if (args.trials < 0 || args.geometries < 0) throw ParameterError("trial counts must be non-negative");
  const NetworkConfig config = load_config(args.config);
  const simd::Isa isa = simd::parse_isa(args.isa);
  const auto weights = weights_for(config, args.weights, args.seed);
  DeterministicRng rng(args.seed);

  // Worker count and ISA are left out on purpose: the report must not depend on them.
  std::string report = fmt::format("verify {} seed={} trials={} geometries={}\n", config.name, args.seed,
                                   args.trials, args.geometries);
  std::size_t cases = 0;
  std::size_t failures = 0;
  auto record = [&](const std::string& label, const LayerParams& layer, int t_oh, bool passed,
                    const std::string& detail) {
    ++cases;
    failures += passed ? 0 : 1;
    report += fmt::format("{} {} t_oh={} [{}]{}\n", passed ? "PASS" : "FAIL", label, t_oh, layer.describe(),
                          detail.empty() ? "" : ": " + detail);
  };

  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    const LayerParams& layer = config.layers[l].params;
    for (int trial = 0; trial < args.trials; ++trial) {
      const FeatureMap x =
          random_feature_map(layer.in_channels, layer.in_height, layer.in_width, config.format, rng.next());
      for (int t : verify_tilings(layer)) {
        bool passed = false;
        const std::string detail = check_case(x, weights[l], layer, config.format, t, args, isa, passed);
        record(fmt::format("layer {} trial {}", l, trial), layer, t, passed, detail);
      }
    }
  }
  for (int g = 0; g < args.geometries; ++g) {
    const LayerParams layer = random_geometry(rng);
    const WeightTensor w = random_tensor(layer, config.format, rng);
    const FeatureMap x =
        random_feature_map(layer.in_channels, layer.in_height, layer.in_width, config.format, rng.next());
    for (int t : verify_tilings(layer)) {
      bool passed = false;
      const std::string detail = check_case(x, w, layer, config.format, t, args, isa, passed);
      record(fmt::format("geometry {}", g), layer, t, passed, detail);
    }
  }
  report += fmt::format("summary: {}/{} passed\n", cases - failures, cases);

  out << report;
  if (!args.report.empty()) write_file(args.report, report);
  return failures == 0 ? ok : verification_failed;
}

int cmd_dse(const DseArgs& args, std::ostream& out) {
  NetworkConfig config = load_config(args.config);
  if (args.bw > 0.0) config.platform.ddr_bw_bytes_per_s = static_cast<std::uint64_t>(std::llround(args.bw));
  const auto layers = config.layer_params();
  const int t_max = args.t_max > 0 ? args.t_max : max_output_height(layers);
  const auto points = enumerate_designs(layers, config.platform, args.t_min, t_max);
  const RooflineFiles files = emit_roofline(points, config.platform, args.out, config.name + "_roofline");
  const DesignPoint best = select_tiling(points);
  const auto feasible = std::count_if(points.begin(), points.end(), [](const DesignPoint& p) { return p.feasible; });
  fmt::print(out, "{}: {} candidates, {} feasible, bandwidth {} B/s, compute roof {:.3f} GOps/s\n", config.name,
             points.size(), feasible, config.platform.ddr_bw_bytes_per_s,
             config.platform.compute_roof_ops_per_s() / 1e9);
  fmt::print(out, "selected T_OH={} ai={:.6g} ops/B attainable={:.6g} GOps/s ({}-bound)\n", best.t_oh, best.ai,
             best.attainable_gops, limit_name(best.limiting));
  fmt::print(out, "wrote {} and {}\n", files.csv.string(), files.svg.string());
  return ok;
}

int cmd_sparsity(const SparsityArgs& args, std::ostream& out) {
  const NetworkConfig config = load_config(args.config);
  const auto weights = weights_for(config, args.weights, args.seed);
  const SampleSet ground_truth = load_sample_set(args.ground_truth, config.format);
  if (args.samples < 2) throw ParameterError("--samples must be at least 2");
  const auto grid = parse_grid(args.grid);
  const auto noise = latent_batch(config, args.seed, args.samples);

  SweepOptions opts;
  opts.t_oh = args.t_oh;
  opts.workers = args.workers;
  opts.isa = simd::parse_isa(args.isa);
  opts.estimator = args.unbiased ? MmdEstimator::unbiased : MmdEstimator::biased;
  opts.wall_clock = args.wall_clock;
  const SweepResult result = sparsity_sweep(config, weights, noise, ground_truth, grid, config.platform, opts);

  const fs::path dir(args.out);
  write_file(dir / (config.name + "_sparsity.csv"), sweep_csv(result.points));
  write_file(dir / (config.name + "_sparsity.svg"), sweep_svg(result.points, config.name));
  fmt::print(out, "{}: n={} sigma={:.6g} estimator={}\n", config.name, args.samples, result.sigma,
             args.unbiased ? "unbiased" : "biased");
  fmt::print(out, "{:>5} {:>14} {:>14} {:>10}\n", "p", "t_p[s]", "mmd2", "metric");
  for (const SparsityPoint& p : result.points) {
    fmt::print(out, "{:>5.2f} {:>14.6g} {:>14.6g} {:>10.4f}\n", p.p, p.t_p, p.d_p, p.metric);
  }
  fmt::print(out, "argmax p={:.2f}\n", result.argmax_p);
  return ok;
}

int cmd_bench(const BenchArgs& args, std::ostream& out) {
  if (args.repeat < 1) throw ParameterError("--repeat must be at least 1");
  const NetworkConfig config = load_config(args.config);
  const auto weights = weights_for(config, args.weights, args.seed);
  const int t_oh = args.t_oh >= 0 ? args.t_oh : config.t_oh;
  const simd::Isa isa = simd::parse_isa(args.isa);

  // Realistic per-layer inputs: the activations of one forward pass.
  std::vector<FeatureMap> inputs{random_latent(config, args.seed)};
  for (std::size_t i = 0; i + 1 < config.layers.size(); ++i) {
    DeconvOptions o;
    o.t_oh = layer_tiling(config.layers[i].params, t_oh);
    DeconvResult r = deconv_layer(inputs.back(), weights[i], config.layers[i].params, config.format, o);
    apply_activation(r.output, config.layers[i].activation, config.format);
    inputs.push_back(std::move(r.output));
  }

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::pair{mean, std::sqrt(var / static_cast<double>(v.size()))};
  };

  fmt::print(out, "bench {} repeat={} isa={} workers={}\n", config.name, args.repeat, simd::isa_name(isa),
             args.workers);
  fmt::print(out, "{:<6} {:>12} {:>12} {:>14} {:>10} {:>12}\n", "layer", "mean_ms", "stddev_ms", "ops", "host_gops",
             "model_gops");
  std::vector<double> totals(static_cast<std::size_t>(args.repeat), 0.0);
  std::uint64_t total_ops = 0;
  double model_ops = 0.0;
  double model_seconds = 0.0;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerParams& layer = config.layers[i].params;
    DeconvOptions o;
    o.t_oh = layer_tiling(layer, t_oh);
    o.workers = args.workers;
    o.isa = isa;
    std::vector<double> ms;
    std::uint64_t ops = 0;
    for (int r = 0; r < args.repeat; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const DeconvResult res = deconv_layer(inputs[i], weights[i], layer, config.format, o);
      ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
      totals[static_cast<std::size_t>(r)] += ms.back();
      ops = 2 * res.ops.macs_executed;
    }
    total_ops += ops;
    const auto [mean, sd] = mean_std(ms);
    std::string modeled = "n/a";
    try {
      const LayerLatency lat =
          simulate_layer(layer, o.t_oh, config.platform, workload_from_weights(layer, weights[i]), true);
      modeled = fmt::format("{:.4f}", lat.effective_gops_per_s);
      model_ops += lat.giga_ops;
      model_seconds += lat.seconds;
    } catch (const InfeasibleDesign&) {
    }
    fmt::print(out, "{:<6} {:>12.4f} {:>12.4f} {:>14} {:>10.4f} {:>12}\n", i, mean, sd, ops,
               mean > 0.0 ? static_cast<double>(ops) / (mean * 1e6) : 0.0, modeled);
  }
  const auto [mean, sd] = mean_std(totals);
  fmt::print(out, "{:<6} {:>12.4f} {:>12.4f} {:>14} {:>10.4f} {:>12}\n", "total", mean, sd, total_ops,
             mean > 0.0 ? static_cast<double>(total_ops) / (mean * 1e6) : 0.0,
             model_seconds > 0.0 ? fmt::format("{:.4f}", model_ops / model_seconds) : "n/a");
  return ok;
}

int cmd_fixture(const FixtureArgs& args, std::ostream& out) {
  const NetworkConfig config = load_config(args.config);
  std::vector<WeightTensor> weights;
  if (args.dist == "gaussian") {
    weights = random_weights(config, args.seed, args.gain);
  } else if (args.dist == "laplace") {
    weights = laplace_weights(config, args.seed, args.gain);
  } else {
    throw ParameterError(fmt::format("unknown weight distribution '{}'", args.dist));
  }
  if (!args.weights_out.empty()) {
    save_weights(args.weights_out, weights, config.format);
    fmt::print(out, "weights -> {}\n", args.weights_out);
  }
  if (!args.input_out.empty()) {
    save_feature_map(args.input_out, random_latent(config, args.seed));
    fmt::print(out, "latent input -> {}\n", args.input_out);
  }
  if (!args.gt_out.empty()) {
    RunOptions opts;
    opts.t_oh = config.t_oh;
    const SampleSet gt = generate_samples(config, weights, latent_batch(config, args.gt_seed, args.samples), opts);
    save_sample_set(args.gt_out, gt, config.format);
    fmt::print(out, "ground truth ({} x {}) -> {}\n", gt.count(), gt.dim(), args.gt_out);
  }
  return ok;
}

void add_isa(CLI::App* app, std::string& isa) {
  app->add_option("--isa", isa, "MAC row kernel: scalar, avx2, neon or auto")->capture_default_str();
}

}  // namespace

LayerParams random_geometry(DeterministicRng& rng) {
  static constexpr int strides[] = {1, 2, 4};
  static constexpr int kernels[] = {1, 3, 4, 5};
  for (;;) {
    LayerParams layer;
    layer.stride = strides[rng.uniform_int(0, 2)];
    layer.kernel = kernels[rng.uniform_int(0, 3)];
    layer.padding = rng.uniform_int(0, layer.kernel - 1);
    layer.in_channels = rng.uniform_int(1, 8);
    layer.out_channels = rng.uniform_int(1, 8);
    layer.in_height = rng.uniform_int(1, 32);
    layer.in_width = rng.uniform_int(1, 32);
    const int oh = layer.out_height();
    const int ow = layer.out_width();
    if (oh >= 1 && ow >= 1 && oh <= 32 && ow <= 32) return layer;
  }
}

std::vector<int> verify_tilings(const LayerParams& layer) {
  const int o = std::max(layer.out_height(), layer.out_width());
  std::vector<int> ts;
  for (int t : {1, 3, o - 1, o}) {
    if (t >= 1 && t <= o && std::find(ts.begin(), ts.end(), t) == ts.end()) ts.push_back(t);
  }
  return ts;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reverse-looping deconvolution engine and accelerator model"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  InferArgs infer;
  auto* c_infer = app.add_subcommand("infer", "Run a generator on one input feature map");
  c_infer->add_option("--config", infer.config)->required()->check(CLI::ExistingFile);
  c_infer->add_option("--weights", infer.weights, "RVDW file (defaults to the config's)");
  c_infer->add_option("--input", infer.input, "RVDF input")->required();
  c_infer->add_option("--output", infer.output, "RVDF output")->required();
  c_infer->add_option("--text-output", infer.text_output, "Also dump the output as text");
  c_infer->add_option("--t-oh", infer.t_oh, "Tiling factor, 0 = one tile per layer (default: config)");
  c_infer->add_flag("--zero-skip,!--no-zero-skip", infer.zero_skip, "Skip zero weights")->capture_default_str();
  c_infer->add_option("--workers", infer.workers)->check(CLI::Range(1, 256))->capture_default_str();
  add_isa(c_infer, infer.isa);

  VerifyArgs verify;
  auto* c_verify = app.add_subcommand("verify", "Compare the tiled kernel with the scatter oracle");
  c_verify->add_option("--config", verify.config)->required()->check(CLI::ExistingFile);
  c_verify->add_option("--weights", verify.weights, "RVDW file (random weights from --seed otherwise)");
  c_verify->add_option("--trials", verify.trials, "Random inputs per config layer")->capture_default_str();
  c_verify->add_option("--geometries", verify.geometries, "Random layer geometries")->capture_default_str();
  c_verify->add_option("--seed", verify.seed)->capture_default_str();
  c_verify->add_option("--workers", verify.workers)->check(CLI::Range(1, 256))->capture_default_str();
  c_verify->add_option("--report", verify.report, "Also write the report here");
  c_verify->add_flag("--corrupt-offsets", verify.corrupt_offsets)->group("");
  add_isa(c_verify, verify.isa);

  DseArgs dse;
  auto* c_dse = app.add_subcommand("dse", "Roofline sweep over the global tiling factor");
  c_dse->add_option("--config", dse.config)->required()->check(CLI::ExistingFile);
  c_dse->add_option("--t-oh-min", dse.t_min)->capture_default_str();
  c_dse->add_option("--t-oh-max", dse.t_max, "Defaults to the largest output height");
  c_dse->add_option("--bw", dse.bw, "Override the DDR bandwidth, bytes/s");
  c_dse->add_option("--out", dse.out, "Report directory")->capture_default_str();

  SparsityArgs sp;
  auto* c_sp = app.add_subcommand("sparsity", "Pruning sweep: modelled latency vs MMD quality");
  c_sp->add_option("--config", sp.config)->required()->check(CLI::ExistingFile);
  c_sp->add_option("--weights", sp.weights, "RVDW file (defaults to the config's)");
  c_sp->add_option("--ground-truth", sp.ground_truth, "RVDS sample set")->required();
  c_sp->add_option("--grid", sp.grid, "Comma separated pruning fractions, must include 0")->capture_default_str();
  c_sp->add_option("--samples", sp.samples, "Generated samples per point")->capture_default_str();
  c_sp->add_option("--seed", sp.seed, "First latent seed")->capture_default_str();
  c_sp->add_option("--t-oh", sp.t_oh, "Tiling factor (default: config)");
  c_sp->add_option("--workers", sp.workers)->check(CLI::Range(1, 256))->capture_default_str();
  c_sp->add_option("--out", sp.out, "Report directory")->capture_default_str();
  c_sp->add_flag("--unbiased", sp.unbiased, "Unbiased MMD estimator");
  c_sp->add_flag("--wall-clock", sp.wall_clock, "Use host wall-clock latency instead of the model");
  add_isa(c_sp, sp.isa);

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Host wall-clock benchmark per layer");
  c_bench->add_option("--config", bench.config)->required()->check(CLI::ExistingFile);
  c_bench->add_option("--weights", bench.weights, "RVDW file (random weights from --seed otherwise)");
  c_bench->add_option("--repeat", bench.repeat)->capture_default_str();
  c_bench->add_option("--t-oh", bench.t_oh, "Tiling factor (default: config)");
  c_bench->add_option("--workers", bench.workers)->check(CLI::Range(1, 256))->capture_default_str();
  c_bench->add_option("--seed", bench.seed)->capture_default_str();
  add_isa(c_bench, bench.isa);

  FixtureArgs fx;
  auto* c_fx = app.add_subcommand("fixture", "Generate weights, a latent input and a ground-truth sample set");
  c_fx->add_option("--config", fx.config)->required()->check(CLI::ExistingFile);
  c_fx->add_option("--weights-out", fx.weights_out);
  c_fx->add_option("--input-out", fx.input_out);
  c_fx->add_option("--ground-truth-out", fx.gt_out);
  c_fx->add_option("--seed", fx.seed)->capture_default_str();
  c_fx->add_option("--gt-seed", fx.gt_seed, "First latent seed of the ground-truth batch")->capture_default_str();
  c_fx->add_option("--samples", fx.samples)->capture_default_str();
  c_fx->add_option("--gain", fx.gain)->capture_default_str();
  c_fx->add_option("--dist", fx.dist, "gaussian or laplace")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage_error;
  }

  try {
    if (*c_infer) return cmd_infer(infer, out);
    if (*c_verify) return cmd_verify(verify, out);
    if (*c_dse) return cmd_dse(dse, out);
    if (*c_sp) return cmd_sparsity(sp, out);
    if (*c_bench) return cmd_bench(bench, out);
    if (*c_fx) return cmd_fixture(fx, out);
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return usage_error;
  }
  return usage_error;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace revdeconv::cli
