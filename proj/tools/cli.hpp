#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "revdeconv/rng.hpp"
#include "revdeconv/tensor.hpp"

namespace revdeconv::cli {

enum ExitCode : int { ok = 0, verification_failed = 1, usage_error = 2 };

/// Runs one subcommand: infer, verify, dse, sparsity, bench or fixture.
/// argv[0] is the program name. Diagnostics go to err, everything else to out.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Random layer for the verify battery: S in {1,2,4}, K in {1,3,4,5},
/// P in [0, K-1], input sides up to 32 and channel counts up to 8, redrawn
/// until the output is at least one pixel.
[[nodiscard]] LayerParams random_geometry(DeterministicRng& rng);

/// {1, 3, O-1, O} with O = max(O_H, O_W), restricted to [1, O] and deduplicated.
[[nodiscard]] std::vector<int> verify_tilings(const LayerParams& layer);

}  // namespace revdeconv::cli
