#include "revdeconv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace revdeconv {

int DeterministicRng::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo + 1);
  return lo + static_cast<int>(engine_() % span);
}

double DeterministicRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double DeterministicRng::laplace(double scale) {
  const double u = uniform() - 0.5;
  const double magnitude = -std::log(std::max(1.0 - 2.0 * std::fabs(u), 1e-300));
  return u < 0.0 ? -scale * magnitude : scale * magnitude;
}

}  // namespace revdeconv
