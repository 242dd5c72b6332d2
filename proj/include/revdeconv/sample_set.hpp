#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "revdeconv/errors.hpp"

namespace revdeconv {

/// n flattened samples of dimension d, stored row-major.
class SampleSet {
 public:
  SampleSet() = default;
  SampleSet(std::size_t count, std::size_t dim, std::vector<double> values);

  [[nodiscard]] std::size_t count() const noexcept { return count_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::span<const double> sample(std::size_t i) const noexcept {
    return std::span<const double>(values_).subspan(i * dim_, dim_);
  }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

  void push_back(std::span<const double> sample);

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

}  // namespace revdeconv
