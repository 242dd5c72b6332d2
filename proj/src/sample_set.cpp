#include "revdeconv/sample_set.hpp"

#include <fmt/format.h>

namespace revdeconv {

SampleSet::SampleSet(std::size_t count, std::size_t dim, std::vector<double> values)
    : count_(count), dim_(dim), values_(std::move(values)) {
  if (values_.size() != count_ * dim_) {
    throw ShapeError(fmt::format("{} samples of dimension {} need {} values, got {}", count_, dim_, count_ * dim_,
                                 values_.size()));
  }
}

void SampleSet::push_back(std::span<const double> sample) {
  if (count_ == 0 && dim_ == 0) {
    dim_ = sample.size();
  }
  if (sample.size() != dim_) {
    throw ShapeError(fmt::format("sample has dimension {}, set has {}", sample.size(), dim_));
  }
  values_.insert(values_.end(), sample.begin(), sample.end());
  ++count_;
}

}  // namespace revdeconv
