#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kaclab {

// Dynamic weighted sampler over n nonnegative weights.
class FenwickTree {
 public:
  FenwickTree() = default;
  explicit FenwickTree(std::span<const double> weights);

  std::size_t size() const { return w_.size(); }
  double weight(std::size_t i) const { return w_[i]; }
  double total() const { return total_; }
  double prefix(std::size_t count) const;  // sum of the first count weights

  void set(std::size_t i, double w);
  // index k such that prefix(k) <= target < prefix(k+1), skipping zero weights
  std::size_t find(double target) const;
  void rebuild();

 private:
  std::vector<double> w_;
  std::vector<double> tree_;  // 1-based
  double total_ = 0.0;
  std::size_t mask_ = 0;
  std::size_t updates_ = 0;
};

}  // namespace kaclab
