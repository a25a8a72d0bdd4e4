#include "kaclab/fenwick.hpp"

#include <stdexcept>

namespace kaclab {

FenwickTree::FenwickTree(std::span<const double> weights) : w_(weights.begin(), weights.end()) {
  for (double x : w_)
    if (!(x >= 0.0)) throw std::invalid_argument("FenwickTree: negative or NaN weight");
  rebuild();
}

void FenwickTree::rebuild() {
  std::size_t n = w_.size();
  tree_.assign(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    tree_[i] += w_[i - 1];
    std::size_t p = i + (i & (~i + 1));
    if (p <= n) tree_[p] += tree_[i];
  }
  mask_ = 1;
  while (mask_ * 2 <= n) mask_ *= 2;
  total_ = prefix(n);
  updates_ = 0;
}

double FenwickTree::prefix(std::size_t count) const {
  double s = 0.0;
  for (std::size_t i = count; i > 0; i -= i & (~i + 1)) s += tree_[i];
  return s;
}

void FenwickTree::set(std::size_t i, double w) {
  double delta = w - w_[i];
  w_[i] = w;
  for (std::size_t p = i + 1; p < tree_.size(); p += p & (~p + 1)) tree_[p] += delta;
  // drift control: the incremental deltas accumulate rounding
  if (++updates_ >= w_.size() + 64) {
    rebuild();
  } else {
    total_ += delta;
  }
}

std::size_t FenwickTree::find(double target) const {
  std::size_t n = w_.size();
  std::size_t pos = 0;
  for (std::size_t step = mask_; step > 0; step >>= 1) {
    std::size_t next = pos + step;
    if (next <= n && tree_[next] <= target) {
      pos = next;
      target -= tree_[next];
    }
  }
  // pos is the 0-based answer; rounding can land on a zero weight or run off the end
  if (pos >= n) pos = n - 1;
  if (w_[pos] > 0.0) return pos;
  for (std::size_t k = pos; k-- > 0;)
    if (w_[k] > 0.0) return k;
  for (std::size_t k = pos + 1; k < n; ++k)
    if (w_[k] > 0.0) return k;
  return pos;
}

}  // namespace kaclab
