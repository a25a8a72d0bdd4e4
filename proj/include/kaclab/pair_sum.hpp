#pragma once

#include <cstddef>
#include <functional>

#include "kaclab/kinetics.hpp"

namespace kaclab {

// S = sum over all N^2 ordered pairs (i, j) of h(i, j) at the current state,
// maintained in O(N) per changed pair.
class PairSum {
 public:
  using Fn = std::function<double(std::size_t, std::size_t, VelocityView, VelocityView)>;

  PairSum() = default;
  PairSum(Fn h, bool symmetric) : h_(std::move(h)), symmetric_(symmetric) {}

  void set_function(Fn h, bool symmetric) {
    h_ = std::move(h);
    symmetric_ = symmetric;
  }
  bool active() const { return static_cast<bool>(h_); }

  // full O(N^2) evaluation
  void reset(const ParticleState& s);
  double value() const { return s_; }

  // sum of every term touching a or b; call before and after changing them
  double block(const ParticleState& s, std::size_t a, std::size_t b) const;
  void apply_change(double before, double after) { s_ += after - before; }

 private:
  double touching(const ParticleState& s, std::size_t a) const;

  Fn h_;
  bool symmetric_ = true;
  double s_ = 0.0;
};

inline void PairSum::reset(const ParticleState& s) {
  double total = 0.0;
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto vi = s.velocity(i);
    double row = 0.0;
    if (symmetric_) {
      for (std::size_t j = i + 1; j < n; ++j) row += h_(i, j, vi, s.velocity(j));
      row = 2.0 * row + h_(i, i, vi, vi);
    } else {
      for (std::size_t j = 0; j < n; ++j) row += h_(i, j, vi, s.velocity(j));
    }
    total += row;
  }
  s_ = total;
}

inline double PairSum::touching(const ParticleState& s, std::size_t a) const {
  auto va = s.velocity(a);
  double t = 0.0;
  const std::size_t n = s.size();
  if (symmetric_) {
    for (std::size_t k = 0; k < n; ++k) t += h_(a, k, va, s.velocity(k));
    return 2.0 * t - h_(a, a, va, va);
  }
  for (std::size_t k = 0; k < n; ++k) {
    auto vk = s.velocity(k);
    t += h_(a, k, va, vk);
    if (k != a) t += h_(k, a, vk, va);
  }
  return t;
}

inline double PairSum::block(const ParticleState& s, std::size_t a, std::size_t b) const {
  if (a == b) return touching(s, a);
  auto va = s.velocity(a), vb = s.velocity(b);
  return touching(s, a) + touching(s, b) - h_(a, b, va, vb) - h_(b, a, vb, va);
}

}  // namespace kaclab
