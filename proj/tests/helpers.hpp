#pragma once

#include <memory>
#include <vector>

#include "kaclab/engine.hpp"
#include "kaclab/girsanov.hpp"

namespace kaclab::test {

inline TiltPlan dynamic_plan(std::shared_ptr<const DynamicTilt> k, bool under_tilt = true,
                             std::shared_ptr<const EnergyTail> initial = nullptr) {
  TiltPlan p;
  p.initial = std::move(initial);
  p.bind = [k](const ParticleState&) { return k; };
  p.simulate_under_tilt = under_tilt;
  return p;
}

inline SimConfig maxwell_config(std::size_t N, double T, std::uint64_t seed = 1) {
  SimConfig c;
  c.N = N;
  c.T = T;
  c.seed = seed;
  return c;
}

inline double sum_f(const ParticleState& s, auto&& f) {
  double t = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) t += f(s.velocity(i));
  return t;
}

}  // namespace kaclab::test
