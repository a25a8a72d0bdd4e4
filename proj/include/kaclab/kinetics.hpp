#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kaclab/random.hpp"

namespace kaclab {

using Velocity = std::vector<double>;
using VelocityView = std::span<const double>;

inline double dot(VelocityView a, VelocityView b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}
inline double norm2(VelocityView a) { return dot(a, a); }
inline double norm(VelocityView a) { return std::sqrt(norm2(a)); }
inline double distance(VelocityView a, VelocityView b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double t = a[k] - b[k];
    s += t * t;
  }
  return std::sqrt(s);
}

enum class KernelKind { maxwell, hard_spheres };

struct Kernel {
  KernelKind kind = KernelKind::maxwell;

  // B(v - v*); no dimension check, see eval_kernel
  double operator()(VelocityView v, VelocityView vs) const {
    return kind == KernelKind::maxwell ? 1.0 : 1.0 + distance(v, vs);
  }
  // B <= a + b(|v|+|v*|)
  double bound_a() const { return 1.0; }
  double bound_b() const { return kind == KernelKind::maxwell ? 0.0 : 1.0; }

  std::string name() const;
  static Kernel from_name(const std::string& name);
};

double eval_kernel(const Kernel& kernel, VelocityView v, VelocityView vs);

// v' = v - ((v-v*).s)s, v*' = v* + ((v-v*).s)s
std::pair<Velocity, Velocity> post_collision(VelocityView v, VelocityView vs, VelocityView sigma);
void apply_collision(std::span<double> v, std::span<double> vs, VelocityView sigma);

// Delta f = f(v') + f(v*') - f(v) - f(v*)
template <class F>
double collision_delta(F&& f, VelocityView v, VelocityView vs, VelocityView sigma) {
  auto [a, b] = post_collision(v, vs, sigma);
  return f(VelocityView(a)) + f(VelocityView(b)) - f(v) - f(vs);
}

void sample_sigma(RandomStream& rng, std::span<double> out);
Velocity sample_sigma(RandomStream& rng, int d);

class ParticleState {
 public:
  ParticleState() = default;
  ParticleState(std::size_t n, int d);
  ParticleState(std::vector<double> flat, int d, double time = 0.0);

  std::size_t size() const { return n_; }
  int dim() const { return d_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  std::span<double> velocity(std::size_t i) { return {v_.data() + i * d_, static_cast<std::size_t>(d_)}; }
  std::span<const double> velocity(std::size_t i) const {
    return {v_.data() + i * d_, static_cast<std::size_t>(d_)};
  }
  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

  double energy_sum() const;
  Velocity momentum_sum() const;
  void validate() const;

  bool operator==(const ParticleState& o) const { return d_ == o.d_ && n_ == o.n_ && v_ == o.v_; }

 private:
  std::size_t n_ = 0;
  int d_ = 3;
  double time_ = 0.0;
  std::vector<double> v_;
};

}  // namespace kaclab
