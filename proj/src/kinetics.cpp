#include "kaclab/kinetics.hpp"

#include <stdexcept>

#include "kaclab/error.hpp"

namespace kaclab {

std::string Kernel::name() const { return kind == KernelKind::maxwell ? "maxwell" : "hard_spheres"; }

Kernel Kernel::from_name(const std::string& name) {
  if (name == "maxwell") return {KernelKind::maxwell};
  if (name == "hard_spheres") return {KernelKind::hard_spheres};
  throw ConfigError("unknown kernel '" + name + "' (expected maxwell or hard_spheres)");
}

double eval_kernel(const Kernel& kernel, VelocityView v, VelocityView vs) {
  if (v.size() != vs.size()) throw std::invalid_argument("eval_kernel: dimension mismatch");
  return kernel(v, vs);
}

std::pair<Velocity, Velocity> post_collision(VelocityView v, VelocityView vs, VelocityView sigma) {
  if (v.size() != vs.size() || v.size() != sigma.size())
    throw std::invalid_argument("post_collision: dimension mismatch");
  if (std::abs(norm(sigma) - 1.0) > 1e-12) throw std::invalid_argument("post_collision: sigma is not a unit vector");
  Velocity a(v.begin(), v.end()), b(vs.begin(), vs.end());
  apply_collision(a, b, sigma);
  return {std::move(a), std::move(b)};
}

void apply_collision(std::span<double> v, std::span<double> vs, VelocityView sigma) {
  double c = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) c += (v[k] - vs[k]) * sigma[k];
  for (std::size_t k = 0; k < v.size(); ++k) {
    double x = c * sigma[k];
    v[k] -= x;
    vs[k] += x;
  }
}

void sample_sigma(RandomStream& rng, std::span<double> out) {
  for (;;) {
    double s = 0.0;
    for (auto& x : out) {
      x = rng.normal();
      s += x * x;
    }
    if (s > 1e-300) {
      double inv = 1.0 / std::sqrt(s);
      for (auto& x : out) x *= inv;
      return;
    }
  }
}

Velocity sample_sigma(RandomStream& rng, int d) {
  Velocity s(d);
  sample_sigma(rng, s);
  return s;
}

ParticleState::ParticleState(std::size_t n, int d) : n_(n), d_(d), v_(n * d, 0.0) {
  if (d < 1) throw std::invalid_argument("ParticleState: dimension must be positive");
}

ParticleState::ParticleState(std::vector<double> flat, int d, double time)
    : d_(d), time_(time), v_(std::move(flat)) {
  if (d < 1 || v_.size() % d != 0) throw std::invalid_argument("ParticleState: bad flat velocity array");
  n_ = v_.size() / d;
}

double ParticleState::energy_sum() const {
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double y = norm2(velocity(i)) - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

Velocity ParticleState::momentum_sum() const {
  Velocity p(d_, 0.0), c(d_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (int k = 0; k < d_; ++k) {
      double y = v_[i * d_ + k] - c[k];
      double t = p[k] + y;
      c[k] = (t - p[k]) - y;
      p[k] = t;
    }
  return p;
}

void ParticleState::validate() const {
  for (double x : v_)
    if (!std::isfinite(x)) throw SimulationError("particle state has a non-finite velocity component");
}

}  // namespace kaclab
