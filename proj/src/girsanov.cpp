#include "kaclab/girsanov.hpp"

#include <algorithm>
#include <stdexcept>

#include "kaclab/engine.hpp"
#include "kaclab/error.hpp"

namespace kaclab {

ConstantTilt::ConstantTilt(double c) : c_(c) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("constant tilt: K must be finite and nonnegative");
}

RelativeSpeedTilt::RelativeSpeedTilt(double delta, const Kernel& kernel) : delta_(delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("relative_speed tilt: delta must be finite and >= 0");
  if (kernel.kind != KernelKind::maxwell)
    throw ConfigError("relative_speed tilt: K B is not linearly bounded for hard spheres; use the Maxwell kernel");
}

SigmaTestTilt::SigmaTestTilt(double c) : c_(c) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("sigma_test tilt: coefficient must be finite and >= 0");
}

double SigmaTestTilt::value(double, std::size_t, std::size_t, VelocityView v, VelocityView vs,
                            VelocityView sigma) const {
  double c = 0.0, r2 = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    double u = v[k] - vs[k];
    c += u * sigma[k];
    r2 += u * u;
  }
  return 1.0 + c_ * c * c / (1.0 + r2);
}

FreezeTilt::FreezeTilt(std::vector<double> t_grid, std::vector<int> release, double delta, const Kernel& kernel)
    : t_grid_(std::move(t_grid)), release_(std::move(release)), delta_(delta),
      hard_spheres_(kernel.kind == KernelKind::hard_spheres) {
  if (t_grid_.size() < 2) throw ConfigError("freeze tilt: time grid needs at least two points");
  if (delta_ > 0.0 && hard_spheres_)
    throw ConfigError("freeze tilt: the delta variant requires the Maxwell kernel");
  const int r = static_cast<int>(t_grid_.size()) - 1;
  const std::size_t N = release_.size();
  active_.assign(r + 1, 0);
  factor_.assign(r + 1, 1.0);
  for (int i = 1; i <= r; ++i) {
    std::size_t n = 0;
    for (int rel : release_)
      if (!(i < rel)) ++n;
    bool empty = t_grid_[i] <= t_grid_[i - 1];
    if (n == 0 && !empty) throw SimulationError("freeze tilt: every particle is frozen on interval " + std::to_string(i));
    active_[i] = n;
    factor_[i] = n == 0 ? 1.0 : static_cast<double>(N) / static_cast<double>(n);
  }
}

int FreezeTilt::interval(double t) const {
  const int r = static_cast<int>(t_grid_.size()) - 1;
  auto it = std::upper_bound(t_grid_.begin() + 1, t_grid_.begin() + r, t);
  return static_cast<int>(it - t_grid_.begin());
}

double FreezeTilt::value(double t, std::size_t i, std::size_t j, VelocityView v, VelocityView vs,
                         VelocityView) const {
  int k = interval(t);
  if (frozen(i, k) || frozen(j, k)) return 0.0;
  double f = factor_[k];
  return delta_ > 0.0 ? f * (1.0 + delta_ * distance(v, vs)) : f;
}

RateBound FreezeTilt::rate_bound(double t, const Kernel& kernel) const {
  double f = factor_[interval(t)];
  if (delta_ > 0.0) return {f, f * delta_};
  return {f * kernel.bound_a(), f * kernel.bound_b()};
}

double FreezeTilt::multiplier_bound(double t) const { return factor_[interval(t)] * std::max(1.0, delta_); }

double FreezeTilt::next_breakpoint(double t) const {
  const std::size_t r = t_grid_.size() - 1;
  for (std::size_t i = 1; i < r; ++i)
    if (t_grid_[i] > t) return t_grid_[i];
  return INFINITY;
}

TiltingScheme::TiltingScheme() : dynamic_(std::make_shared<IdentityTilt>()), sigma_order_(26) {}

TiltingScheme::TiltingScheme(std::shared_ptr<const EnergyTail> initial, std::shared_ptr<const DynamicTilt> dynamic,
                             int sigma_order, int d)
    : initial_(std::move(initial)), dynamic_(std::move(dynamic)), sigma_order_(sigma_order) {
  if (!dynamic_) dynamic_ = std::make_shared<IdentityTilt>();
  if (!std::isfinite(dynamic_->multiplier_bound(0.0)))
    throw ConfigError("tilting scheme: multiplier bound is not finite");
  if (initial_ && initial_->lambda() != 0.0) {
    ReferenceMeasure ref(initial_->dim());
    double z = tilt_normalization(*initial_, ref);
    if (std::abs(z - 1.0) > 1e-8)
      throw ConfigError("tilting scheme: int e^phi dmu* = " + std::to_string(z) + " is not 1");
  }
  if (!dynamic_->sigma_independent()) {
    rule_ = compensator_rule(initial_ ? initial_->dim() : d, sigma_order_);
  }
}

double tilt_normalization(const EnergyTail& tilt, const ReferenceMeasure& ref) {
  auto f = [&](double r) { return std::exp(tilt.phi_radial(r)); };
  if (tilt.M() <= 0.0 || std::isinf(tilt.M())) return ref.radial_integral(f);
  return ref.radial_integral(f, 0.0, tilt.M()) + ref.radial_integral(f, tilt.M(), INFINITY);
}

void RNLedger::add_jump(double K) {
  if (K <= 0.0) {
    hit_zero = true;
    return;
  }
  double y = std::log(K) - jc_;
  double t = jump_term + y;
  jc_ = (t - jump_term) - y;
  jump_term = t;
}

void RNLedger::add_compensator(double x) {
  double y = x - cc_;
  double t = compensator_term + y;
  cc_ = (t - compensator_term) - y;
  compensator_term = t;
}

ParticleState sample_tilted_initial(const ReferenceMeasure& ref, const TiltingScheme& scheme, std::size_t N,
                                    RandomStream& rng) {
  ParticleState s(N, ref.dim());
  const EnergyTail* tilt = scheme.initial_tilt();
  for (std::size_t i = 0; i < N; ++i) {
    if (tilt)
      tilt->sample(rng, s.velocity(i));
    else
      ref.sample(rng, s.velocity(i));
  }
  return s;
}

double compensator_rate(const ParticleState& state, const TiltingScheme& scheme, const Kernel& kernel, double t) {
  const std::size_t n = state.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      auto vi = state.velocity(i), vj = state.velocity(j);
      total += scheme.average(t, i, j, vi, vj, [](double K) { return K - 1.0; }) * kernel(vi, vj);
    }
  return total / static_cast<double>(n);
}

void accumulate_compensator(RNLedger& ledger, const ParticleState& state, const TiltingScheme& scheme,
                            const Kernel& kernel, double t, double dt) {
  if (dt <= 0.0 || scheme.dynamic_tilt().is_identity()) return;
  ledger.add_compensator(dt * compensator_rate(state, scheme, kernel, t));
}

void record_jump(RNLedger& ledger, const EventLog& log, std::size_t k, const TiltingScheme& scheme) {
  if (log.fictitious(k)) return;
  const DynamicTilt& K = scheme.dynamic_tilt();
  if (K.is_identity()) return;
  Velocity s(log.dim());
  log.recorded_sigma(k, s);
  ledger.add_jump(K.value(log.time(k), log.first(k), log.second(k), log.pre_v(k), log.pre_v_star(k), s));
}

double log_rn_derivative(const Trajectory& traj) {
  if (!traj.scheme) return 0.0;
  return traj.rn_ledger.log_density();
}

TiltingScheme TiltPlan::make(const ParticleState& state0) const {
  std::shared_ptr<const DynamicTilt> dyn = bind ? bind(state0) : nullptr;
  return TiltingScheme(initial, dyn, sigma_order, state0.dim());
}

}  // namespace kaclab
