#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kaclab/kinetics.hpp"
#include "kaclab/reference.hpp"
#include "kaclab/sphere_rule.hpp"

namespace kaclab {

class EventLog;
struct Trajectory;

// K * B <= a + b (|v| + |v*|) on the current interval
struct RateBound {
  double a = 1.0;
  double b = 0.0;
};

class DynamicTilt {
 public:
  virtual ~DynamicTilt() = default;
  virtual double value(double t, std::size_t i, std::size_t j, VelocityView v, VelocityView vs,
                       VelocityView sigma) const = 0;
  virtual bool sigma_independent() const { return true; }
  virtual bool is_identity() const { return false; }
  virtual RateBound rate_bound(double t, const Kernel& kernel) const = 0;
  // kappa with K B <= kappa (1 + |v| + |v*|)
  virtual double multiplier_bound(double t) const = 0;
  virtual double next_breakpoint(double /*t*/) const { return INFINITY; }
  virtual std::string kind() const = 0;
};

class IdentityTilt final : public DynamicTilt {
 public:
  double value(double, std::size_t, std::size_t, VelocityView, VelocityView, VelocityView) const override { return 1.0; }
  bool is_identity() const override { return true; }
  RateBound rate_bound(double, const Kernel& k) const override { return {k.bound_a(), k.bound_b()}; }
  double multiplier_bound(double) const override { return 1.0; }
  std::string kind() const override { return "identity"; }
};

class ConstantTilt final : public DynamicTilt {
 public:
  explicit ConstantTilt(double c);
  double value(double, std::size_t, std::size_t, VelocityView, VelocityView, VelocityView) const override { return c_; }
  bool is_identity() const override { return c_ == 1.0; }
  RateBound rate_bound(double, const Kernel& k) const override { return {c_ * k.bound_a(), c_ * k.bound_b()}; }
  double multiplier_bound(double) const override { return c_; }
  std::string kind() const override { return "constant"; }
  double constant() const { return c_; }

 private:
  double c_;
};

// K = 1 + delta |v - v*|, Maxwell kernel only (K B must stay linear in |v|)
class RelativeSpeedTilt final : public DynamicTilt {
 public:
  RelativeSpeedTilt(double delta, const Kernel& kernel);
  double value(double, std::size_t, std::size_t, VelocityView v, VelocityView vs, VelocityView) const override {
    return 1.0 + delta_ * distance(v, vs);
  }
  RateBound rate_bound(double, const Kernel&) const override { return {1.0, delta_}; }
  double multiplier_bound(double) const override { return std::max(1.0, delta_); }
  std::string kind() const override { return "relative_speed"; }
  double delta() const { return delta_; }

 private:
  double delta_;
};

// K = 1 + c ((v - v*).sigma)^2 / (1 + |v - v*|^2); exercises the sigma quadrature
class SigmaTestTilt final : public DynamicTilt {
 public:
  explicit SigmaTestTilt(double c);
  double value(double, std::size_t, std::size_t, VelocityView v, VelocityView vs, VelocityView sigma) const override;
  bool sigma_independent() const override { return false; }
  RateBound rate_bound(double, const Kernel& k) const override {
    return {(1.0 + c_) * k.bound_a(), (1.0 + c_) * k.bound_b()};
  }
  double multiplier_bound(double) const override { return 1.0 + c_; }
  std::string kind() const override { return "sigma_test"; }
  double coefficient() const { return c_; }

 private:
  double c_;
};

// Frozen-set tilt: particle k is frozen on [t_{i-1}, t_i) while i < release[k];
// K = 0 if either particle is frozen, else (N/N_t) or (N/N_t)(1 + delta |v - v*|).
class FreezeTilt final : public DynamicTilt {
 public:
  FreezeTilt(std::vector<double> t_grid, std::vector<int> release, double delta, const Kernel& kernel);

  double value(double t, std::size_t i, std::size_t j, VelocityView v, VelocityView vs, VelocityView) const override;
  RateBound rate_bound(double t, const Kernel& kernel) const override;
  double multiplier_bound(double t) const override;
  double next_breakpoint(double t) const override;
  std::string kind() const override { return "freeze"; }

  int interval(double t) const;  // 1..r
  bool frozen(std::size_t k, int interval) const { return interval < release_[k]; }
  bool frozen_at(std::size_t k, double t) const { return frozen(k, interval(t)); }
  std::size_t active_count(int interval) const { return active_[interval]; }
  double factor(int interval) const { return factor_[interval]; }
  const std::vector<double>& t_grid() const { return t_grid_; }
  double delta() const { return delta_; }
  std::size_t particles() const { return release_.size(); }

 private:
  std::vector<double> t_grid_;
  std::vector<int> release_;
  std::vector<std::size_t> active_;  // N_t per interval, index 1..r
  std::vector<double> factor_;       // N / N_t
  double delta_;
  bool hard_spheres_;
};

class TiltingScheme {
 public:
  TiltingScheme();
  TiltingScheme(std::shared_ptr<const EnergyTail> initial, std::shared_ptr<const DynamicTilt> dynamic,
                int sigma_order = 26, int d = 3);

  const EnergyTail* initial_tilt() const { return initial_.get(); }
  const DynamicTilt& dynamic_tilt() const { return *dynamic_; }
  std::shared_ptr<const DynamicTilt> dynamic_ptr() const { return dynamic_; }
  std::shared_ptr<const EnergyTail> initial_ptr() const { return initial_; }
  double multiplier_bound(double t) const { return dynamic_->multiplier_bound(t); }
  bool is_identity() const { return !initial_ && dynamic_->is_identity(); }
  double phi(VelocityView v) const { return initial_ ? initial_->phi(v) : 0.0; }
  int sigma_order() const { return sigma_order_; }
  const SphereRule& sigma_rule() const { return rule_; }

  // sigma-average of f(K) at a pair
  template <class F>
  double average(double t, std::size_t i, std::size_t j, VelocityView v, VelocityView vs, F&& f) const;

 private:
  std::shared_ptr<const EnergyTail> initial_;
  std::shared_ptr<const DynamicTilt> dynamic_;
  int sigma_order_;
  SphereRule rule_;
};

template <class F>
double TiltingScheme::average(double t, std::size_t i, std::size_t j, VelocityView v, VelocityView vs, F&& f) const {
  if (dynamic_->sigma_independent()) return f(dynamic_->value(t, i, j, v, vs, {}));
  double s = 0.0;
  for (std::size_t k = 0; k < rule_.size(); ++k) s += rule_.weights[k] * f(dynamic_->value(t, i, j, v, vs, rule_.node(k)));
  return s;
}

// int e^phi d mu* by radial quadrature
double tilt_normalization(const EnergyTail& tilt, const ReferenceMeasure& ref);

struct RNLedger {
  double initial_term = 0.0;
  double jump_term = 0.0;
  double compensator_term = 0.0;
  bool hit_zero = false;

  double log_density() const {
    return hit_zero ? -INFINITY : initial_term + jump_term - compensator_term;
  }
  void add_jump(double K);
  void add_compensator(double x);

 private:
  double jc_ = 0.0, cc_ = 0.0;
};

ParticleState sample_tilted_initial(const ReferenceMeasure& ref, const TiltingScheme& scheme, std::size_t N,
                                    RandomStream& rng);

// (1/N) sum_{i,j} sigma-avg (K - 1) B at a frozen state
double compensator_rate(const ParticleState& state, const TiltingScheme& scheme, const Kernel& kernel, double t);
void accumulate_compensator(RNLedger& ledger, const ParticleState& state, const TiltingScheme& scheme,
                            const Kernel& kernel, double t, double dt);
// uses the event's recorded point
void record_jump(RNLedger& ledger, const EventLog& log, std::size_t k, const TiltingScheme& scheme);
double log_rn_derivative(const Trajectory& traj);

// Builds the bound scheme for a run from its realized initial state.
struct TiltPlan {
  std::shared_ptr<const EnergyTail> initial;  // null: phi = 0
  std::function<std::shared_ptr<const DynamicTilt>(const ParticleState&)> bind;
  bool simulate_under_tilt = true;  // false: dynamics under P, ledger only
  int sigma_order = 26;

  TiltingScheme make(const ParticleState& state0) const;
};

}  // namespace kaclab
