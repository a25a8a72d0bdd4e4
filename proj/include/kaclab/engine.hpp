#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "kaclab/fenwick.hpp"
#include "kaclab/girsanov.hpp"
#include "kaclab/kinetics.hpp"
#include "kaclab/measure.hpp"
#include "kaclab/pair_sum.hpp"
#include "kaclab/random.hpp"
#include "kaclab/reference.hpp"

namespace kaclab {

// assignment: 0 (i,j,s), 1 (i,j,-s), 2 (j,i,s), 3 (j,i,-s)
struct CollisionEvent {
  double time = 0.0;
  std::size_t i = 0, j = 0;
  Velocity sigma;
  int assignment = 0;
  Velocity pre_v, pre_v_star;  // of the recorded assignment
  bool fictitious = false;

  std::size_t first() const { return assignment < 2 ? i : j; }
  std::size_t second() const { return assignment < 2 ? j : i; }
  Velocity recorded_sigma() const;
};

class EventLog {
 public:
  EventLog() = default;
  EventLog(int d, std::size_t N, double T) : d_(d), N_(N), T_(T) {}

  int dim() const { return d_; }
  std::size_t particles() const { return N_; }
  double horizon() const { return T_; }
  void set_horizon(double T) { T_ = T; }
  std::size_t size() const { return time_.size(); }
  std::size_t real_count() const { return real_; }

  void push(double t, std::size_t i, std::size_t j, VelocityView sigma, int assignment, VelocityView pre_v,
            VelocityView pre_vs, bool fictitious);
  void push(const CollisionEvent& e);
  CollisionEvent at(std::size_t k) const;

  double time(std::size_t k) const { return time_[k]; }
  std::size_t i(std::size_t k) const { return i_[k]; }
  std::size_t j(std::size_t k) const { return j_[k]; }
  int assignment(std::size_t k) const { return assign_[k]; }
  bool fictitious(std::size_t k) const { return fict_[k] != 0; }
  std::size_t first(std::size_t k) const { return assign_[k] < 2 ? i_[k] : j_[k]; }
  std::size_t second(std::size_t k) const { return assign_[k] < 2 ? j_[k] : i_[k]; }
  VelocityView sigma(std::size_t k) const { return {sigma_.data() + k * d_, static_cast<std::size_t>(d_)}; }
  VelocityView pre_v(std::size_t k) const { return {pre_v_.data() + k * d_, static_cast<std::size_t>(d_)}; }
  VelocityView pre_v_star(std::size_t k) const { return {pre_vs_.data() + k * d_, static_cast<std::size_t>(d_)}; }
  void recorded_sigma(std::size_t k, std::span<double> out) const;

  bool operator==(const EventLog& o) const;

 private:
  int d_ = 3;
  std::size_t N_ = 0;
  double T_ = 0.0;
  std::size_t real_ = 0;
  std::vector<double> time_;
  std::vector<std::uint32_t> i_, j_;
  std::vector<double> sigma_, pre_v_, pre_vs_;
  std::vector<std::uint8_t> assign_, fict_;
};

struct MomentSummary {
  double mass = 0.0;
  Velocity momentum;
  double m2 = 0.0;
  double m4 = 0.0;
  std::vector<double> second_moment;  // d x d, int v v^T dmu
  std::vector<double> truncated_m2;   // one per threshold
};

MomentSummary summarize(const ParticleState& s, const std::vector<double>& thresholds);

struct Checkpoint {
  double time = 0.0;
  MomentSummary summary;
  std::optional<ParticleState> state;
};

struct SimConfig {
  std::size_t N = 1;
  double T = 1.0;
  int d = 3;
  Kernel kernel;
  std::optional<TiltPlan> tilting;
  InitialLaw initial;  // used when there is no initial tilt
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<double> checkpoint_times;  // empty: {0, T}
  bool record_full_states = false;
  std::vector<double> truncation_thresholds;

  void validate() const;
  std::vector<double> resolved_checkpoints() const;
};

struct Trajectory {
  ParticleState initial_state;
  ParticleState final_state;
  std::vector<Checkpoint> checkpoints;
  EventLog log;
  RNLedger rn_ledger;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  Kernel kernel;
  std::shared_ptr<const TiltingScheme> scheme;  // null when untilted
  bool under_tilt = false;
};

// (1/N) sum over all N^2 ordered pairs of sigma-avg K B
double total_rate(const ParticleState& state, const Kernel& kernel, const TiltingScheme* tilt = nullptr);

class KacSimulator {
 public:
  // scheme: ledger accounting; tilted: rates K B instead of B
  KacSimulator(ParticleState state, Kernel kernel, RandomStream rng, const TiltingScheme* scheme = nullptr,
               bool tilted = false);

  const ParticleState& state() const { return state_; }
  double time() const { return t_; }
  const RNLedger& ledger() const { return ledger_; }
  RNLedger& ledger() { return ledger_; }
  RandomStream& rng() { return rng_; }

  // next candidate event before t_stop; false if the clock reached t_stop first
  bool next_event(double t_stop, CollisionEvent* out, EventLog* log);
  void run_until(double t_stop, EventLog& log);

 private:
  RateBound bound_now() const;
  void on_breakpoint();
  void advance_clock(double t_new);

  ParticleState state_;
  Kernel kernel_;
  RandomStream rng_;
  const TiltingScheme* scheme_;
  const DynamicTilt* rate_tilt_;
  FenwickTree speeds_;
  PairSum comp_;
  RNLedger ledger_;
  SphereRule rule_;
  double t_ = 0.0, t_c_ = 0.0;  // Kahan pair
  bool pending_ = false;
  double pending_t_ = 0.0, pending_c_ = 0.0;
  RateBound bound_;
  Velocity sigma_, sigma_rec_;
};

std::pair<ParticleState, CollisionEvent> step(const ParticleState& state, const Kernel& kernel,
                                              const TiltingScheme* tilt, RandomStream& rng);

Trajectory simulate(const SimConfig& config);
Trajectory simulate_from(const SimConfig& config, ParticleState initial);

// apply the real events with time <= t_stop to `state`, starting at event index `from`;
// returns the index of the first unapplied event
std::size_t replay_events(ParticleState& state, const EventLog& log, std::size_t from, double t_stop);
ParticleState replay_to(const ParticleState& initial, const EventLog& log, double t);

// ledger contributions over (t0, t1] by replaying the log; the initial term is
// included iff t0 == 0
RNLedger ledger_over_window(const Trajectory& traj, const TiltingScheme& scheme, double t0, double t1);

// one atom per real event at (t, v, v*, sigma) in R^{3d+1}, mass 1/N
WeightedMeasure flux_measure(const EventLog& log);

}  // namespace kaclab
