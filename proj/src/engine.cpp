#include "kaclab/engine.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "kaclab/error.hpp"
#include "kaclab/numeric.hpp"

namespace kaclab {

Velocity CollisionEvent::recorded_sigma() const {
  Velocity s = sigma;
  if (assignment % 2 == 1)
    for (auto& x : s) x = -x;
  return s;
}

void EventLog::push(double t, std::size_t i, std::size_t j, VelocityView sigma, int assignment, VelocityView pre_v,
                    VelocityView pre_vs, bool fictitious) {
  time_.push_back(t);
  i_.push_back(static_cast<std::uint32_t>(i));
  j_.push_back(static_cast<std::uint32_t>(j));
  sigma_.insert(sigma_.end(), sigma.begin(), sigma.end());
  pre_v_.insert(pre_v_.end(), pre_v.begin(), pre_v.end());
  pre_vs_.insert(pre_vs_.end(), pre_vs.begin(), pre_vs.end());
  assign_.push_back(static_cast<std::uint8_t>(assignment));
  fict_.push_back(fictitious ? 1 : 0);
  if (!fictitious) ++real_;
}

void EventLog::push(const CollisionEvent& e) {
  push(e.time, e.i, e.j, e.sigma, e.assignment, e.pre_v, e.pre_v_star, e.fictitious);
}

CollisionEvent EventLog::at(std::size_t k) const {
  CollisionEvent e;
  e.time = time_[k];
  e.i = i_[k];
  e.j = j_[k];
  auto s = sigma(k), a = pre_v(k), b = pre_v_star(k);
  e.sigma.assign(s.begin(), s.end());
  e.assignment = assign_[k];
  e.pre_v.assign(a.begin(), a.end());
  e.pre_v_star.assign(b.begin(), b.end());
  e.fictitious = fict_[k] != 0;
  return e;
}

void EventLog::recorded_sigma(std::size_t k, std::span<double> out) const {
  auto s = sigma(k);
  double sign = assign_[k] % 2 == 1 ? -1.0 : 1.0;
  for (std::size_t c = 0; c < s.size(); ++c) out[c] = sign * s[c];
}

bool EventLog::operator==(const EventLog& o) const {
  return d_ == o.d_ && N_ == o.N_ && T_ == o.T_ && time_ == o.time_ && i_ == o.i_ && j_ == o.j_ &&
         sigma_ == o.sigma_ && pre_v_ == o.pre_v_ && pre_vs_ == o.pre_vs_ && assign_ == o.assign_ &&
         fict_ == o.fict_;
}

MomentSummary summarize(const ParticleState& s, const std::vector<double>& thresholds) {
  const std::size_t n = s.size();
  const int d = s.dim();
  MomentSummary m;
  CompensatedSum mass, e2, e4;
  std::vector<CompensatedSum> p(d), c(d * d), tr(thresholds.size());
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto v = s.velocity(i);
    double u = norm2(v);
    mass.add(w);
    e2.add(w * u);
    e4.add(w * u * u);
    for (int a = 0; a < d; ++a) {
      p[a].add(w * v[a]);
      for (int b = 0; b < d; ++b) c[a * d + b].add(w * v[a] * v[b]);
    }
    double r = std::sqrt(u);
    for (std::size_t k = 0; k < thresholds.size(); ++k)
      if (r <= thresholds[k]) tr[k].add(w * u);
  }
  m.mass = mass.value();
  m.m2 = e2.value();
  m.m4 = e4.value();
  for (auto& x : p) m.momentum.push_back(x.value());
  for (auto& x : c) m.second_moment.push_back(x.value());
  for (auto& x : tr) m.truncated_m2.push_back(x.value());
  return m;
}

void SimConfig::validate() const {
  if (N < 1) throw ConfigError("N: must be at least 1");
  if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("T: must be finite and >= 0");
  if (d < 1) throw ConfigError("d: must be at least 1");
  if (N > 0xFFFFFFFFull) throw ConfigError("N: too large");
  double prev = -INFINITY;
  for (double t : checkpoint_times) {
    if (!(t >= 0.0 && t <= T)) throw ConfigError("checkpoints: times must lie in [0, T]");
    if (t < prev) throw ConfigError("checkpoints: times must be sorted");
    prev = t;
  }
  for (double m : truncation_thresholds)
    if (!(m >= 0.0)) throw ConfigError("truncation_thresholds: entries must be >= 0");
  initial.validate(d);
}

std::vector<double> SimConfig::resolved_checkpoints() const {
  if (!checkpoint_times.empty()) return checkpoint_times;
  if (T == 0.0) return {0.0};
  return {0.0, T};
}

double total_rate(const ParticleState& state, const Kernel& kernel, const TiltingScheme* tilt) {
  const std::size_t n = state.size();
  double s = 0.0;
  const double t = state.time();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      auto vi = state.velocity(i), vj = state.velocity(j);
      double K = tilt ? tilt->average(t, i, j, vi, vj, [](double k) { return k; }) : 1.0;
      s += K * kernel(vi, vj);
    }
  return s / static_cast<double>(n);
}

KacSimulator::KacSimulator(ParticleState state, Kernel kernel, RandomStream rng, const TiltingScheme* scheme,
                           bool tilted)
    : state_(std::move(state)), kernel_(kernel), rng_(rng), scheme_(scheme),
      rate_tilt_(scheme && tilted && !scheme->dynamic_tilt().is_identity() ? &scheme->dynamic_tilt() : nullptr) {
  if (state_.size() == 0) throw std::invalid_argument("KacSimulator: empty state");
  state_.validate();
  t_ = state_.time();
  std::vector<double> w(state_.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = norm(state_.velocity(i));
  speeds_ = FenwickTree(w);
  sigma_.assign(state_.dim(), 0.0);
  sigma_rec_.assign(state_.dim(), 0.0);
  if (scheme_ && !scheme_->dynamic_tilt().is_identity()) {
    comp_.set_function(
        [this](std::size_t i, std::size_t j, VelocityView vi, VelocityView vj) {
          return scheme_->average(t_, i, j, vi, vj, [](double K) { return K - 1.0; }) * kernel_(vi, vj);
        },
        true);
    comp_.reset(state_);
  }
}

RateBound KacSimulator::bound_now() const {
  if (rate_tilt_) return rate_tilt_->rate_bound(t_, kernel_);
  return {kernel_.bound_a(), kernel_.bound_b()};
}

void KacSimulator::on_breakpoint() {
  pending_ = false;
  if (comp_.active()) comp_.reset(state_);
}

void KacSimulator::advance_clock(double t_new) {
  double dt = t_new - t_;
  if (comp_.active() && dt > 0.0) ledger_.add_compensator(dt * comp_.value() / static_cast<double>(state_.size()));
  t_ = t_new;
  state_.set_time(t_new);
}

bool KacSimulator::next_event(double t_stop, CollisionEvent* out, EventLog* log) {
  const std::size_t n = state_.size();
  const double nd = static_cast<double>(n);
  for (;;) {
    double t_bp = scheme_ ? scheme_->dynamic_tilt().next_breakpoint(t_) : INFINITY;
    if (!pending_) {
      bound_ = bound_now();
      double lam = bound_.a * nd + 2.0 * bound_.b * speeds_.total();
      if (lam > 0.0) {
        double dt = rng_.exponential(lam);
        double y = dt - t_c_;
        pending_t_ = t_ + y;
        pending_c_ = (pending_t_ - t_) - y;
      } else {
        pending_t_ = INFINITY;
        pending_c_ = 0.0;
      }
      pending_ = true;
    }
    double limit = std::min(t_stop, t_bp);
    if (pending_t_ >= limit) {
      if (std::isinf(limit)) return false;
      advance_clock(limit);
      t_c_ = 0.0;
      if (t_bp <= t_stop) {
        on_breakpoint();
        if (t_bp < t_stop) continue;
      }
      return false;
    }
    advance_clock(pending_t_);
    t_c_ = pending_c_;
    pending_ = false;

    // pair proposal from the product-form mixture
    double W = speeds_.total();
    double wa = bound_.a * nd * nd, wb = bound_.b * nd * W;
    double r = rng_.uniform() * (wa + 2.0 * wb);
    std::size_t i, j;
    if (r < wa) {
      i = rng_.index(n);
      j = rng_.index(n);
    } else if (r < wa + wb) {
      i = speeds_.find(rng_.uniform() * W);
      j = rng_.index(n);
    } else {
      i = rng_.index(n);
      j = speeds_.find(rng_.uniform() * W);
    }
    sample_sigma(rng_, sigma_);
    auto vi = state_.velocity(i), vj = state_.velocity(j);
    double R = bound_.a + bound_.b * (speeds_.weight(i) + speeds_.weight(j));
    double K = rate_tilt_ ? rate_tilt_->value(t_, i, j, vi, vj, sigma_) : 1.0;
    double kb = K * kernel_(vi, vj);
    if (kb > R * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "majorant violated at t=" << t_ << " pair (" << i << "," << j << "): K*B=" << kb << " > " << R;
      throw SimulationError(msg.str());
    }
    bool accept = rng_.uniform() * R < kb;
    if (!accept) {
      if (log) log->push(t_, i, j, sigma_, 0, vi, vj, true);
      if (out) {
        *out = CollisionEvent{t_, i, j, sigma_, 0, Velocity(vi.begin(), vi.end()), Velocity(vj.begin(), vj.end()), true};
      }
      return true;
    }
    int a = static_cast<int>(rng_.index(4));
    std::size_t f = a < 2 ? i : j, s = a < 2 ? j : i;
    auto vf = state_.velocity(f), vs = state_.velocity(s);
    double sign = a % 2 == 1 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < sigma_.size(); ++c) sigma_rec_[c] = sign * sigma_[c];
    if (log) log->push(t_, i, j, sigma_, a, vf, vs, false);
    if (out) *out = CollisionEvent{t_, i, j, sigma_, a, Velocity(vf.begin(), vf.end()), Velocity(vs.begin(), vs.end()), false};
    if (scheme_ && !scheme_->dynamic_tilt().is_identity()) {
      double Krec = scheme_->dynamic_tilt().value(t_, f, s, vf, vs, sigma_rec_);
      ledger_.add_jump(Krec);
    }
    if (i != j) {
      double before = comp_.active() ? comp_.block(state_, i, j) : 0.0;
      apply_collision(vi, vj, sigma_);
      speeds_.set(i, norm(vi));
      speeds_.set(j, norm(vj));
      if (comp_.active()) comp_.apply_change(before, comp_.block(state_, i, j));
    }
    return true;
  }
}

void KacSimulator::run_until(double t_stop, EventLog& log) {
  while (next_event(t_stop, nullptr, &log)) {
  }
}

std::pair<ParticleState, CollisionEvent> step(const ParticleState& state, const Kernel& kernel,
                                              const TiltingScheme* tilt, RandomStream& rng) {
  KacSimulator sim(state, kernel, rng, tilt, tilt != nullptr);
  CollisionEvent e;
  if (!sim.next_event(INFINITY, &e, nullptr)) throw SimulationError("step: total rate is zero");
  rng = sim.rng();
  return {sim.state(), e};
}

namespace {

Trajectory run(const SimConfig& cfg, ParticleState initial, RandomStream rng) {
  Trajectory tr;
  tr.seed = cfg.seed;
  tr.stream = cfg.stream;
  tr.kernel = cfg.kernel;
  initial.set_time(0.0);
  initial.validate();
  tr.initial_state = initial;
  tr.log = EventLog(cfg.d, initial.size(), cfg.T);
  std::shared_ptr<const TiltingScheme> scheme;
  if (cfg.tilting) {
    scheme = std::make_shared<TiltingScheme>(cfg.tilting->make(initial));
    tr.under_tilt = cfg.tilting->simulate_under_tilt;
  }
  tr.scheme = scheme;
  KacSimulator sim(initial, cfg.kernel, rng, scheme.get(), tr.under_tilt);
  if (scheme) {
    CompensatedSum phi;
    for (std::size_t i = 0; i < initial.size(); ++i) phi.add(scheme->phi(initial.velocity(i)));
    sim.ledger().initial_term = phi.value();
  }
  for (double tc : cfg.resolved_checkpoints()) {
    sim.run_until(tc, tr.log);
    Checkpoint c;
    c.time = tc;
    c.summary = summarize(sim.state(), cfg.truncation_thresholds);
    if (cfg.record_full_states) c.state = sim.state();
    tr.checkpoints.push_back(std::move(c));
  }
  sim.run_until(cfg.T, tr.log);
  tr.final_state = sim.state();
  tr.rn_ledger = sim.ledger();
  return tr;
}

}  // namespace

Trajectory simulate(const SimConfig& cfg) {
  cfg.validate();
  RandomStream rng(cfg.seed, cfg.stream);
  ReferenceMeasure ref(cfg.d);
  ParticleState s(cfg.N, cfg.d);
  const EnergyTail* tilt = cfg.tilting ? cfg.tilting->initial.get() : nullptr;
  if (tilt && tilt->dim() != cfg.d) throw ConfigError("tilting: initial tilt dimension differs from d");
  // under P the initial data come from the untilted law; the ledger still carries phi
  if (tilt && !cfg.tilting->simulate_under_tilt) tilt = nullptr;
  for (std::size_t i = 0; i < cfg.N; ++i) {
    if (tilt)
      tilt->sample(rng, s.velocity(i));
    else
      cfg.initial.sample(ref, rng, s.velocity(i));
  }
  return run(cfg, std::move(s), rng);
}

Trajectory simulate_from(const SimConfig& cfg, ParticleState initial) {
  cfg.validate();
  if (initial.size() != cfg.N || initial.dim() != cfg.d) throw ConfigError("initial state does not match N and d");
  return run(cfg, std::move(initial), RandomStream(cfg.seed, cfg.stream));
}

std::size_t replay_events(ParticleState& state, const EventLog& log, std::size_t from, double t_stop) {
  std::size_t k = from;
  for (; k < log.size() && log.time(k) <= t_stop; ++k) {
    if (log.fictitious(k) || log.i(k) == log.j(k)) continue;
    apply_collision(state.velocity(log.i(k)), state.velocity(log.j(k)), log.sigma(k));
  }
  return k;
}

ParticleState replay_to(const ParticleState& initial, const EventLog& log, double t) {
  ParticleState s = initial;
  replay_events(s, log, 0, t);
  s.set_time(t);
  return s;
}

RNLedger ledger_over_window(const Trajectory& traj, const TiltingScheme& scheme, double t0, double t1) {
  RNLedger L;
  ParticleState s = traj.initial_state;
  if (t0 == 0.0) {
    CompensatedSum phi;
    for (std::size_t i = 0; i < s.size(); ++i) phi.add(scheme.phi(s.velocity(i)));
    L.initial_term = phi.value();
  }
  const DynamicTilt& K = scheme.dynamic_tilt();
  if (K.is_identity()) return L;
  const double nd = static_cast<double>(s.size());
  const Kernel kernel = traj.kernel;
  double cur = t0;
  PairSum comp(
      [&](std::size_t i, std::size_t j, VelocityView vi, VelocityView vj) {
        return scheme.average(cur, i, j, vi, vj, [](double k) { return k - 1.0; }) * kernel(vi, vj);
      },
      true);
  const EventLog& log = traj.log;
  std::size_t k = replay_events(s, log, 0, t0);
  comp.reset(s);
  auto advance = [&](double to) {
    for (double bp = K.next_breakpoint(cur); bp < to; bp = K.next_breakpoint(cur)) {
      L.add_compensator((bp - cur) * comp.value() / nd);
      cur = bp;
      comp.reset(s);
    }
    L.add_compensator((to - cur) * comp.value() / nd);
    cur = to;
  };
  Velocity sig(s.dim());
  for (; k < log.size() && log.time(k) <= t1; ++k) {
    advance(log.time(k));
    if (log.fictitious(k)) continue;
    log.recorded_sigma(k, sig);
    L.add_jump(K.value(cur, log.first(k), log.second(k), log.pre_v(k), log.pre_v_star(k), sig));
    std::size_t i = log.i(k), j = log.j(k);
    if (i == j) continue;
    double before = comp.block(s, i, j);
    apply_collision(s.velocity(i), s.velocity(j), log.sigma(k));
    comp.apply_change(before, comp.block(s, i, j));
  }
  advance(t1);
  return L;
}

WeightedMeasure flux_measure(const EventLog& log) {
  const int d = log.dim();
  WeightedMeasure w(3 * d + 1);
  std::vector<double> x(3 * d + 1);
  Velocity sig(d);
  const double mass = 1.0 / static_cast<double>(log.particles());
  for (std::size_t k = 0; k < log.size(); ++k) {
    if (log.fictitious(k)) continue;
    x[0] = log.time(k);
    auto a = log.pre_v(k), b = log.pre_v_star(k);
    log.recorded_sigma(k, sig);
    for (int c = 0; c < d; ++c) {
      x[1 + c] = a[c];
      x[1 + d + c] = b[c];
      x[1 + 2 * d + c] = sig[c];
    }
    w.add(x, mass);
  }
  return w;
}

}  // namespace kaclab
