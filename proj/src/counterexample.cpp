#include "kaclab/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

#include "kaclab/error.hpp"
#include "kaclab/numeric.hpp"
#include "kaclab/parallel.hpp"
#include "kaclab/rate_function.hpp"

namespace kaclab {

double cumulant_psi(const ReferenceMeasure& ref, double M, double lambda) {
  if (!(lambda < ref.z2())) throw ConfigError("cumulant_psi: lambda must be below z2");
  return EnergyTail(ref.dim(), M, lambda).psi();
}

double tilted_energy(const ReferenceMeasure& ref, double M, double lambda) {
  return EnergyTail(ref.dim(), M, lambda).energy();
}

double solve_lambda(const ReferenceMeasure& ref, double M, double theta_T) {
  if (!(theta_T > 1.0)) throw ConfigError("solve_lambda: theta_T must exceed 1");
  double lo = 0.0, hi = ref.z2();
  double f_lo = 1.0, f_hi = INFINITY;
  for (int it = 0; it < 400 && hi - lo > 1e-10 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    double f = tilted_energy(ref, M, mid);
    if (!(f >= f_lo && f <= f_hi)) throw std::logic_error("solve_lambda: tilted energy is not monotone in lambda");
    if (f < theta_T) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
      f_hi = f;
    }
  }
  return 0.5 * (lo + hi);
}

double legendre_psi_star(const ReferenceMeasure& ref, double a, double M) {
  if (!(a > 0.0)) throw ConfigError("legendre_psi_star: a must be positive");
  const double s = ref.shape();
  if (M == 0.0) return s * (a - 1.0 - std::log(a));
  // concave in lambda on (-inf, z2); the maximizer is negative iff a is below the mean
  auto neg = [&](double lam) { return -(a * lam - EnergyTail(ref.dim(), M, lam).psi()); };
  double hi = ref.z2() * (1.0 - 1e-12);
  double lo = -1.0;
  while (lo > -1e6 && neg(lo) < neg(0.5 * lo)) lo *= 2.0;
  auto r = boost::math::tools::brent_find_minima(neg, lo, hi, 52);
  return std::max(0.0, -r.second);
}

void ThetaSchedule::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("theta.T: must be positive and finite");
  if (values.size() != jump_times.size() + 1)
    throw ConfigError("theta.values: needs one more entry than theta.jump_times");
  if (values[0] != 1.0) throw ConfigError("theta.values[0]: must be 1");
  for (std::size_t k = 0; k < jump_times.size(); ++k) {
    if (!(jump_times[k] > 0.0 && jump_times[k] < T)) throw ConfigError("theta.jump_times: must lie in (0, T)");
    if (k > 0 && !(jump_times[k] > jump_times[k - 1])) throw ConfigError("theta.jump_times: must increase strictly");
  }
  for (std::size_t k = 1; k < values.size(); ++k)
    if (!(values[k] >= values[k - 1]) || !std::isfinite(values[k]))
      throw ConfigError("theta.values: must be finite and nondecreasing");
}

double ThetaSchedule::operator()(double t) const {
  auto n = std::lower_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin();
  return values[n];
}

double ThetaSchedule::right_limit(double t) const {
  auto n = std::upper_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin();
  return values[n];
}

double ThetaSchedule::A(double t, double alpha) const {
  if (!(t > 0.0)) return INFINITY;
  double s = 0.0;
  for (double j : jump_times)
    if (j < t) s = j;
  return alpha / ((t - s) * (t - s));
}

std::vector<double> time_partition(const ThetaSchedule& theta, int r) {
  if (r < 1) throw ConfigError("r: must be at least 1");
  theta.validate();
  std::vector<double> t(r + 1, 0.0);
  const double th0 = theta.values[0], thT = theta.theta_T();
  for (int i = 1; i < r; ++i) {
    double level = (1.0 - double(i) / r) * th0 + (double(i) / r) * thT;
    level *= 1.0 - 1e-14;
    if (th0 >= level) continue;
    for (std::size_t k = 0; k < theta.jump_times.size(); ++k)
      if (theta.values[k + 1] >= level) {
        t[i] = theta.jump_times[k];
        break;
      }
  }
  t[r] = theta.T;
  return t;
}

std::vector<double> freeze_thresholds(const ReferenceMeasure& ref, double M, double lambda,
                                      const ThetaSchedule& theta, const std::vector<double>& t_grid) {
  const int r = static_cast<int>(t_grid.size()) - 1;
  EnergyTail tilt(ref.dim(), M, lambda);
  const double total = tilt.energy();
  std::vector<double> out(r);
  for (int i = 0; i < r; ++i) {
    double target = theta.right_limit(t_grid[i]);
    if (target >= theta.theta_T() * (1.0 - 1e-12)) {
      out[i] = INFINITY;
      continue;
    }
    if (target > total) {
      std::ostringstream m;
      m << "freeze_thresholds: Theta(t_" << i << "+) = " << target << " exceeds the tilted energy " << total;
      throw ConfigError(m.str());
    }
    double lo = 0.0, hi = std::max(1.0, 2.0 * M);
    while (tilt.moment(1, hi) < target) hi *= 2.0;
    for (int it = 0; it < 400 && hi - lo > 1e-10 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      (tilt.moment(1, mid) < target ? lo : hi) = mid;
    }
    out[i] = 0.5 * (lo + hi);
  }
  for (int i = 1; i < r; ++i)
    if (out[i] < out[i - 1]) throw std::logic_error("freeze_thresholds: thresholds must be nondecreasing");
  if (r > 0 && !(out[0] > M)) throw std::logic_error("freeze_thresholds: M_0 must exceed M");
  return out;
}

FreezeScheme make_freeze_scheme(const ReferenceMeasure& ref, const ThetaSchedule& theta, double M, int r,
                                std::optional<double> delta) {
  theta.validate();
  if (!(M >= 0.0)) throw ConfigError("M: must be nonnegative");
  if (delta && !(*delta > 0.0)) throw ConfigError("delta: must be positive");
  FreezeScheme fs;
  fs.d = ref.dim();
  fs.M = M;
  fs.r = r;
  fs.theta = theta;
  fs.delta = delta;
  fs.t_grid = time_partition(theta, r);
  if (theta.theta_T() == 1.0) {
    fs.thresholds.assign(r, INFINITY);
    return fs;
  }
  fs.lambda = solve_lambda(ref, M, theta.theta_T());
  fs.psi = cumulant_psi(ref, M, fs.lambda);
  fs.thresholds = freeze_thresholds(ref, M, fs.lambda, theta, fs.t_grid);
  return fs;
}

std::vector<int> release_schedule(const ParticleState& state0, const FreezeScheme& fs) {
  std::vector<int> rel(state0.size(), fs.r + 1);
  for (std::size_t k = 0; k < state0.size(); ++k) {
    double speed = norm(state0.velocity(k));
    for (int i = 1; i <= fs.r; ++i)
      if (speed < fs.thresholds[i - 1]) {
        rel[k] = i;
        break;
      }
  }
  return rel;
}

std::shared_ptr<const FreezeTilt> make_freeze_tilt(const ParticleState& state0, const FreezeScheme& fs,
                                                   const Kernel& kernel) {
  if (fs.delta && kernel.kind != KernelKind::maxwell)
    throw ConfigError("delta: the relative-speed variant requires the Maxwell kernel");
  return std::make_shared<FreezeTilt>(fs.t_grid, release_schedule(state0, fs), fs.delta.value_or(0.0), kernel);
}

TiltingScheme build_freeze_scheme(const ParticleState& state0, const FreezeScheme& fs, const Kernel& kernel) {
  return freeze_plan(fs, kernel).make(state0);
}

TiltPlan freeze_plan(const FreezeScheme& fs, const Kernel& kernel) {
  TiltPlan plan;
  if (fs.degenerate() && !fs.delta) return plan;
  if (!fs.degenerate()) plan.initial = std::make_shared<EnergyTail>(fs.d, fs.M, fs.lambda);
  plan.bind = [fs, kernel](const ParticleState& s0) -> std::shared_ptr<const DynamicTilt> {
    return make_freeze_tilt(s0, fs, kernel);
  };
  return plan;
}

nlohmann::json to_json(const FreezeScheme& fs) {
  auto finite_or_null = [](const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
    return a;
  };
  nlohmann::json j;
  j["d"] = fs.d;
  j["M"] = fs.M;
  j["r"] = fs.r;
  j["t_grid"] = fs.t_grid;
  j["thresholds"] = finite_or_null(fs.thresholds);
  j["lambda"] = fs.lambda;
  j["psi"] = fs.psi;
  j["delta"] = fs.delta ? nlohmann::json(*fs.delta) : nlohmann::json(nullptr);
  j["theta"] = {{"T", fs.theta.T}, {"jump_times", fs.theta.jump_times}, {"values", fs.theta.values}};
  return j;
}

namespace {

std::pair<double, double> mean_se(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  if (x.empty()) return {0.0, 0.0};
  CompensatedSum s;
  for (double v : x) s.add(v);
  double m = s.value() / n;
  if (x.size() < 2) return {m, 0.0};
  CompensatedSum q;
  for (double v : x) q.add((v - m) * (v - m));
  return {m, std::sqrt(q.value() / (n - 1.0) / n)};
}

}  // namespace

ExperimentReport run_experiment(const SimConfig& base, const ExperimentParams& params, std::size_t runs,
                                int threads) {
  base.validate();
  if (runs == 0) throw ConfigError("runs: must be at least 1");
  if (params.theta.T != base.T) throw ConfigError("experiment.theta.T: must equal T");
  ReferenceMeasure ref(base.d);
  FreezeScheme fs = make_freeze_scheme(ref, params.theta, params.M, params.r, params.delta);

  SimConfig cfg = base;
  cfg.tilting = freeze_plan(fs, base.kernel);
  cfg.record_full_states = true;
  if (cfg.checkpoint_times.empty()) {
    for (int k = 0; k <= 20; ++k) cfg.checkpoint_times.push_back(base.T * k / 20.0);
  }

  ExperimentReport rep;
  rep.scheme = fs;
  rep.kernel = base.kernel.name();
  rep.N = base.N;
  rep.times = cfg.checkpoint_times;
  for (double t : rep.times) {
    rep.theta_at.push_back(params.theta(t));
    rep.A_at.push_back(params.theta.A(t, params.alpha_value()));
  }
  for (int i = 0; i < fs.r; ++i) rep.theta_right.push_back(params.theta.right_limit(fs.t_grid[i]));
  rep.rn_bound = ref.z2() * params.theta.theta_T() + params.epsilon;
  rep.cost_bound = fs.delta ? 4.0 * *fs.delta * *fs.delta * params.theta.theta_T() * base.T : 0.0;

  rep.runs.resize(runs);
  const double nd = static_cast<double>(base.N);
  parallel_for(runs, threads, [&](std::size_t k) {
    SimConfig c = cfg;
    c.stream = base.stream + k;
    Trajectory tr = simulate(c);
    ExperimentRun& run = rep.runs[k];
    run.index = k;
    run.seed = c.seed;
    run.stream = c.stream;
    run.ledger = tr.rn_ledger;
    run.log_rn_per_particle = tr.rn_ledger.log_density() / nd;
    run.events = tr.log.size();
    run.real_events = tr.log.real_count();
    const FreezeTilt* ft = tr.scheme ? dynamic_cast<const FreezeTilt*>(&tr.scheme->dynamic_tilt()) : nullptr;
    const double e0 = tr.checkpoints.front().summary.m2;
    for (const auto& cp : tr.checkpoints) {
      const ParticleState& s = *cp.state;
      CompensatedSum un;
      for (std::size_t p = 0; p < s.size(); ++p)
        if (!ft || !ft->frozen_at(p, cp.time)) un.add(norm2(s.velocity(p)));
      run.unfrozen_energy.push_back(un.value() / nd);
      run.unfrozen_fraction.push_back(ft ? ft->active_count(ft->interval(cp.time)) / nd : 1.0);
      run.full_energy.push_back(cp.summary.m2);
      run.max_energy_drift = std::max(run.max_energy_drift, std::abs(cp.summary.m2 - e0) / e0);
    }
    for (int i = 0; i < fs.r; ++i) {
      CompensatedSum e;
      for (std::size_t p = 0; p < tr.initial_state.size(); ++p) {
        auto v = tr.initial_state.velocity(p);
        if (norm(v) <= fs.thresholds[i]) e.add(norm2(v));
      }
      run.truncated_energy.push_back(e.value() / nd);
    }
    if (tr.scheme) {
      CostEstimate cost = dynamic_cost(tr, *tr.scheme);
      run.dynamic_cost = cost.value;
      run.dynamic_cost_path = cost.path_total;
    }
  });

  std::size_t within = 0;
  for (const auto& r : rep.runs)
    if (r.log_rn_per_particle <= rep.rn_bound) ++within;
  rep.rn_bound_frequency = static_cast<double>(within) / static_cast<double>(runs);
  for (std::size_t c = 0; c < rep.times.size(); ++c) {
    std::vector<double> ue, uf, fe;
    for (const auto& r : rep.runs) {
      ue.push_back(r.unfrozen_energy[c]);
      uf.push_back(r.unfrozen_fraction[c]);
      fe.push_back(r.full_energy[c]);
    }
    auto [m, se] = mean_se(ue);
    rep.unfrozen_energy_mean.push_back(m);
    rep.unfrozen_energy_se.push_back(se);
    rep.unfrozen_fraction_mean.push_back(mean_se(uf).first);
    rep.full_energy_mean.push_back(mean_se(fe).first);
  }
  return rep;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["scheme"] = kaclab::to_json(scheme);
  j["kernel"] = kernel;
  j["N"] = N;
  j["checkpoints"] = {{"t", times},
                      {"theta", theta_at},
                      {"A", A_at},
                      {"unfrozen_energy_mean", unfrozen_energy_mean},
                      {"unfrozen_energy_se", unfrozen_energy_se},
                      {"unfrozen_fraction_mean", unfrozen_fraction_mean},
                      {"full_energy_mean", full_energy_mean}};
  for (auto& a : j["checkpoints"]["A"])
    if (!std::isfinite(a.get<double>())) a = nullptr;
  j["theta_right_limits"] = theta_right;
  j["rn_bound"] = rn_bound;
  j["rn_bound_frequency"] = rn_bound_frequency;
  if (scheme.delta) j["cost_bound"] = cost_bound;
  nlohmann::json rr = nlohmann::json::array();
  for (const auto& r : runs) {
    rr.push_back({{"index", r.index},
                  {"seed", r.seed},
                  {"stream", r.stream},
                  {"initial_term", r.ledger.initial_term},
                  {"jump_term", r.ledger.jump_term},
                  {"compensator_term", r.ledger.compensator_term},
                  {"hit_zero", r.ledger.hit_zero},
                  {"log_rn_per_particle", r.ledger.hit_zero ? nlohmann::json(nullptr) : nlohmann::json(r.log_rn_per_particle)},
                  {"max_energy_drift", r.max_energy_drift},
                  {"truncated_energy", r.truncated_energy},
                  {"unfrozen_energy", r.unfrozen_energy},
                  {"dynamic_cost", r.dynamic_cost},
                  {"dynamic_cost_path", r.dynamic_cost_path},
                  {"events", r.events},
                  {"real_events", r.real_events}});
  }
  j["runs"] = rr;
  return j;
}

std::string ExperimentReport::csv() const {
  std::ostringstream o;
  o.precision(17);
  o << "t,unfrozen_energy_mean,unfrozen_energy_se,theta\n";
  for (std::size_t c = 0; c < times.size(); ++c)
    o << times[c] << ',' << unfrozen_energy_mean[c] << ',' << unfrozen_energy_se[c] << ',' << theta_at[c] << '\n';
  return o.str();
}

}  // namespace kaclab
