#include "kaclab/rate_function.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/bessel.hpp>

#include "kaclab/error.hpp"
#include "kaclab/numeric.hpp"
#include "kaclab/pair_sum.hpp"
#include "kaclab/sphere_rule.hpp"

namespace kaclab {

using nlohmann::json;

double tau(double k) {
  if (!(k >= 0.0)) throw std::invalid_argument("tau: k must be nonnegative");
  if (k == 0.0) return 1.0;
  return k * std::log(k) - k + 1.0;
}

double relative_entropy(const EnergyTail& tilt) {
  if (tilt.lambda() == 0.0) return 0.0;
  double tail_energy = tilt.moment(1) - tilt.moment(1, tilt.M());
  return tilt.lambda() * tail_energy - tilt.psi();
}

EntropyEstimate relative_entropy(const WeightedMeasure& mu, const std::function<double(VelocityView)>* log_ratio) {
  EntropyEstimate e;
  if (!log_ratio || !*log_ratio) {
    e.value = INFINITY;
    e.absolutely_continuous = false;
    return e;
  }
  const double mass = mu.total_mass();
  CompensatedSum s, q;
  std::vector<double> vals(mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k) {
    vals[k] = (*log_ratio)(mu.point(k));
    s.add(mu.weight(k) * vals[k]);
  }
  e.value = s.value() / mass;
  double w2 = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    double p = mu.weight(k) / mass;
    q.add(p * (vals[k] - e.value) * (vals[k] - e.value));
    w2 += p * p;
  }
  e.standard_error = std::sqrt(q.value() * w2);
  return e;
}

namespace {

std::vector<double> scheme_breakpoints(const DynamicTilt& K, double T) {
  std::vector<double> b;
  for (double t = K.next_breakpoint(0.0); t < T; t = K.next_breakpoint(t)) b.push_back(t);
  return b;
}

SphereRule flux_rule(int d) { return d == 3 ? product_rule(3, 16, 16) : compensator_rule(d); }

}  // namespace

double integrate_pair_functional(const Trajectory& traj, const PairIntegrand& h, std::vector<double> breakpoints,
                                 bool symmetric) {
  const EventLog& log = traj.log;
  const double T = log.horizon();
  ParticleState s = traj.initial_state;
  const double nd = static_cast<double>(s.size());
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::remove_if(breakpoints.begin(), breakpoints.end(), [&](double b) { return !(b > 0.0 && b < T); }),
                    breakpoints.end());
  double cur = 0.0;
  PairSum ps([&](std::size_t i, std::size_t j, VelocityView vi, VelocityView vj) { return h(cur, i, j, vi, vj); },
             symmetric);
  ps.reset(s);
  CompensatedSum total;
  std::size_t b = 0;
  auto advance = [&](double to) {
    for (; b < breakpoints.size() && breakpoints[b] < to; ++b) {
      total.add((breakpoints[b] - cur) * ps.value());
      cur = breakpoints[b];
      ps.reset(s);
    }
    total.add((to - cur) * ps.value());
    cur = to;
  };
  for (std::size_t k = 0; k < log.size() && log.time(k) <= T; ++k) {
    if (log.fictitious(k) || log.i(k) == log.j(k)) continue;
    advance(log.time(k));
    std::size_t i = log.i(k), j = log.j(k);
    double before = ps.block(s, i, j);
    apply_collision(s.velocity(i), s.velocity(j), log.sigma(k));
    ps.apply_change(before, ps.block(s, i, j));
  }
  advance(T);
  return total.value() / (nd * nd);
}

CostEstimate dynamic_cost(const Trajectory& traj, const TiltingScheme& scheme) {
  CostEstimate c;
  const DynamicTilt& K = scheme.dynamic_tilt();
  if (!K.is_identity()) {
    const Kernel kernel = traj.kernel;
    c.value = integrate_pair_functional(
        traj,
        [&](double t, std::size_t i, std::size_t j, VelocityView vi, VelocityView vj) {
          return kernel(vi, vj) * scheme.average(t, i, j, vi, vj, [](double k) { return tau(k); });
        },
        scheme_breakpoints(K, traj.log.horizon()), true);
  }
  c.path_total = static_cast<double>(traj.initial_state.size()) * c.value;
  return c;
}

CostEstimate dynamic_cost_sampled(const Trajectory& traj, const TiltingScheme& scheme, std::size_t time_samples,
                                  std::size_t pairs_per_time, std::uint64_t seed) {
  if (time_samples < 2 || pairs_per_time < 1) throw std::invalid_argument("dynamic_cost_sampled: too few samples");
  const double T = traj.log.horizon();
  const std::size_t n = traj.initial_state.size();
  RandomStream rng(seed, 0x7c0);
  std::vector<double> times(time_samples);
  for (auto& t : times) t = T * rng.uniform();
  std::sort(times.begin(), times.end());
  ParticleState s = traj.initial_state;
  std::size_t next = 0;
  std::vector<double> means;
  for (double t : times) {
    next = replay_events(s, traj.log, next, t);
    CompensatedSum acc;
    for (std::size_t p = 0; p < pairs_per_time; ++p) {
      std::size_t i = rng.index(n), j = rng.index(n);
      auto vi = s.velocity(i), vj = s.velocity(j);
      acc.add(traj.kernel(vi, vj) * scheme.average(t, i, j, vi, vj, [](double k) { return tau(k); }));
    }
    means.push_back(acc.value() / static_cast<double>(pairs_per_time));
  }
  CompensatedSum m;
  for (double x : means) m.add(x);
  const double ns = static_cast<double>(time_samples);
  double mean = m.value() / ns;
  CompensatedSum q;
  for (double x : means) q.add((x - mean) * (x - mean));
  CostEstimate c;
  c.exact = false;
  c.samples = time_samples * pairs_per_time;
  c.value = T * mean;
  c.standard_error = T * std::sqrt(q.value() / (ns - 1.0) / ns);
  c.path_total = static_cast<double>(n) * c.value;
  return c;
}

double SpatialTest::operator()(VelocityView v) const {
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::constant:
      return coefficient;
    case Kind::coordinate:
      return coefficient * v[axis];
    case Kind::energy:
      return coefficient * norm2(v);
    case Kind::radial_bump:
      return coefficient * std::exp(-norm2(v) / (2.0 * radius * radius));
    case Kind::cosine:
      return coefficient * std::cos(dot(wave, v));
  }
  return 0.0;
}

double SpatialTest::log_reference_mgf(const ReferenceMeasure& ref) const {
  const double c = coefficient;
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::constant:
      return c;
    case Kind::coordinate:
      return 0.5 * c * c * ref.coordinate_variance();
    case Kind::energy:
      return std::log(ref.gaussian_moment(c));
    case Kind::radial_bump:
      return std::log(ref.radial_integral([&](double r) { return std::exp(c * std::exp(-r * r / (2.0 * radius * radius))); }));
    case Kind::cosine: {
      // k.v ~ N(0, s2): E e^{c cos X} = I_0(c) + 2 sum_n I_n(c) e^{-n^2 s2 / 2}
      double s2 = norm2(wave) * ref.coordinate_variance();
      double a = std::abs(c);
      double sum = boost::math::cyl_bessel_i(0, a);
      for (int n = 1; n < 200; ++n) {
        double term = 2.0 * boost::math::cyl_bessel_i(n, a) * std::exp(-0.5 * n * n * s2);
        if (c < 0.0 && n % 2 == 1) term = -term;
        sum += term;
        if (std::abs(term) < 1e-18 * sum) break;
      }
      return std::log(sum);
    }
  }
  return 0.0;
}

double TimeProfile::value(double t) const {
  switch (kind) {
    case Kind::constant:
      return rate;
    case Kind::linear:
      return rate * t;
    case Kind::sine:
      return std::sin(rate * t);
  }
  return 0.0;
}

namespace {

double time_derivative(const TimeProfile& a, double t) {
  switch (a.kind) {
    case TimeProfile::Kind::constant:
      return 0.0;
    case TimeProfile::Kind::linear:
      return a.rate;
    case TimeProfile::Kind::sine:
      return a.rate * std::cos(a.rate * t);
  }
  return 0.0;
}

}  // namespace

double FluxTest::operator()(double t, VelocityView v, VelocityView vs, VelocityView sigma) const {
  if (kind == Kind::zero || t < t0 || t >= t1) return 0.0;
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::constant:
      return coefficient;
    case Kind::relative_speed_bump:
      return coefficient * std::exp(-[&] {
        double s = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) s += (v[k] - vs[k]) * (v[k] - vs[k]);
        return s;
      }() / (2.0 * radius * radius));
    case Kind::energy_exchange: {
      double ws = 0.0, vsg = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) {
        ws += (v[k] - vs[k]) * sigma[k];
        vsg += v[k] * sigma[k];
      }
      return coefficient * std::tanh(ws * ws - 2.0 * ws * vsg);
    }
    case Kind::sigma_alignment: {
      double ws = 0.0, w2 = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) {
        double w = v[k] - vs[k];
        ws += w * sigma[k];
        w2 += w * w;
      }
      return coefficient * ws * ws / (1.0 + w2);
    }
  }
  return 0.0;
}

TestFunctionDescriptor TestFunctionDescriptor::spatial_test(SpatialTest s) {
  TestFunctionDescriptor d;
  d.kind = Kind::spatial;
  d.space = std::move(s);
  return d;
}

TestFunctionDescriptor TestFunctionDescriptor::product_test(TimeProfile a, SpatialTest b) {
  TestFunctionDescriptor d;
  d.kind = Kind::product;
  d.time = a;
  d.space = std::move(b);
  return d;
}

TestFunctionDescriptor TestFunctionDescriptor::flux_test(FluxTest g) {
  TestFunctionDescriptor d;
  d.kind = Kind::flux;
  d.flux = g;
  return d;
}

double TestFunctionDescriptor::f(double t, VelocityView v) const {
  switch (kind) {
    case Kind::spatial:
      return space(v);
    case Kind::product:
      return time.value(t) * space(v);
    case Kind::flux:
      break;
  }
  throw std::invalid_argument("test function: flux descriptors have no f(t, v)");
}

double TestFunctionDescriptor::dt_f(double t, VelocityView v) const {
  switch (kind) {
    case Kind::spatial:
      return 0.0;
    case Kind::product:
      return time_derivative(time, t) * space(v);
    case Kind::flux:
      break;
  }
  throw std::invalid_argument("test function: flux descriptors have no f(t, v)");
}

double TestFunctionDescriptor::delta_f(double t, VelocityView v, VelocityView vs, VelocityView sigma) const {
  return collision_delta([&](VelocityView x) { return f(t, x); }, v, vs, sigma);
}

double TestFunctionDescriptor::g(double t, VelocityView v, VelocityView vs, VelocityView sigma) const {
  if (kind != Kind::flux) throw std::invalid_argument("test function: g requires a flux descriptor");
  return flux(t, v, vs, sigma);
}

bool TestFunctionDescriptor::vanishes_at_zero() const {
  if (space.kind == SpatialTest::Kind::zero || space.coefficient == 0.0) return true;
  if (kind == Kind::spatial) return false;
  return time.value(0.0) == 0.0;
}

namespace {

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(path + "." + it.key() + ": unknown key");
  }
}

template <class T>
T get_or(const json& j, const char* key, T def, const std::string& path) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key + ": wrong type");
  }
}

SpatialTest spatial_from_json(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "coefficient", "axis", "radius", "wave"});
  SpatialTest s;
  std::string k = get_or<std::string>(j, "kind", "zero", path);
  if (k == "zero") s.kind = SpatialTest::Kind::zero;
  else if (k == "constant") s.kind = SpatialTest::Kind::constant;
  else if (k == "coordinate") s.kind = SpatialTest::Kind::coordinate;
  else if (k == "energy") s.kind = SpatialTest::Kind::energy;
  else if (k == "radial_bump") s.kind = SpatialTest::Kind::radial_bump;
  else if (k == "cosine") s.kind = SpatialTest::Kind::cosine;
  else throw ConfigError(path + ".kind: unknown spatial test '" + k + "'");
  s.coefficient = get_or<double>(j, "coefficient", 1.0, path);
  s.axis = get_or<int>(j, "axis", 0, path);
  s.radius = get_or<double>(j, "radius", 1.0, path);
  s.wave = get_or<std::vector<double>>(j, "wave", {}, path);
  if (s.axis < 0) throw ConfigError(path + ".axis: must be nonnegative");
  if (!(s.radius > 0.0)) throw ConfigError(path + ".radius: must be positive");
  if (s.kind == SpatialTest::Kind::cosine && s.wave.empty()) throw ConfigError(path + ".wave: required for cosine");
  return s;
}

json spatial_to_json(const SpatialTest& s) {
  static const char* names[] = {"zero", "constant", "coordinate", "energy", "radial_bump", "cosine"};
  return {{"kind", names[static_cast<int>(s.kind)]},
          {"coefficient", s.coefficient},
          {"axis", s.axis},
          {"radius", s.radius},
          {"wave", s.wave}};
}

}  // namespace

TestFunctionDescriptor TestFunctionDescriptor::from_json(const json& j) {
  check_keys(j, "descriptor", {"kind", "space", "time", "flux"});
  std::string k = get_or<std::string>(j, "kind", "spatial", "descriptor");
  TestFunctionDescriptor d;
  if (k == "spatial") {
    d.kind = Kind::spatial;
  } else if (k == "product") {
    d.kind = Kind::product;
  } else if (k == "flux") {
    d.kind = Kind::flux;
  } else {
    throw ConfigError("descriptor.kind: unknown kind '" + k + "'");
  }
  if (j.contains("space")) d.space = spatial_from_json(j.at("space"), "descriptor.space");
  if (j.contains("time")) {
    const json& t = j.at("time");
    check_keys(t, "descriptor.time", {"kind", "rate"});
    std::string tk = get_or<std::string>(t, "kind", "linear", "descriptor.time");
    if (tk == "constant") d.time.kind = TimeProfile::Kind::constant;
    else if (tk == "linear") d.time.kind = TimeProfile::Kind::linear;
    else if (tk == "sine") d.time.kind = TimeProfile::Kind::sine;
    else throw ConfigError("descriptor.time.kind: unknown profile '" + tk + "'");
    d.time.rate = get_or<double>(t, "rate", 1.0, "descriptor.time");
  }
  if (j.contains("flux")) {
    const json& g = j.at("flux");
    const std::string p = "descriptor.flux";
    check_keys(g, p, {"kind", "coefficient", "radius", "t0", "t1"});
    std::string gk = get_or<std::string>(g, "kind", "zero", p);
    if (gk == "zero") d.flux.kind = FluxTest::Kind::zero;
    else if (gk == "constant") d.flux.kind = FluxTest::Kind::constant;
    else if (gk == "relative_speed_bump") d.flux.kind = FluxTest::Kind::relative_speed_bump;
    else if (gk == "energy_exchange") d.flux.kind = FluxTest::Kind::energy_exchange;
    else if (gk == "sigma_alignment") d.flux.kind = FluxTest::Kind::sigma_alignment;
    else throw ConfigError(p + ".kind: unknown flux test '" + gk + "'");
    d.flux.coefficient = get_or<double>(g, "coefficient", 1.0, p);
    d.flux.radius = get_or<double>(g, "radius", 1.0, p);
    d.flux.t0 = get_or<double>(g, "t0", 0.0, p);
    d.flux.t1 = g.contains("t1") && !g.at("t1").is_null() ? get_or<double>(g, "t1", INFINITY, p) : INFINITY;
    if (!(d.flux.radius > 0.0)) throw ConfigError(p + ".radius: must be positive");
    if (!(d.flux.t1 > d.flux.t0)) throw ConfigError(p + ".t1: must exceed t0");
  }
  return d;
}

json TestFunctionDescriptor::to_json() const {
  static const char* kinds[] = {"spatial", "product", "flux"};
  static const char* times[] = {"constant", "linear", "sine"};
  static const char* fluxes[] = {"zero", "constant", "relative_speed_bump", "energy_exchange", "sigma_alignment"};
  json j;
  j["kind"] = kinds[static_cast<int>(kind)];
  if (kind != Kind::flux) j["space"] = spatial_to_json(space);
  if (kind == Kind::product) j["time"] = {{"kind", times[static_cast<int>(time.kind)]}, {"rate", time.rate}};
  if (kind == Kind::flux)
    j["flux"] = {{"kind", fluxes[static_cast<int>(flux.kind)]},
                 {"coefficient", flux.coefficient},
                 {"radius", flux.radius},
                 {"t0", flux.t0},
                 {"t1", std::isfinite(flux.t1) ? json(flux.t1) : json(nullptr)}};
  return j;
}

double xi0(const ParticleState& initial, const SpatialTest& phi, const ReferenceMeasure& ref, double* variance) {
  const std::size_t n = initial.size();
  const double nd = static_cast<double>(n);
  std::vector<double> vals(n);
  CompensatedSum s;
  for (std::size_t k = 0; k < n; ++k) {
    vals[k] = phi(initial.velocity(k));
    s.add(vals[k]);
  }
  double mean = s.value() / nd;
  if (variance) {
    CompensatedSum q;
    for (double x : vals) q.add((x - mean) * (x - mean));
    *variance = n > 1 ? q.value() / (nd - 1.0) / nd : 0.0;
  }
  return mean - phi.log_reference_mgf(ref);
}

double xi1(const Trajectory& traj, const TestFunctionDescriptor& f) {
  if (f.kind == TestFunctionDescriptor::Kind::flux) throw std::invalid_argument("xi1: f must be a function of (t, v)");
  if (!f.vanishes_at_zero()) throw std::invalid_argument("xi1: f(0, .) must vanish");
  if (f.space.kind == SpatialTest::Kind::zero || f.space.coefficient == 0.0) return 0.0;
  const EventLog& log = traj.log;
  const double T = log.horizon();
  ParticleState s = traj.initial_state;
  const double nd = static_cast<double>(s.size());
  const TimeProfile& a = f.time;
  const SpatialTest& b = f.space;
  auto space_mean = [&]() {
    CompensatedSum m;
    for (std::size_t k = 0; k < s.size(); ++k) m.add(b(s.velocity(k)));
    return m.value() / nd;
  };
  // <b, mu_s> is piecewise constant: int <d_s f, mu_s> ds = sum (a(t_{k+1}) - a(t_k)) <b, mu>
  double bmean = space_mean();
  CompensatedSum dt_term, flux_term;
  double cur = 0.0;
  Velocity sig(s.dim());
  for (std::size_t k = 0; k < log.size() && log.time(k) <= T; ++k) {
    if (log.fictitious(k)) continue;
    double t = log.time(k);
    dt_term.add((a.value(t) - a.value(cur)) * bmean);
    cur = t;
    log.recorded_sigma(k, sig);
    auto v = log.pre_v(k), vs = log.pre_v_star(k);
    double db = collision_delta([&](VelocityView x) { return b(x); }, v, vs, sig);
    flux_term.add(a.value(t) * db / nd);
    std::size_t i = log.i(k), j = log.j(k);
    if (i == j) continue;
    double before = (b(s.velocity(i)) + b(s.velocity(j))) / nd;
    apply_collision(s.velocity(i), s.velocity(j), log.sigma(k));
    bmean += (b(s.velocity(i)) + b(s.velocity(j))) / nd - before;
  }
  dt_term.add((a.value(T) - a.value(cur)) * bmean);
  double final_term = a.value(T) * space_mean();
  return final_term - dt_term.value() - flux_term.value();
}

double xi2(const Trajectory& traj, const FluxTest& g, double* flux, double* intensity, double* variance) {
  const EventLog& log = traj.log;
  const double nd = static_cast<double>(traj.initial_state.size());
  if (g.kind == FluxTest::Kind::zero) {
    if (flux) *flux = 0.0;
    if (intensity) *intensity = 0.0;
    if (variance) *variance = 0.0;
    return 0.0;
  }
  CompensatedSum fl, q;
  Velocity sig(log.dim());
  for (std::size_t k = 0; k < log.size(); ++k) {
    if (log.fictitious(k)) continue;
    log.recorded_sigma(k, sig);
    double x = g(log.time(k), log.pre_v(k), log.pre_v_star(k), sig);
    fl.add(x / nd);
    q.add(x * x / (nd * nd));
  }
  const Kernel kernel = traj.kernel;
  SphereRule rule;
  if (g.sigma_dependent()) rule = flux_rule(log.dim());
  double inten = integrate_pair_functional(
      traj,
      [&](double t, std::size_t, std::size_t, VelocityView vi, VelocityView vj) {
        double avg;
        if (g.sigma_dependent()) {
          avg = 0.0;
          for (std::size_t k = 0; k < rule.size(); ++k) avg += rule.weights[k] * std::expm1(g(t, vi, vj, rule.node(k)));
        } else {
          avg = std::expm1(g(t, vi, vj, {}));
        }
        return kernel(vi, vj) * avg;
      },
      {g.t0, g.t1}, g.symmetric());
  if (flux) *flux = fl.value();
  if (intensity) *intensity = inten;
  if (variance) *variance = q.value();
  return fl.value() - inten;
}

XiValues xi_functionals(const Trajectory& traj, const TestFunctionDescriptor& phi, const TestFunctionDescriptor& f,
                        const TestFunctionDescriptor& g, const ReferenceMeasure& ref) {
  if (phi.kind != TestFunctionDescriptor::Kind::spatial)
    throw std::invalid_argument("xi_functionals: phi must be a spatial test function");
  if (g.kind != TestFunctionDescriptor::Kind::flux)
    throw std::invalid_argument("xi_functionals: g must be a flux test function");
  XiValues x;
  x.xi0 = xi0(traj.initial_state, phi.space, ref, &x.xi0_variance);
  x.xi1 = xi1(traj, f);
  x.xi2 = xi2(traj, g.flux, &x.xi2_flux, &x.xi2_intensity, &x.xi2_variance);
  return x;
}

}  // namespace kaclab
