#include "kaclab/config.hpp"

#include <fstream>
#include <sstream>

#include "kaclab/error.hpp"

namespace kaclab {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError((path.empty() ? "" : path + ".") + it.key() + ": unknown key");
  }
}

std::string field(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

double get_number(const json& j, const std::string& path, const char* key, std::optional<double> def = std::nullopt) {
  if (!j.contains(key) || j.at(key).is_null()) {
    if (def) return *def;
    throw ConfigError(field(path, key) + ": required");
  }
  if (!j.at(key).is_number()) throw ConfigError(field(path, key) + ": expected a number");
  return j.at(key).get<double>();
}

std::int64_t get_integer(const json& j, const std::string& path, const char* key,
                         std::optional<std::int64_t> def = std::nullopt) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(field(path, key) + ": required");
  }
  const json& v = j.at(key);
  if (v.is_number_unsigned()) {
    auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(INT64_MAX)) throw ConfigError(field(path, key) + ": out of range");
    return static_cast<std::int64_t>(u);
  }
  if (!v.is_number_integer()) throw ConfigError(field(path, key) + ": expected an integer");
  return v.get<std::int64_t>();
}

std::uint64_t get_u64(const json& j, const std::string& path, const char* key, std::uint64_t def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(field(path, key) + ": expected a nonnegative integer");
}

std::vector<double> get_numbers(const json& j, const std::string& path, const char* key, std::vector<double> def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(field(path, key) + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_number()) throw ConfigError(field(path, key) + "[" + std::to_string(k) + "]: expected a number");
    out.push_back(v[k].get<double>());
  }
  return out;
}

bool get_bool(const json& j, const std::string& path, const char* key, bool def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_boolean()) throw ConfigError(field(path, key) + ": expected a boolean");
  return j.at(key).get<bool>();
}

std::string get_string(const json& j, const std::string& path, const char* key, std::optional<std::string> def) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(field(path, key) + ": required");
  }
  if (!j.at(key).is_string()) throw ConfigError(field(path, key) + ": expected a string");
  return j.at(key).get<std::string>();
}

InitialLaw parse_initial(const json& j, int d) {
  const std::string p = "initial";
  check_keys(j, p, {"kind", "axis_variances", "levels", "probs"});
  InitialLaw law;
  std::string kind = get_string(j, p, "kind", "reference");
  if (kind == "reference") {
    law.kind = InitialLaw::Kind::reference;
    if (j.size() > 1) throw ConfigError(p + ": the reference law takes no parameters");
  } else if (kind == "scale_mixture") {
    law.kind = InitialLaw::Kind::scale_mixture;
    law.axis_variances = get_numbers(j, p, "axis_variances", std::vector<double>(d, 1.0 / d));
    law.levels = get_numbers(j, p, "levels", {1.0});
    law.probs = get_numbers(j, p, "probs", {1.0});
  } else {
    throw ConfigError(p + ".kind: unknown initial law '" + kind + "'");
  }
  try {
    law.validate(d);
  } catch (const ConfigError& e) {
    throw ConfigError(p + ": " + e.what());
  }
  return law;
}

json initial_echo(const InitialLaw& law) {
  if (law.kind == InitialLaw::Kind::reference) return {{"kind", "reference"}};
  return {{"kind", "scale_mixture"}, {"axis_variances", law.axis_variances}, {"levels", law.levels}, {"probs", law.probs}};
}

json materialize_tilt(const json& j, int d) {
  if (j.is_null()) return nullptr;
  const std::string p = "tilt";
  check_keys(j, p, {"initial", "dynamic", "simulate_under_tilt", "sigma_order"});
  json out;
  if (!j.contains("initial") || j.at("initial").is_null()) {
    out["initial"] = nullptr;
  } else {
    const json& ini = j.at("initial");
    check_keys(ini, "tilt.initial", {"M", "lambda", "theta_T"});
    double M = get_number(ini, "tilt.initial", "M", 0.0);
    if (!(M >= 0.0)) throw ConfigError("tilt.initial.M: must be nonnegative");
    bool has_l = ini.contains("lambda"), has_t = ini.contains("theta_T");
    if (has_l == has_t) throw ConfigError("tilt.initial: give exactly one of lambda, theta_T");
    json o = {{"M", M}};
    if (has_l) {
      double l = get_number(ini, "tilt.initial", "lambda");
      if (!(l < 0.5 * d)) throw ConfigError("tilt.initial.lambda: must be below z2 = d/2");
      o["lambda"] = l;
    } else {
      double th = get_number(ini, "tilt.initial", "theta_T");
      if (!(th > 1.0)) throw ConfigError("tilt.initial.theta_T: must exceed 1");
      o["theta_T"] = th;
    }
    out["initial"] = o;
  }
  json dyn = j.contains("dynamic") ? j.at("dynamic") : json{{"kind", "identity"}};
  check_keys(dyn, "tilt.dynamic", {"kind", "value"});
  std::string kind = get_string(dyn, "tilt.dynamic", "kind", "identity");
  if (kind == "identity") {
    out["dynamic"] = {{"kind", kind}};
  } else if (kind == "constant" || kind == "relative_speed" || kind == "sigma_test") {
    double v = get_number(dyn, "tilt.dynamic", "value");
    if (kind == "constant" && !(v > 0.0)) throw ConfigError("tilt.dynamic.value: must be positive");
    if (kind != "constant" && !(v >= 0.0)) throw ConfigError("tilt.dynamic.value: must be nonnegative");
    out["dynamic"] = {{"kind", kind}, {"value", v}};
  } else {
    throw ConfigError("tilt.dynamic.kind: unknown tilt '" + kind + "'");
  }
  out["simulate_under_tilt"] = get_bool(j, p, "simulate_under_tilt", true);
  std::int64_t order = get_integer(j, p, "sigma_order", 26);
  if (order < 1) throw ConfigError("tilt.sigma_order: must be positive");
  out["sigma_order"] = order;
  return out;
}

ExperimentParams parse_experiment(const json& j, double T) {
  const std::string p = "experiment";
  check_keys(j, p, {"theta", "M", "r", "delta", "alpha", "epsilon"});
  ExperimentParams e;
  if (!j.contains("theta")) throw ConfigError("experiment.theta: required");
  const json& th = j.at("theta");
  check_keys(th, "experiment.theta", {"jump_times", "values"});
  e.theta.T = T;
  e.theta.jump_times = get_numbers(th, "experiment.theta", "jump_times", {});
  e.theta.values = get_numbers(th, "experiment.theta", "values", {1.0});
  try {
    e.theta.validate();
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("experiment.") + err.what());
  }
  e.M = get_number(j, p, "M", 4.0);
  if (!(e.M >= 0.0)) throw ConfigError("experiment.M: must be nonnegative");
  std::int64_t r = get_integer(j, p, "r", 4);
  if (r < 1) throw ConfigError("experiment.r: must be at least 1");
  e.r = static_cast<int>(r);
  if (j.contains("delta") && !j.at("delta").is_null()) {
    e.delta = get_number(j, p, "delta");
    if (!(*e.delta > 0.0)) throw ConfigError("experiment.delta: must be positive");
  }
  if (j.contains("alpha") && !j.at("alpha").is_null()) {
    e.alpha = get_number(j, p, "alpha");
    if (!(*e.alpha > 0.0)) throw ConfigError("experiment.alpha: must be positive");
  }
  e.epsilon = get_number(j, p, "epsilon", 0.5);
  return e;
}

}  // namespace

std::optional<TiltPlan> make_tilt_plan(const json& tilt, int d, const Kernel& kernel) {
  if (tilt.is_null()) return std::nullopt;
  TiltPlan plan;
  const json& ini = tilt.at("initial");
  if (!ini.is_null()) {
    double M = ini.at("M").get<double>();
    double lambda = ini.contains("lambda") ? ini.at("lambda").get<double>()
                                           : solve_lambda(ReferenceMeasure(d), M, ini.at("theta_T").get<double>());
    plan.initial = std::make_shared<EnergyTail>(d, M, lambda);
  }
  const json& dyn = tilt.at("dynamic");
  std::string kind = dyn.at("kind").get<std::string>();
  std::shared_ptr<const DynamicTilt> K;
  if (kind == "constant") K = std::make_shared<ConstantTilt>(dyn.at("value").get<double>());
  else if (kind == "relative_speed") K = std::make_shared<RelativeSpeedTilt>(dyn.at("value").get<double>(), kernel);
  else if (kind == "sigma_test") K = std::make_shared<SigmaTestTilt>(dyn.at("value").get<double>());
  if (K) plan.bind = [K](const ParticleState&) { return K; };
  plan.simulate_under_tilt = tilt.at("simulate_under_tilt").get<bool>();
  plan.sigma_order = tilt.at("sigma_order").get<int>();
  return plan;
}

RunConfig parse_config_json(const json& j) {
  check_keys(j, "", {"N", "T", "d", "kernel", "seed", "stream", "runs", "threads", "checkpoints",
                     "record_full_states", "truncation_thresholds", "write_event_logs", "initial", "tilt",
                     "experiment"});
  RunConfig rc;
  SimConfig& s = rc.sim;
  std::int64_t N = get_integer(j, "", "N");
  if (N < 1) throw ConfigError("N: must be a positive integer");
  s.N = static_cast<std::size_t>(N);
  s.T = get_number(j, "", "T");
  if (!(s.T >= 0.0) || !std::isfinite(s.T)) throw ConfigError("T: must be finite and nonnegative");
  std::int64_t d = get_integer(j, "", "d", 3);
  if (d < 1 || d > 3) throw ConfigError("d: must be 1, 2 or 3");
  s.d = static_cast<int>(d);
  try {
    s.kernel = Kernel::from_name(get_string(j, "", "kernel", std::nullopt));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
  s.seed = get_u64(j, "", "seed", 0);
  s.stream = get_u64(j, "", "stream", 0);
  std::int64_t runs = get_integer(j, "", "runs", 1);
  if (runs < 1) throw ConfigError("runs: must be a positive integer");
  rc.runs = static_cast<std::size_t>(runs);
  std::int64_t threads = get_integer(j, "", "threads", 1);
  if (threads < 1) throw ConfigError("threads: must be a positive integer");
  rc.threads = static_cast<int>(threads);
  s.checkpoint_times = get_numbers(j, "", "checkpoints", {});
  if (s.checkpoint_times.empty()) s.checkpoint_times = s.resolved_checkpoints();
  s.record_full_states = get_bool(j, "", "record_full_states", false);
  s.truncation_thresholds = get_numbers(j, "", "truncation_thresholds", {});
  rc.write_event_logs = get_bool(j, "", "write_event_logs", true);
  s.initial = j.contains("initial") ? parse_initial(j.at("initial"), s.d) : InitialLaw{};
  rc.tilt = materialize_tilt(j.contains("tilt") ? j.at("tilt") : json(nullptr), s.d);
  if (j.contains("experiment") && !j.at("experiment").is_null()) {
    rc.experiment = parse_experiment(j.at("experiment"), s.T);
    if (!rc.tilt.is_null()) throw ConfigError("experiment: cannot be combined with tilt");
  }
  try {
    s.validate();
    s.tilting = make_tilt_plan(rc.tilt, s.d, s.kernel);
  } catch (const ConfigError& e) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("tilt: ") + e.what());
  }
  return rc;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_config_json(j);
}

json RunConfig::echo() const {
  json j;
  j["N"] = sim.N;
  j["T"] = sim.T;
  j["d"] = sim.d;
  j["kernel"] = sim.kernel.name();
  j["seed"] = sim.seed;
  j["stream"] = sim.stream;
  j["runs"] = runs;
  j["threads"] = threads;
  j["checkpoints"] = sim.checkpoint_times;
  j["record_full_states"] = sim.record_full_states;
  j["truncation_thresholds"] = sim.truncation_thresholds;
  j["write_event_logs"] = write_event_logs;
  j["initial"] = initial_echo(sim.initial);
  j["tilt"] = tilt;
  if (experiment) {
    const auto& e = *experiment;
    j["experiment"] = {{"theta", {{"jump_times", e.theta.jump_times}, {"values", e.theta.values}}},
                       {"M", e.M},
                       {"r", e.r},
                       {"delta", e.delta ? json(*e.delta) : json(nullptr)},
                       {"alpha", e.alpha ? json(*e.alpha) : json(nullptr)},
                       {"epsilon", e.epsilon}};
  } else {
    j["experiment"] = nullptr;
  }
  return j;
}

}  // namespace kaclab
