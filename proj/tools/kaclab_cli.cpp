#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "kaclab/config.hpp"
#include "kaclab/counterexample.hpp"
#include "kaclab/ensemble.hpp"
#include "kaclab/error.hpp"
#include "kaclab/metrics.hpp"
#include "kaclab/moment_oracle.hpp"
#include "kaclab/persistence.hpp"
#include "kaclab/rate_function.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kaclab;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::string out_dir;
  std::optional<int> threads;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "JSON configuration file");
  if (config_required) opt->required();
  sub->add_option("--seed", c.seed, "master seed (overrides the config)");
  sub->add_option("--runs", c.runs, "number of runs (overrides the config)");
  sub->add_option("--out-dir", c.out_dir, "output directory");
  sub->add_option("--threads", c.threads, "concurrent runs (overrides the config)");
}

RunConfig load(const Common& c) {
  RunConfig rc = parse_config(c.config);
  if (c.seed) rc.sim.seed = *c.seed;
  if (c.runs) {
    if (*c.runs < 1) throw ConfigError("--runs: must be positive");
    rc.runs = *c.runs;
  }
  if (c.threads) {
    if (*c.threads < 1) throw ConfigError("--threads: must be positive");
    rc.threads = *c.threads;
  }
  return rc;
}

void emit(const std::string& out_dir, const std::string& name, const std::string& text) {
  if (out_dir.empty()) {
    std::cout << text;
  } else {
    write_text_atomic(fs::path(out_dir) / name, text);
    std::cout << (fs::path(out_dir) / name).string() << "\n";
  }
}

int cmd_simulate(const Common& c) {
  RunConfig rc = load(c);
  std::string dir = c.out_dir.empty() ? "kaclab_out" : c.out_dir;
  EnsembleResult r = run_ensemble(rc, dir);
  std::cout << (fs::path(dir) / "manifest.json").string() << "\n";
  return 0;
}

int cmd_experiment(const Common& c) {
  RunConfig rc = load(c);
  if (!rc.experiment) throw ConfigError("experiment: required for tilt-experiment");
  ExperimentReport rep = run_experiment(rc.sim, *rc.experiment, rc.runs, rc.threads);
  json j = rep.to_json();
  j["version"] = kToolVersion;
  j["config"] = rc.echo();
  std::string dir = c.out_dir.empty() ? "kaclab_out" : c.out_dir;
  write_text_atomic(fs::path(dir) / "experiment_report.json", j.dump(1) + "\n");
  write_text_atomic(fs::path(dir) / "experiment.csv", rep.csv());
  std::cout << (fs::path(dir) / "experiment_report.json").string() << "\n";
  return 0;
}

int cmd_rate_eval(const Common& c, const std::string& trajectory, bool force) {
  LoadedTrajectory lt = load_trajectory(trajectory, force);
  json desc;
  try {
    desc = json::parse(read_text(c.config));
  } catch (const json::parse_error& e) {
    throw ConfigError("descriptor file: " + std::string(e.what()));
  }
  if (!desc.is_object() || !desc.contains("triples") || !desc.at("triples").is_array())
    throw ConfigError("descriptor file: expected {\"triples\": [{\"phi\", \"f\", \"g\"}, ...]}");
  for (auto it = desc.begin(); it != desc.end(); ++it)
    if (it.key() != "triples") throw ConfigError(it.key() + ": unknown key");
  const Trajectory& tr = lt.traj;
  ReferenceMeasure ref(tr.initial_state.dim());
  json out;
  out["version"] = kToolVersion;
  out["trajectory"] = trajectory;
  TiltingScheme identity;
  const TiltingScheme& scheme = tr.scheme ? *tr.scheme : identity;
  CostEstimate cost = dynamic_cost(tr, scheme);
  out["dynamic_cost"] = {{"value", cost.value}, {"path_total", cost.path_total}};
  if (scheme.initial_tilt()) {
    out["relative_entropy_parametric"] = relative_entropy(*scheme.initial_tilt());
    std::function<double(VelocityView)> lr = [&](VelocityView v) { return scheme.phi(v); };
    EntropyEstimate e = relative_entropy(empirical_measure(tr.initial_state), &lr);
    out["relative_entropy_empirical"] = {{"value", e.value}, {"standard_error", e.standard_error}};
  } else {
    out["relative_entropy_parametric"] = 0.0;
  }
  json rows = json::array();
  std::size_t k = 0;
  for (const auto& t : desc.at("triples")) {
    const std::string p = "triples[" + std::to_string(k++) + "]";
    if (!t.is_object()) throw ConfigError(p + ": expected an object");
    for (auto it = t.begin(); it != t.end(); ++it)
      if (it.key() != "phi" && it.key() != "f" && it.key() != "g") throw ConfigError(p + "." + it.key() + ": unknown key");
    auto get = [&](const char* key, TestFunctionDescriptor def) {
      return t.contains(key) ? TestFunctionDescriptor::from_json(t.at(key)) : def;
    };
    TestFunctionDescriptor phi = get("phi", TestFunctionDescriptor::spatial_test({}));
    TestFunctionDescriptor f = get("f", TestFunctionDescriptor::spatial_test({}));
    TestFunctionDescriptor g = get("g", TestFunctionDescriptor::flux_test({}));
    XiValues x;
    try {
      x = xi_functionals(tr, phi, f, g, ref);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(p + ": " + e.what());
    }
    rows.push_back({{"phi", phi.to_json()},
                    {"f", f.to_json()},
                    {"g", g.to_json()},
                    {"xi0", x.xi0},
                    {"xi1", x.xi1},
                    {"xi2", x.xi2},
                    {"xi2_flux", x.xi2_flux},
                    {"xi2_intensity", x.xi2_intensity}});
  }
  out["triples"] = rows;
  emit(c.out_dir, "rate_eval.json", out.dump(1) + "\n");
  return 0;
}

WeightedMeasure load_measure(const std::string& path, bool flux, bool& is_flux) {
  if (fs::path(path).extension() == ".json") {
    LoadedTrajectory lt = load_trajectory(path, true);
    is_flux = flux;
    return flux ? flux_measure(lt.traj.log) : empirical_measure(lt.traj.final_state);
  }
  is_flux = flux;
  return read_measure_csv(path);
}

int cmd_metrics(const Common& c, const std::string& a, const std::string& b, bool flux, std::size_t cap) {
  bool fa = false, fb = false;
  WeightedMeasure mu = load_measure(a, flux, fa), nu = load_measure(b, flux, fb);
  DistanceOptions opt;
  opt.support_cap = cap;
  opt.seed = c.seed.value_or(0);
  DistanceResult r;
  try {
    r = flux ? flux_distance(mu, nu, opt) : bl_distance(mu, nu, opt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("metrics: ") + e.what());
  }
  json out = {{"metric", flux ? "flux" : "bounded_lipschitz"},
              {"value", r.value},
              {"standard_error", r.standard_error},
              {"subsampled", r.subsampled},
              {"seed", r.seed},
              {"support", r.support},
              {"duality_gap", r.duality_gap}};
  emit(c.out_dir, "metrics.json", out.dump(1) + "\n");
  return 0;
}

int cmd_moments(const Common& c, const std::string& input, bool force) {
  json j;
  try {
    j = json::parse(read_text(input));
  } catch (const json::parse_error& e) {
    throw IoError("'" + input + "': " + e.what());
  }
  std::vector<std::vector<Checkpoint>> runs;
  json config;
  auto add_sidecar = [&](const json& s) {
    std::vector<Checkpoint> cps;
    for (const auto& r : s.at("checkpoints")) cps.push_back({r.at("t").get<double>(), summary_from_json(r), std::nullopt});
    runs.push_back(cps);
    config = s.at("config");
  };
  if (j.contains("runs") && j.at("runs").is_array()) {
    for (const auto& r : j.at("runs")) {
      if (r.at("sidecar").is_null()) throw IoError("'" + input + "': run without sidecar");
      json s = json::parse(read_text(fs::path(input).parent_path() / r.at("sidecar").get<std::string>()));
      if (s.at("version") != kToolVersion && !force) throw ConfigError("sidecar version mismatch (use --force)");
      add_sidecar(s);
    }
  } else {
    add_sidecar(j);
  }
  RunConfig rc = parse_config_json(config);
  const int d = rc.sim.d;
  const bool maxwell = rc.sim.kernel.kind == KernelKind::maxwell;
  MomentTrack track = make_track(runs, rc.sim.truncation_thresholds);
  std::vector<double> curve(track.times.size(), NAN);
  if (maxwell && d >= 2) {
    std::fill(curve.begin(), curve.end(), 0.0);
    for (const auto& r : runs) {
      auto cv = maxwell_m4_curve(r.front().summary, track.times, d);
      for (std::size_t k = 0; k < cv.size(); ++k) curve[k] += cv[k] / runs.size();
    }
  }
  std::string csv = "t,m2_mean,m2_se,m4_mean,m4_se,m4_curve\n";
  for (std::size_t k = 0; k < track.times.size(); ++k)
    csv += format_double(track.times[k]) + "," + format_double(track.m2[k]) + "," + format_double(track.m2_se[k]) + "," +
           format_double(track.m4[k]) + "," + format_double(track.m4_se[k]) + "," +
           (std::isnan(curve[k]) ? std::string("") : format_double(curve[k])) + "\n";
  emit(c.out_dir, "moments.csv", csv);
  return 0;
}

int cmd_replay(const std::string& input, bool force) {
  json j;
  try {
    j = json::parse(read_text(input));
  } catch (const json::parse_error& e) {
    throw IoError("'" + input + "': " + e.what());
  }
  std::vector<fs::path> sidecars;
  if (j.contains("runs") && j.at("runs").is_array()) {
    if (j.at("version") != kToolVersion && !force)
      throw ConfigError("'" + input + "' was written by version " + j.at("version").get<std::string>() +
                        " (use --force to replay anyway)");
    for (const auto& r : j.at("runs")) {
      if (r.at("sidecar").is_null()) throw IoError("'" + input + "': run without sidecar");
      sidecars.push_back(fs::path(input).parent_path() / r.at("sidecar").get<std::string>());
    }
  } else {
    sidecars.push_back(input);
  }
  bool ok = true;
  json rows = json::array();
  for (const auto& p : sidecars) {
    LoadedTrajectory lt = load_trajectory(p, force);
    ReplayReport r = replay_check(lt);
    ok = ok && r.ok;
    rows.push_back({{"sidecar", p.string()}, {"checkpoints", r.checkpoints}, {"max_deviation", r.max_deviation}, {"ok", r.ok}});
  }
  std::cout << json({{"ok", ok}, {"runs", rows}}).dump(1) << "\n";
  if (!ok) throw SimulationError("replay: checkpoint summaries differ from the persisted values");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kaclab: Monte Carlo laboratory for the Kac collision process"};
  app.require_subcommand(1);
  Common c;
  std::string trajectory, a, b, input;
  bool force = false, flux = false;
  std::size_t cap = 4000;

  auto* sim = app.add_subcommand("simulate", "simulate an ensemble of trajectories");
  add_common(sim, c, true);
  auto* exp = app.add_subcommand("tilt-experiment", "run the frozen-particle counterexample experiment");
  add_common(exp, c, true);
  auto* rate = app.add_subcommand("rate-eval", "evaluate rate-function terms on a persisted trajectory");
  add_common(rate, c, true);
  rate->add_option("--trajectory", trajectory, "trajectory sidecar JSON")->required();
  rate->add_flag("--force", force, "accept sidecars from another tool version");
  auto* met = app.add_subcommand("metrics", "distance between two persisted measures");
  add_common(met, c, false);
  met->add_option("--mu", a, "measure CSV or trajectory sidecar")->required();
  met->add_option("--nu", b, "measure CSV or trajectory sidecar")->required();
  met->add_flag("--flux", flux, "flux metric on E (sidecars give their event-log flux)");
  met->add_option("--support-cap", cap, "combined support cap before subsampling");
  auto* mom = app.add_subcommand("moments", "moment track against the Maxwell moment curve");
  add_common(mom, c, false);
  mom->add_option("--input", input, "manifest or trajectory sidecar JSON")->required();
  mom->add_flag("--force", force, "accept sidecars from another tool version");
  auto* rep = app.add_subcommand("replay", "replay persisted event logs and verify checkpoints");
  add_common(rep, c, false);
  rep->add_option("--input", input, "manifest or trajectory sidecar JSON")->required();
  rep->add_flag("--force", force, "replay sidecars from another tool version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*sim) return cmd_simulate(c);
    if (*exp) return cmd_experiment(c);
    if (*rate) return cmd_rate_eval(c, trajectory, force);
    if (*met) return cmd_metrics(c, a, b, flux, cap);
    if (*mom) return cmd_moments(c, input, force);
    if (*rep) return cmd_replay(input, force);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const json::exception& e) {
    std::cerr << "io error: malformed input: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
