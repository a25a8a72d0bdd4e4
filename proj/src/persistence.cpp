#include "kaclab/persistence.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "kaclab/error.hpp"

namespace kaclab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

namespace {

std::string sigma_header(int d) {
  static const char* names[] = {"sx", "sy", "sz"};
  std::string h;
  for (int c = 0; c < d; ++c) h += (c ? "," : "") + (c < 3 ? std::string(names[c]) : "s" + std::to_string(c + 1));
  return h;
}

double parse_double(std::string_view s, const std::string& context) {
  double x;
  auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw IoError(context + ": cannot parse number '" + std::string(s) + "'");
  return x;
}

std::uint64_t parse_uint(std::string_view s, const std::string& context) {
  std::uint64_t x;
  auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw IoError(context + ": cannot parse integer '" + std::string(s) + "'");
  return x;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t k = 0; k <= line.size(); ++k)
    if (k == line.size() || line[k] == ',') {
      out.push_back(line.substr(start, k - start));
      start = k + 1;
    }
  return out;
}

}  // namespace

std::string event_log_csv(const EventLog& log) {
  std::string out = "t,i,j," + sigma_header(log.dim()) + ",assignment,fictitious\n";
  out.reserve(out.size() + log.size() * 80);
  for (std::size_t k = 0; k < log.size(); ++k) {
    out += format_double(log.time(k));
    out += ',';
    out += std::to_string(log.i(k));
    out += ',';
    out += std::to_string(log.j(k));
    for (double s : log.sigma(k)) {
      out += ',';
      out += format_double(s);
    }
    out += ',';
    out += std::to_string(log.assignment(k));
    out += log.fictitious(k) ? ",1\n" : ",0\n";
  }
  return out;
}

EventLog parse_event_log_csv(const std::string& text, const ParticleState& initial, double T,
                             const std::string& context) {
  const int d = initial.dim();
  EventLog log(d, initial.size(), T);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t,i,j," + sigma_header(d) + ",assignment,fictitious")
    throw IoError(context + ": unexpected header");
  ParticleState s = initial;
  Velocity sigma(d);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::string where = context + " line " + std::to_string(row);
    auto f = split(line);
    if (f.size() != static_cast<std::size_t>(d) + 5) throw IoError(where + ": wrong field count");
    double t = parse_double(f[0], where);
    std::size_t i = parse_uint(f[1], where), j = parse_uint(f[2], where);
    if (i >= s.size() || j >= s.size()) throw IoError(where + ": particle index out of range");
    for (int c = 0; c < d; ++c) sigma[c] = parse_double(f[3 + c], where);
    int a = static_cast<int>(parse_uint(f[3 + d], where));
    auto fict = parse_uint(f[4 + d], where);
    if (a > 3 || fict > 1) throw IoError(where + ": bad assignment or flag");
    std::size_t first = a < 2 ? i : j, second = a < 2 ? j : i;
    log.push(t, i, j, sigma, a, s.velocity(first), s.velocity(second), fict == 1);
    if (!fict && i != j) apply_collision(s.velocity(i), s.velocity(j), sigma);
  }
  return log;
}

json summary_to_json(const MomentSummary& s) {
  return {{"mass", s.mass},       {"momentum", s.momentum},           {"m2", s.m2},
          {"m4", s.m4},           {"second_moment", s.second_moment}, {"truncated_m2", s.truncated_m2}};
}

MomentSummary summary_from_json(const json& j) {
  MomentSummary s;
  s.mass = j.at("mass").get<double>();
  s.momentum = j.at("momentum").get<std::vector<double>>();
  s.m2 = j.at("m2").get<double>();
  s.m4 = j.at("m4").get<double>();
  s.second_moment = j.at("second_moment").get<std::vector<double>>();
  s.truncated_m2 = j.at("truncated_m2").get<std::vector<double>>();
  return s;
}

json checkpoints_to_json(const std::vector<Checkpoint>& cps) {
  json a = json::array();
  for (const auto& c : cps) {
    json r = summary_to_json(c.summary);
    r["t"] = c.time;
    a.push_back(r);
  }
  return a;
}

json state_to_json(const ParticleState& s) {
  return {{"N", s.size()}, {"d", s.dim()}, {"time", s.time()}, {"velocities", s.data()}};
}

ParticleState state_from_json(const json& j) {
  ParticleState s(j.at("N").get<std::size_t>(), j.at("d").get<int>());
  auto v = j.at("velocities").get<std::vector<double>>();
  if (v.size() != s.size() * static_cast<std::size_t>(s.dim())) throw IoError("state: velocity array has wrong size");
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int c = 0; c < s.dim(); ++c) s.velocity(i)[c] = v[i * s.dim() + c];
  s.set_time(j.at("time").get<double>());
  return s;
}

json ledger_to_json(const RNLedger& l) {
  return {{"initial_term", l.initial_term},
          {"jump_term", l.jump_term},
          {"compensator_term", l.compensator_term},
          {"hit_zero", l.hit_zero}};
}

SavedPaths save_trajectory(const fs::path& dir, const std::string& stem, const Trajectory& traj,
                           const json& config_echo, bool write_log) {
  SavedPaths p;
  p.json = (dir / (stem + ".json")).string();
  json side;
  side["version"] = kToolVersion;
  side["config"] = config_echo;
  side["seed"] = traj.seed;
  side["stream"] = traj.stream;
  side["kernel"] = traj.kernel.name();
  side["T"] = traj.log.horizon();
  side["initial_state"] = state_to_json(traj.initial_state);
  side["checkpoints"] = checkpoints_to_json(traj.checkpoints);
  side["ledger"] = ledger_to_json(traj.rn_ledger);
  side["events"] = traj.log.size();
  side["real_events"] = traj.log.real_count();
  if (write_log) {
    p.csv = (dir / (stem + ".csv")).string();
    side["event_log"] = stem + ".csv";
    write_text_atomic(p.csv, event_log_csv(traj.log));
  } else {
    side["event_log"] = nullptr;
  }
  write_text_atomic(p.json, side.dump(1) + "\n");
  return p;
}

LoadedTrajectory load_trajectory(const fs::path& json_path, bool force) {
  LoadedTrajectory lt;
  try {
    lt.sidecar = json::parse(read_text(json_path));
  } catch (const json::parse_error& e) {
    throw IoError("'" + json_path.string() + "': " + e.what());
  }
  const json& j = lt.sidecar;
  try {
    std::string version = j.at("version").get<std::string>();
    if (version != kToolVersion && !force)
      throw ConfigError("'" + json_path.string() + "' was written by version " + version + ", this is " +
                        kToolVersion + " (use --force to replay anyway)");
    lt.config = parse_config_json(j.at("config"));
    Trajectory& tr = lt.traj;
    tr.seed = j.at("seed").get<std::uint64_t>();
    tr.stream = j.at("stream").get<std::uint64_t>();
    tr.kernel = Kernel::from_name(j.at("kernel").get<std::string>());
    tr.initial_state = state_from_json(j.at("initial_state"));
    double T = j.at("T").get<double>();
    for (const auto& c : j.at("checkpoints")) {
      Checkpoint cp;
      cp.time = c.at("t").get<double>();
      cp.summary = summary_from_json(c);
      tr.checkpoints.push_back(cp);
    }
    const json& l = j.at("ledger");
    tr.rn_ledger.initial_term = l.at("initial_term").get<double>();
    tr.rn_ledger.jump_term = l.at("jump_term").get<double>();
    tr.rn_ledger.compensator_term = l.at("compensator_term").get<double>();
    tr.rn_ledger.hit_zero = l.at("hit_zero").get<bool>();
    if (j.at("event_log").is_null()) throw IoError("'" + json_path.string() + "' has no event log");
    fs::path csv = json_path.parent_path() / j.at("event_log").get<std::string>();
    tr.log = parse_event_log_csv(read_text(csv), tr.initial_state, T, csv.string());
    tr.final_state = replay_to(tr.initial_state, tr.log, T);
    std::optional<TiltPlan> plan = lt.config.sim.tilting;
    if (lt.config.experiment) {
      const auto& e = *lt.config.experiment;
      plan = freeze_plan(make_freeze_scheme(ReferenceMeasure(lt.config.sim.d), e.theta, e.M, e.r, e.delta), tr.kernel);
    }
    if (plan) {
      tr.scheme = std::make_shared<TiltingScheme>(plan->make(tr.initial_state));
      tr.under_tilt = plan->simulate_under_tilt;
    }
  } catch (const json::exception& e) {
    throw IoError("'" + json_path.string() + "': malformed sidecar: " + e.what());
  }
  return lt;
}

ReplayReport replay_check(const LoadedTrajectory& lt, double tolerance) {
  ReplayReport rep;
  const Trajectory& tr = lt.traj;
  ParticleState s = tr.initial_state;
  std::size_t next = 0;
  auto dev = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  for (const auto& cp : tr.checkpoints) {
    next = replay_events(s, tr.log, next, cp.time);
    MomentSummary m = summarize(s, lt.config.sim.truncation_thresholds);
    double d = std::max({dev(m.mass, cp.summary.mass), dev(m.m2, cp.summary.m2), dev(m.m4, cp.summary.m4)});
    for (std::size_t k = 0; k < m.momentum.size(); ++k) d = std::max(d, dev(m.momentum[k], cp.summary.momentum.at(k)));
    for (std::size_t k = 0; k < m.second_moment.size(); ++k)
      d = std::max(d, dev(m.second_moment[k], cp.summary.second_moment.at(k)));
    for (std::size_t k = 0; k < m.truncated_m2.size(); ++k)
      d = std::max(d, dev(m.truncated_m2[k], cp.summary.truncated_m2.at(k)));
    rep.max_deviation = std::max(rep.max_deviation, d);
    ++rep.checkpoints;
  }
  rep.ok = rep.max_deviation <= tolerance;
  return rep;
}

WeightedMeasure read_measure_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path.string() + "': empty measure file");
  auto head = split(line);
  if (head.size() < 2 || head.back() != "weight") throw IoError("'" + path.string() + "': last column must be weight");
  const std::size_t k = head.size() - 1;
  WeightedMeasure mu(k);
  std::vector<double> x(k);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::string where = path.string() + " line " + std::to_string(row);
    auto f = split(line);
    if (f.size() != k + 1) throw IoError(where + ": wrong field count");
    for (std::size_t c = 0; c < k; ++c) x[c] = parse_double(f[c], where);
    double w = parse_double(f[k], where);
    if (!(w >= 0.0)) throw IoError(where + ": negative weight");
    mu.add(x, w);
  }
  return mu;
}

std::string measure_csv(const WeightedMeasure& mu) {
  std::string out;
  for (std::size_t c = 0; c < mu.dim(); ++c) out += "x" + std::to_string(c) + ",";
  out += "weight\n";
  for (std::size_t k = 0; k < mu.size(); ++k) {
    for (double x : mu.point(k)) out += format_double(x) + ",";
    out += format_double(mu.weight(k)) + "\n";
  }
  return out;
}

}  // namespace kaclab
