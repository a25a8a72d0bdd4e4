#include "kaclab/ensemble.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "kaclab/numeric.hpp"
#include "kaclab/parallel.hpp"
#include "kaclab/persistence.hpp"

namespace kaclab {

namespace fs = std::filesystem;
using nlohmann::json;

EnsembleSummary summarize_records(std::vector<RunRecord> records, const std::vector<double>& thresholds) {
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) { return a.index < b.index; });
  EnsembleSummary s;
  s.runs = records.size();
  std::vector<std::vector<Checkpoint>> cps;
  for (const auto& r : records) cps.push_back(r.checkpoints);
  s.track = make_track(cps, thresholds);
  const double n = static_cast<double>(records.size());
  if (records.empty()) return s;
  for (std::size_t c = 0; c < s.track.times.size(); ++c) {
    CompensatedSum mass;
    std::vector<CompensatedSum> mom(records[0].checkpoints[c].summary.momentum.size());
    for (const auto& r : records) {
      mass.add(r.checkpoints[c].summary.mass);
      for (std::size_t k = 0; k < mom.size(); ++k) mom[k].add(r.checkpoints[c].summary.momentum[k]);
    }
    s.mass_mean.push_back(mass.value() / n);
    std::vector<double> m;
    for (auto& x : mom) m.push_back(x.value() / n);
    s.momentum_mean.push_back(m);
  }
  std::vector<double> lr;
  for (const auto& r : records) {
    if (r.ledger.hit_zero)
      ++s.hit_zero;
    else
      lr.push_back(r.ledger.log_density());
  }
  if (!lr.empty()) {
    CompensatedSum a;
    for (double x : lr) a.add(x);
    s.log_rn_mean = a.value() / lr.size();
    CompensatedSum q;
    for (double x : lr) q.add((x - s.log_rn_mean) * (x - s.log_rn_mean));
    s.log_rn_se = lr.size() > 1 ? std::sqrt(q.value() / (lr.size() - 1.0) / lr.size()) : 0.0;
  }
  return s;
}

std::vector<RunRecord> merge_records(std::vector<RunRecord> a, const std::vector<RunRecord>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end(), [](const RunRecord& x, const RunRecord& y) { return x.index < y.index; });
  for (std::size_t k = 1; k < a.size(); ++k)
    if (a[k].index == a[k - 1].index) throw std::invalid_argument("merge_records: duplicate run index");
  return a;
}

json EnsembleSummary::to_json() const {
  json cps = json::array();
  for (std::size_t c = 0; c < track.times.size(); ++c) {
    cps.push_back({{"t", track.times[c]},
                   {"mass_mean", mass_mean[c]},
                   {"momentum_mean", momentum_mean[c]},
                   {"m2_mean", track.m2[c]},
                   {"m2_se", track.m2_se[c]},
                   {"m4_mean", track.m4[c]},
                   {"m4_se", track.m4_se[c]},
                   {"truncated_m2_mean", track.truncated[c]},
                   {"truncated_m2_se", track.truncated_se[c]}});
  }
  return {{"runs", runs},
          {"thresholds", track.thresholds},
          {"checkpoints", cps},
          {"log_rn_mean", log_rn_mean},
          {"log_rn_se", log_rn_se},
          {"hit_zero", hit_zero}};
}

namespace {

std::string run_stem(std::size_t index) {
  std::ostringstream o;
  o << "run_" << std::setw(5) << std::setfill('0') << index;
  return o.str();
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

EnsembleResult run_ensemble(const RunConfig& config, const std::string& out_dir, std::size_t first_index) {
  auto start = std::chrono::steady_clock::now();
  std::string started = utc_now();
  EnsembleResult res;
  const std::size_t n = config.runs;
  res.records.resize(n);
  const json base_echo = config.echo();
  std::mutex writer;
  parallel_for(n, config.threads, [&](std::size_t k) {
    std::size_t index = first_index + k;
    SimConfig c = config.sim;
    c.stream = config.sim.stream + index;
    Trajectory tr = simulate(c);
    RunRecord& r = res.records[k];
    r.index = index;
    r.seed = c.seed;
    r.stream = c.stream;
    for (const auto& cp : tr.checkpoints) r.checkpoints.push_back({cp.time, cp.summary, std::nullopt});
    r.ledger = tr.rn_ledger;
    r.events = tr.log.size();
    r.real_events = tr.log.real_count();
    if (!out_dir.empty()) {
      json echo = base_echo;
      echo["stream"] = c.stream;
      echo["runs"] = 1;
      std::lock_guard<std::mutex> lock(writer);
      SavedPaths p = save_trajectory(fs::path(out_dir) / "runs", run_stem(index), tr, echo, config.write_event_logs);
      r.csv_path = p.csv;
      r.json_path = p.json;
    }
  });
  res.summary = summarize_records(res.records, config.sim.truncation_thresholds);

  json runs = json::array();
  for (const auto& r : res.records)
    runs.push_back({{"index", r.index},
                    {"seed", r.seed},
                    {"stream", r.stream},
                    {"event_log", r.csv_path.empty() ? json(nullptr) : json(fs::path(r.csv_path).lexically_relative(out_dir).string())},
                    {"sidecar", r.json_path.empty() ? json(nullptr) : json(fs::path(r.json_path).lexically_relative(out_dir).string())},
                    {"events", r.events},
                    {"real_events", r.real_events},
                    {"ledger", ledger_to_json(r.ledger)}});
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.manifest = {{"version", kToolVersion},
                  {"config", base_echo},
                  {"master_seed", config.sim.seed},
                  {"first_index", first_index},
                  {"runs", runs},
                  {"artifacts", {{"summary", "summary.json"}, {"manifest", "manifest.json"}}},
                  {"wall_clock", {{"started_utc", started}, {"seconds", seconds}}}};
  if (!out_dir.empty()) {
    json summary = res.summary.to_json();
    summary["version"] = kToolVersion;
    summary["config"] = base_echo;
    summary["first_index"] = first_index;
    write_text_atomic(fs::path(out_dir) / "summary.json", summary.dump(1) + "\n");
    write_text_atomic(fs::path(out_dir) / "manifest.json", res.manifest.dump(1) + "\n");
  }
  return res;
}

}  // namespace kaclab
