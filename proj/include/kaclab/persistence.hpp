#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "kaclab/config.hpp"
#include "kaclab/engine.hpp"
#include "kaclab/measure.hpp"

namespace kaclab {

// shortest representation that parses back to the same double
std::string format_double(double x);

void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// header t,i,j,sx,sy,sz,assignment,fictitious; the first d sigma columns when d < 3
std::string event_log_csv(const EventLog& log);
// pre-collision velocities are rebuilt by replaying from `initial`
EventLog parse_event_log_csv(const std::string& text, const ParticleState& initial, double T,
                             const std::string& context = "event log");

nlohmann::json summary_to_json(const MomentSummary& s);
MomentSummary summary_from_json(const nlohmann::json& j);
nlohmann::json checkpoints_to_json(const std::vector<Checkpoint>& cps);
nlohmann::json state_to_json(const ParticleState& s);
ParticleState state_from_json(const nlohmann::json& j);
nlohmann::json ledger_to_json(const RNLedger& l);

struct SavedPaths {
  std::string csv, json;
};

SavedPaths save_trajectory(const std::filesystem::path& dir, const std::string& stem, const Trajectory& traj,
                           const nlohmann::json& config_echo, bool write_log = true);

struct LoadedTrajectory {
  Trajectory traj;
  RunConfig config;
  nlohmann::json sidecar;
};

// refuses sidecars from another tool version unless forced
LoadedTrajectory load_trajectory(const std::filesystem::path& json_path, bool force = false);

struct ReplayReport {
  std::size_t checkpoints = 0;
  double max_deviation = 0.0;
  bool ok = true;
};

ReplayReport replay_check(const LoadedTrajectory& lt, double tolerance = 1e-12);

// header x0,...,x{k-1},weight
WeightedMeasure read_measure_csv(const std::filesystem::path& path);
std::string measure_csv(const WeightedMeasure& mu);

}  // namespace kaclab
