#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "kaclab/counterexample.hpp"
#include "kaclab/engine.hpp"

namespace kaclab {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunConfig {
  SimConfig sim;
  std::size_t runs = 1;
  int threads = 1;
  bool write_event_logs = true;
  std::optional<ExperimentParams> experiment;
  nlohmann::json tilt;  // materialized tilt section, null when absent

  // every field with defaults filled in; parse_config_json(echo()) reproduces it
  nlohmann::json echo() const;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_json(const nlohmann::json& j);

// tilt section -> plan; nullopt for null
std::optional<TiltPlan> make_tilt_plan(const nlohmann::json& tilt, int d, const Kernel& kernel);

}  // namespace kaclab
