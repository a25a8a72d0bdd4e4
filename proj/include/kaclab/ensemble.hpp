#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "kaclab/config.hpp"
#include "kaclab/engine.hpp"
#include "kaclab/moment_oracle.hpp"

namespace kaclab {

struct RunRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0, stream = 0;
  std::vector<Checkpoint> checkpoints;  // summaries only
  RNLedger ledger;
  std::size_t events = 0, real_events = 0;
  std::string csv_path, json_path;
};

struct EnsembleSummary {
  std::size_t runs = 0;
  MomentTrack track;
  std::vector<double> mass_mean;
  std::vector<std::vector<double>> momentum_mean;
  double log_rn_mean = 0.0, log_rn_se = 0.0;
  std::size_t hit_zero = 0;

  nlohmann::json to_json() const;
};

// run-index-ordered reduction; records must share a checkpoint grid
EnsembleSummary summarize_records(std::vector<RunRecord> records, const std::vector<double>& thresholds);
std::vector<RunRecord> merge_records(std::vector<RunRecord> a, const std::vector<RunRecord>& b);

struct EnsembleResult {
  std::vector<RunRecord> records;
  EnsembleSummary summary;
  nlohmann::json manifest;
};

// run i uses stream config.sim.stream + i; artifacts go under out_dir when non-empty
EnsembleResult run_ensemble(const RunConfig& config, const std::string& out_dir, std::size_t first_index = 0);

}  // namespace kaclab
