#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kaclab/measure.hpp"

namespace kaclab {

struct DistanceOptions {
  std::size_t support_cap = 4000;
  std::uint64_t seed = 0;
  int replicates = 4;  // subsample replicates when the cap is exceeded
};

struct DistanceResult {
  double value = 0.0;
  double standard_error = 0.0;  // 0 unless subsampled
  bool subsampled = false;
  std::uint64_t seed = 0;
  std::size_t support = 0;      // combined support size actually solved
  double duality_gap = 0.0;
};

// sup { <f, mu - nu> : |f| <= 1, f 1-Lipschitz }. Requires equal mass.
DistanceResult bl_distance(const WeightedMeasure& mu, const WeightedMeasure& nu, const DistanceOptions& opt = {});
// Same LP with unequal masses allowed (flux space metric).
DistanceResult flux_distance(const WeightedMeasure& w1, const WeightedMeasure& w2, const DistanceOptions& opt = {});
// sum |mu_k - nu_k| after merging
double tv_distance(const WeightedMeasure& mu, const WeightedMeasure& nu);

double moment(const WeightedMeasure& mu, double p, std::optional<double> threshold = std::nullopt);

struct LevelCount {
  double N;
  double hits;
  double trials;
};
struct LevelEstimate {
  double N;
  double probability;
  double standard_error;
};
struct RateFit {
  double slope = 0.0;
  double standard_error = 0.0;
  std::size_t levels = 0;
};

// weighted least squares of log-probability against N
RateFit estimate_ldp_rate(std::span<const LevelCount> counts);
RateFit estimate_ldp_rate(std::span<const LevelEstimate> estimates);

}  // namespace kaclab
