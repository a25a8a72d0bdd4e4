#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "kaclab/engine.hpp"
#include "kaclab/girsanov.hpp"
#include "kaclab/reference.hpp"

namespace kaclab {

// log int e^{lambda |v|^2 1[|v| >= M]} dmu*
double cumulant_psi(const ReferenceMeasure& ref, double M, double lambda);
// <|v|^2> under the normalized tilted law
double tilted_energy(const ReferenceMeasure& ref, double M, double lambda);
// lambda in (0, z2) with tilted energy theta_T
double solve_lambda(const ReferenceMeasure& ref, double M, double theta_T);
// sup_lambda { a lambda - psi_M(lambda) }
double legendre_psi_star(const ReferenceMeasure& ref, double a, double M = 0.0);

// Piecewise-constant, left-continuous: Theta = values[k] on (jump_times[k-1], jump_times[k]]
struct ThetaSchedule {
  double T = 1.0;
  std::vector<double> jump_times;
  std::vector<double> values{1.0};  // jump_times.size() + 1 entries, values[0] = 1

  void validate() const;
  double operator()(double t) const;
  double right_limit(double t) const;
  double theta_T() const { return values.back(); }
  // alpha (t - last point of {0} u jump_times before t)^{-2}
  double A(double t, double alpha) const;
};

std::vector<double> time_partition(const ThetaSchedule& theta, int r);

struct FreezeScheme {
  int d = 3;
  double M = 0.0;
  int r = 1;
  ThetaSchedule theta;
  std::vector<double> t_grid;      // t_0 .. t_r
  std::vector<double> thresholds;  // M_0 .. M_{r-1}, +inf sentinel
  double lambda = 0.0;
  double psi = 0.0;
  std::optional<double> delta;  // Maxwell variant

  bool degenerate() const { return lambda == 0.0; }
};

// M_0 .. M_{r-1} with truncated tilted energy Theta(t_i+)
std::vector<double> freeze_thresholds(const ReferenceMeasure& ref, double M, double lambda,
                                      const ThetaSchedule& theta, const std::vector<double>& t_grid);

FreezeScheme make_freeze_scheme(const ReferenceMeasure& ref, const ThetaSchedule& theta, double M, int r,
                                std::optional<double> delta = std::nullopt);

// release[k] = first interval i in 1..r+1 on which particle k is unfrozen
std::vector<int> release_schedule(const ParticleState& state0, const FreezeScheme& fs);
std::shared_ptr<const FreezeTilt> make_freeze_tilt(const ParticleState& state0, const FreezeScheme& fs,
                                                   const Kernel& kernel);
TiltingScheme build_freeze_scheme(const ParticleState& state0, const FreezeScheme& fs, const Kernel& kernel);
TiltPlan freeze_plan(const FreezeScheme& fs, const Kernel& kernel);

struct ExperimentParams {
  ThetaSchedule theta;
  double M = 4.0;
  int r = 4;
  std::optional<double> delta;
  std::optional<double> alpha;  // default 10 Theta(T)
  double epsilon = 0.5;

  double alpha_value() const { return alpha ? *alpha : 10.0 * theta.theta_T(); }
};

struct ExperimentRun {
  std::size_t index = 0;
  std::uint64_t seed = 0, stream = 0;
  RNLedger ledger;
  double log_rn_per_particle = 0.0;
  double max_energy_drift = 0.0;        // relative, over checkpoints
  std::vector<double> truncated_energy;  // <|v|^2 1[|v| <= M_i], mu_0>, i = 0..r-1
  std::vector<double> unfrozen_energy;   // per checkpoint
  std::vector<double> unfrozen_fraction;
  std::vector<double> full_energy;
  double dynamic_cost = 0.0;
  double dynamic_cost_path = 0.0;
  std::size_t events = 0, real_events = 0;
};

struct ExperimentReport {
  FreezeScheme scheme;
  std::string kernel;
  std::size_t N = 0;
  std::vector<double> times, theta_at, A_at;
  std::vector<double> unfrozen_energy_mean, unfrozen_energy_se;
  std::vector<double> unfrozen_fraction_mean, full_energy_mean;
  std::vector<double> theta_right;  // Theta(t_i+), i = 0..r-1
  std::vector<ExperimentRun> runs;
  double rn_bound = 0.0;  // z2 Theta(T) + epsilon
  double rn_bound_frequency = 0.0;
  double cost_bound = 0.0;  // 4 delta^2 Theta(T) T, Maxwell variant

  nlohmann::json to_json() const;
  std::string csv() const;
};

ExperimentReport run_experiment(const SimConfig& base, const ExperimentParams& params, std::size_t runs,
                                 int threads = 1);

nlohmann::json to_json(const FreezeScheme& fs);

}  // namespace kaclab
