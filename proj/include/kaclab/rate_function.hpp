#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "kaclab/engine.hpp"
#include "kaclab/girsanov.hpp"
#include "kaclab/measure.hpp"
#include "kaclab/reference.hpp"

namespace kaclab {

// k log k - k + 1, tau(0) = 1
double tau(double k);

// H(tilted | reference) = int phi d(tilted)
double relative_entropy(const EnergyTail& tilt);

struct EntropyEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  bool absolutely_continuous = true;  // false: +inf, no density evaluator
};

// plug-in <log dmu/dmu*, mu>; without an evaluator the result is flagged +inf
EntropyEstimate relative_entropy(const WeightedMeasure& mu,
                                 const std::function<double(VelocityView)>* log_ratio = nullptr);

// h(t, i, j, v, v*) integrated as int_0^T dt (1/N^2) sum_{i,j} h; h must be
// constant in t between consecutive breakpoints
using PairIntegrand = std::function<double(double, std::size_t, std::size_t, VelocityView, VelocityView)>;
double integrate_pair_functional(const Trajectory& traj, const PairIntegrand& h, std::vector<double> breakpoints,
                                 bool symmetric);

struct CostEstimate {
  double value = 0.0;  // int tau(K) d mbar, flux mass 1/N per unit intensity
  double standard_error = 0.0;
  double path_total = 0.0;  // N * value
  bool exact = true;
  std::size_t samples = 0;
};

CostEstimate dynamic_cost(const Trajectory& traj, const TiltingScheme& scheme);
// uniform times x uniform ordered pairs; SE from per-time means
CostEstimate dynamic_cost_sampled(const Trajectory& traj, const TiltingScheme& scheme, std::size_t time_samples,
                                  std::size_t pairs_per_time, std::uint64_t seed);

struct SpatialTest {
  enum class Kind { zero, constant, coordinate, energy, radial_bump, cosine };
  Kind kind = Kind::zero;
  double coefficient = 1.0;
  int axis = 0;
  double radius = 1.0;        // radial_bump: c exp(-|v|^2 / (2 R^2))
  std::vector<double> wave;   // cosine: c cos(k . v)

  double operator()(VelocityView v) const;
  // log E* e^{b(v)}
  double log_reference_mgf(const ReferenceMeasure& ref) const;
};

struct TimeProfile {
  enum class Kind { constant, linear, sine };
  Kind kind = Kind::linear;
  double rate = 1.0;  // linear: rate t, sine: sin(rate t)

  double value(double t) const;
};

struct FluxTest {
  enum class Kind { zero, constant, relative_speed_bump, energy_exchange, sigma_alignment };
  Kind kind = Kind::zero;
  double coefficient = 1.0;
  double radius = 1.0;
  double t0 = 0.0, t1 = INFINITY;  // active on [t0, t1)

  double operator()(double t, VelocityView v, VelocityView vs, VelocityView sigma) const;
  bool sigma_dependent() const { return kind == Kind::energy_exchange || kind == Kind::sigma_alignment; }
  bool symmetric() const { return kind != Kind::energy_exchange; }
};

struct TestFunctionDescriptor {
  enum class Kind { spatial, product, flux };
  Kind kind = Kind::spatial;
  SpatialTest space;
  TimeProfile time;
  FluxTest flux;

  static TestFunctionDescriptor spatial_test(SpatialTest s);
  static TestFunctionDescriptor product_test(TimeProfile a, SpatialTest b);
  static TestFunctionDescriptor flux_test(FluxTest g);

  double f(double t, VelocityView v) const;
  double dt_f(double t, VelocityView v) const;
  // f(t,v') + f(t,v*') - f(t,v) - f(t,v*) through post_collision
  double delta_f(double t, VelocityView v, VelocityView vs, VelocityView sigma) const;
  double g(double t, VelocityView v, VelocityView vs, VelocityView sigma) const;
  bool vanishes_at_zero() const;

  static TestFunctionDescriptor from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct XiValues {
  double xi0 = 0.0, xi1 = 0.0, xi2 = 0.0;
  double xi2_flux = 0.0, xi2_intensity = 0.0;
  // plug-in variances of the fluctuating parts (phi over mu_0, g over the flux)
  double xi0_variance = 0.0, xi2_variance = 0.0;
};

double xi0(const ParticleState& initial, const SpatialTest& phi, const ReferenceMeasure& ref, double* variance = nullptr);
double xi1(const Trajectory& traj, const TestFunctionDescriptor& f);
double xi2(const Trajectory& traj, const FluxTest& g, double* flux = nullptr, double* intensity = nullptr,
           double* variance = nullptr);
XiValues xi_functionals(const Trajectory& traj, const TestFunctionDescriptor& phi, const TestFunctionDescriptor& f,
                        const TestFunctionDescriptor& g, const ReferenceMeasure& ref);

}  // namespace kaclab
