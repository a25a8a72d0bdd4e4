#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "kaclab/engine.hpp"
#include "kaclab/kinetics.hpp"

namespace kaclab {

// uniform S^{d-1} average of f(sigma): Gauss-Legendre 64 in cos(theta) x 16 azimuths
double sigma_average(int d, const std::function<double(VelocityView)>& f);
// sigma-average of f(v') + f(v*') - f(v) - f(v*)
double sigma_avg_delta_fn(const std::function<double(VelocityView)>& f, VelocityView v, VelocityView vs);
// f = |v|^p, p in {2, 4, 6}
double sigma_avg_delta(int p, VelocityView v, VelocityView vs);

// Maxwell production of m4 at a pair, averaged over sigma:
// c1 (|v|^4 + |v*|^4) + c2 |v|^2 |v*|^2 + c3 (v.v*)^2 + c4 (|v|^2 + |v*|^2)(v.v*)
// and the deviator relaxation rate kappa of the second-moment tensor.
struct MaxwellCoefficients {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
  double kappa = 0.0;
  // isotropic closure G = a m2^2 + b m4
  double a(int d) const { return c2 + c3 / d; }
  double b() const { return 2.0 * c1; }
};

// extracted once per dimension from sigma_avg_delta on pair configurations
const MaxwellCoefficients& maxwell_coefficients(int d);

// isotropic closure, RK4 with step <= 1e-3
std::vector<double> maxwell_m4_curve(double m2, double m4_0, const std::vector<double>& times, int d = 3);
// anisotropic closure from a checkpoint summary: ||C(t)||_F^2 with the deviator
// of the centered second moment relaxing at rate kappa
std::vector<double> maxwell_m4_curve(const MomentSummary& s0, const std::vector<double>& times, int d);

struct MomentTrack {
  std::vector<double> times;
  std::vector<double> thresholds;
  std::vector<double> m2, m2_se, m4, m4_se;
  std::vector<std::vector<double>> truncated, truncated_se;  // [checkpoint][threshold]
};

// ensemble means and standard errors over runs, all runs on the same checkpoint grid
MomentTrack make_track(const std::vector<std::vector<Checkpoint>>& runs, const std::vector<double>& thresholds = {});

struct PovznerReport {
  double p = 0.0;
  std::vector<double> s_grid;
  std::vector<double> sup_moment;  // sup over checkpoints in [s, T]
  double fitted_C = 0.0;           // smallest C with the bound on the grid
  double C_used = 0.0;             // reference C when supplied, else fitted_C
  double fitted_exponent = 0.0;    // log-log slope of sup_moment in s
  std::vector<double> violations;  // s values where the bound fails at C_used
};

// E sup_{u in [s, T]} <|v|^p> <= C (1 + T) s^{2-p}; p in {2, 4} from the track
PovznerReport povzner_check(const MomentTrack& track, double p, const std::vector<double>& s_grid,
                            std::optional<double> reference_C = std::nullopt);

}  // namespace kaclab
