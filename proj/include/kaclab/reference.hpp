#pragma once

#include <functional>
#include <span>
#include <vector>

#include "kaclab/kinetics.hpp"
#include "kaclab/random.hpp"

namespace kaclab {

// Isotropic Gaussian with per-coordinate variance 1/d, so <|v|^2> = 1 and
// u = |v|^2 ~ Gamma(d/2, rate d/2).
class ReferenceMeasure {
 public:
  explicit ReferenceMeasure(int d = 3);

  int dim() const { return d_; }
  double shape() const { return 0.5 * d_; }
  double coordinate_variance() const { return 1.0 / d_; }
  double z1() const { return 0.25 * d_; }
  double z2() const { return 0.5 * d_; }
  double z3() const { return 0.5 * d_; }

  double log_density(VelocityView v) const;
  double density(VelocityView v) const;
  // E_z = int e^{z|v|^2} dmu, +inf for z >= z2
  double gaussian_moment(double z) const;
  void sample(RandomStream& rng, std::span<double> out) const;

  // int f(|v|) dmu by adaptive quadrature over the radial law (independent of
  // the incomplete-gamma closed forms; used for checks)
  double radial_integral(const std::function<double(double)>& f, double r_lo = 0.0,
                         double r_hi = INFINITY) const;
  double radial_density(double r) const;

 private:
  int d_;
  double log_norm_;
};

// The energy-tail tilt e^phi, phi = lambda |v|^2 1[|v| >= M] - psi, over the
// reference measure. Closed forms via regularized incomplete gamma functions.
class EnergyTail {
 public:
  EnergyTail(int d, double M, double lambda);

  int dim() const { return d_; }
  double M() const { return M_; }
  double lambda() const { return lambda_; }
  double psi() const { return psi_; }

  // int u^k 1[u <= R^2] e^{lambda u 1[u >= M^2]} dmu, unnormalized
  double raw_moment(int k, double R = INFINITY) const;
  // moments under the normalized tilted law
  double moment(int k, double R = INFINITY) const { return raw_moment(k, R) / mass_; }
  double energy() const { return moment(1); }
  double tail_probability() const;  // tilted P(|v| >= M)

  double phi(VelocityView v) const;
  double phi_radial(double r) const;
  void sample(RandomStream& rng, std::span<double> out) const;

 private:
  int d_;
  double M_, lambda_, s_, b_;
  double p_in_, q_out_;  // P(s, s M^2), Q(s, b M^2)
  double mass_, psi_;
};

// Initial law for untilted runs; reference Gaussian or an anisotropic
// Gaussian scale mixture v_k = sqrt(level * axis_var_k) Z_k.
struct InitialLaw {
  enum class Kind { reference, scale_mixture };
  Kind kind = Kind::reference;
  std::vector<double> axis_variances;
  std::vector<double> levels;
  std::vector<double> probs;

  void validate(int d) const;
  void sample(const ReferenceMeasure& ref, RandomStream& rng, std::span<double> out) const;
  double m2() const;
  double m4(int d) const;
};

}  // namespace kaclab
