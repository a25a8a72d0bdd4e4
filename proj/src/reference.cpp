#include "kaclab/reference.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "kaclab/error.hpp"

namespace kaclab {

namespace bm = boost::math;

ReferenceMeasure::ReferenceMeasure(int d) : d_(d) {
  if (d < 1) throw std::invalid_argument("ReferenceMeasure: dimension must be positive");
  log_norm_ = 0.5 * d * std::log(d / (2.0 * std::numbers::pi));
}

double ReferenceMeasure::log_density(VelocityView v) const { return log_norm_ - 0.5 * d_ * norm2(v); }
double ReferenceMeasure::density(VelocityView v) const { return std::exp(log_density(v)); }

double ReferenceMeasure::gaussian_moment(double z) const {
  if (z >= z2()) return INFINITY;
  return std::pow(1.0 - 2.0 * z / d_, -0.5 * d_);
}

void ReferenceMeasure::sample(RandomStream& rng, std::span<double> out) const {
  double sd = std::sqrt(coordinate_variance());
  for (auto& x : out) x = sd * rng.normal();
}

double ReferenceMeasure::radial_density(double r) const {
  // density of |v|: 2 s^s r^{2s-1} e^{-s r^2} / Gamma(s)
  double s = shape();
  if (r <= 0.0) return d_ == 1 ? 2.0 * std::sqrt(s / std::numbers::pi) : 0.0;
  return 2.0 * std::exp(s * std::log(s) + (2.0 * s - 1.0) * std::log(r) - s * r * r - std::lgamma(s));
}

double ReferenceMeasure::radial_integral(const std::function<double(double)>& f, double r_lo, double r_hi) const {
  auto g = [&](double r) {
    double p = radial_density(r);
    return p == 0.0 ? 0.0 : f(r) * p;  // the tail of e^{lambda r^2} times an underflowed density
  };
  using GK = bm::quadrature::gauss_kronrod<double, 61>;
  // split at a few radii so the integrand peak is resolved
  std::vector<double> cuts = {r_lo};
  for (double c : {0.5, 1.0, 1.5, 2.5, 4.0, 6.0, 9.0})
    if (c > r_lo && c < r_hi) cuts.push_back(c);
  cuts.push_back(r_hi);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) total += GK::integrate(g, cuts[k], cuts[k + 1], 15, 1e-14);
  return total;
}

EnergyTail::EnergyTail(int d, double M, double lambda) : d_(d), M_(M), lambda_(lambda) {
  s_ = 0.5 * d;
  if (!(lambda < s_)) throw ConfigError("energy tilt: lambda must be below z2 = d/2");
  if (!(M >= 0.0)) throw ConfigError("energy tilt: M must be nonnegative");
  b_ = s_ - lambda;
  double m2 = M * M;
  p_in_ = M == 0.0 ? 0.0 : (std::isinf(M) ? 1.0 : bm::gamma_p(s_, s_ * m2));
  q_out_ = std::isinf(M) ? 0.0 : (M == 0.0 ? 1.0 : bm::gamma_q(s_, b_ * m2));
  if (lambda == 0.0) {
    mass_ = 1.0;
    psi_ = 0.0;
  } else {
    mass_ = p_in_ + std::pow(s_ / b_, s_) * q_out_;
    psi_ = std::log(mass_);
  }
}

double EnergyTail::raw_moment(int k, double R) const {
  double rise = 1.0;  // Gamma(s+k)/Gamma(s)
  for (int j = 0; j < k; ++j) rise *= s_ + j;
  double a = std::min(M_, R);
  double inside = a <= 0.0 ? 0.0 : (std::isinf(a) ? 1.0 : bm::gamma_p(s_ + k, s_ * a * a));
  double total = rise / std::pow(s_, k) * inside;
  if (R > M_ && !std::isinf(M_)) {
    auto q = [&](double x) { return x == 0.0 ? 1.0 : bm::gamma_q(s_ + k, x); };
    double hi = std::isinf(R) ? 0.0 : q(b_ * R * R);
    double diff = q(b_ * M_ * M_) - hi;
    if (lambda_ == 0.0)
      total += rise / std::pow(s_, k) * diff;
    else
      total += std::pow(s_ / b_, s_) * rise / std::pow(b_, k) * diff;
  }
  return total;
}

double EnergyTail::tail_probability() const {
  if (lambda_ == 0.0) return 1.0 - p_in_;
  return std::pow(s_ / b_, s_) * q_out_ / mass_;
}

double EnergyTail::phi_radial(double r) const { return (r >= M_ ? lambda_ * r * r : 0.0) - psi_; }
double EnergyTail::phi(VelocityView v) const { return phi_radial(norm(v)); }

void EnergyTail::sample(RandomStream& rng, std::span<double> out) const {
  if (M_ == 0.0 || lambda_ == 0.0) {
    double sd = std::sqrt(0.5 / (M_ == 0.0 ? b_ : s_));
    for (auto& x : out) x = sd * rng.normal();
    return;
  }
  double u;
  if (rng.uniform() * mass_ < p_in_) {
    u = bm::gamma_p_inv(s_, rng.uniform_pos() * p_in_) / s_;
  } else {
    u = bm::gamma_q_inv(s_, rng.uniform_pos() * q_out_) / b_;
    u = std::max(u, M_ * M_);
  }
  sample_sigma(rng, out);
  double r = std::sqrt(u);
  for (auto& x : out) x *= r;
}

void InitialLaw::validate(int d) const {
  if (kind == Kind::reference) return;
  if (static_cast<int>(axis_variances.size()) != d)
    throw ConfigError("initial.axis_variances: expected one entry per dimension");
  for (double a : axis_variances)
    if (!(a > 0.0)) throw ConfigError("initial.axis_variances: entries must be positive");
  if (levels.empty() || levels.size() != probs.size())
    throw ConfigError("initial.levels/probs: must be nonempty and of equal length");
  double ps = 0.0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (!(levels[k] > 0.0)) throw ConfigError("initial.levels: entries must be positive");
    if (!(probs[k] >= 0.0)) throw ConfigError("initial.probs: entries must be nonnegative");
    ps += probs[k];
  }
  if (std::abs(ps - 1.0) > 1e-12) throw ConfigError("initial.probs: must sum to 1");
}

void InitialLaw::sample(const ReferenceMeasure& ref, RandomStream& rng, std::span<double> out) const {
  if (kind == Kind::reference) return ref.sample(rng, out);
  double u = rng.uniform(), acc = 0.0;
  std::size_t k = 0;
  for (; k + 1 < levels.size(); ++k) {
    acc += probs[k];
    if (u < acc) break;
  }
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = std::sqrt(levels[k] * axis_variances[c]) * rng.normal();
}

double InitialLaw::m2() const {
  if (kind == Kind::reference) return 1.0;
  double el = 0.0, sa = 0.0;
  for (std::size_t k = 0; k < levels.size(); ++k) el += probs[k] * levels[k];
  for (double a : axis_variances) sa += a;
  return el * sa;
}

double InitialLaw::m4(int d) const {
  if (kind == Kind::reference) return (d + 2.0) / d;
  double el2 = 0.0, sa = 0.0, sa2 = 0.0;
  for (std::size_t k = 0; k < levels.size(); ++k) el2 += probs[k] * levels[k] * levels[k];
  for (double a : axis_variances) {
    sa += a;
    sa2 += a * a;
  }
  return el2 * (sa * sa + 2.0 * sa2);
}

}  // namespace kaclab
