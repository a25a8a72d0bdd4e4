#include "kaclab/moment_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "kaclab/numeric.hpp"
#include "kaclab/sphere_rule.hpp"

namespace kaclab {

namespace {

const SphereRule& average_rule(int d) {
  static std::once_flag once[4];
  static SphereRule rules[4];
  if (d < 1 || d > 3) throw std::invalid_argument("sigma_average: d must be 1, 2 or 3");
  std::call_once(once[d], [d] { rules[d] = d == 1 ? compensator_rule(1) : product_rule(d, 64, 16); });
  return rules[d];
}

}  // namespace

double sigma_average(int d, const std::function<double(VelocityView)>& f) {
  const SphereRule& r = average_rule(d);
  CompensatedSum s;
  for (std::size_t k = 0; k < r.size(); ++k) s.add(r.weights[k] * f(r.node(k)));
  return s.value();
}

double sigma_avg_delta_fn(const std::function<double(VelocityView)>& f, VelocityView v, VelocityView vs) {
  if (v.size() != vs.size()) throw std::invalid_argument("sigma_avg_delta: dimension mismatch");
  const int d = static_cast<int>(v.size());
  return sigma_average(d, [&](VelocityView s) { return collision_delta(f, v, vs, s); });
}

double sigma_avg_delta(int p, VelocityView v, VelocityView vs) {
  if (p != 2 && p != 4 && p != 6) throw std::invalid_argument("sigma_avg_delta: p must be 2, 4 or 6");
  const int h = p / 2;
  return sigma_avg_delta_fn([h](VelocityView x) { return std::pow(norm2(x), h); }, v, vs);
}

const MaxwellCoefficients& maxwell_coefficients(int d) {
  static std::once_flag once[4];
  static MaxwellCoefficients cache[4];
  if (d < 1 || d > 3) throw std::invalid_argument("maxwell_coefficients: d must be 1, 2 or 3");
  std::call_once(once[d], [d] {
    MaxwellCoefficients c;
    if (d >= 2) {
      Velocity e1(d, 0.0), e2(d, 0.0), m1(d, 0.0), z(d, 0.0), diag(d, 0.0);
      e1[0] = 1.0;
      e2[1] = 1.0;
      m1[0] = -1.0;
      diag[0] = diag[1] = 1.0;
      c.c1 = sigma_avg_delta(4, e1, z);
      c.c2 = sigma_avg_delta(4, e1, e2) - 2.0 * c.c1;
      double plus = sigma_avg_delta(4, e1, e1) - 2.0 * c.c1 - c.c2;   // c3 + 2 c4
      double minus = sigma_avg_delta(4, e1, m1) - 2.0 * c.c1 - c.c2;  // c3 - 2 c4
      c.c3 = 0.5 * (plus + minus);
      c.c4 = 0.25 * (plus - minus);
      c.kappa = -2.0 * sigma_avg_delta_fn([](VelocityView x) { return x[0] * x[1]; }, diag, z);
    }
    cache[d] = c;
  });
  return cache[d];
}

namespace {

template <class Rhs>
std::vector<double> rk4(double y0, const std::vector<double>& times, Rhs&& rhs) {
  std::vector<double> out;
  out.reserve(times.size());
  double t = 0.0, y = y0;
  for (double target : times) {
    if (target < t) throw std::invalid_argument("maxwell_m4_curve: times must be sorted and nonnegative");
    double span = target - t;
    int steps = static_cast<int>(std::ceil(span / 1e-3));
    double h = steps > 0 ? span / steps : 0.0;
    for (int k = 0; k < steps; ++k) {
      double s = t + k * h;
      double k1 = rhs(s, y);
      double k2 = rhs(s + 0.5 * h, y + 0.5 * h * k1);
      double k3 = rhs(s + 0.5 * h, y + 0.5 * h * k2);
      double k4 = rhs(s + h, y + h * k3);
      y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    t = target;
    out.push_back(y);
  }
  return out;
}

}  // namespace

std::vector<double> maxwell_m4_curve(double m2, double m4_0, const std::vector<double>& times, int d) {
  if (!(m4_0 >= m2 * m2 * (1.0 - 1e-12))) throw std::invalid_argument("maxwell_m4_curve: m4_0 < m2^2 is infeasible");
  const auto& c = maxwell_coefficients(d);
  double a = c.a(d), b = c.b();
  return rk4(m4_0, times, [&](double, double m4) { return a * m2 * m2 + b * m4; });
}

std::vector<double> maxwell_m4_curve(const MomentSummary& s0, const std::vector<double>& times, int d) {
  const auto& c = maxwell_coefficients(d);
  const double m2 = s0.m2;
  if (!(s0.m4 >= m2 * m2 * (1.0 - 1e-12))) throw std::invalid_argument("maxwell_m4_curve: m4_0 < m2^2 is infeasible");
  const auto& p = s0.momentum;
  const auto& C0 = s0.second_moment;
  double p2 = 0.0;
  for (double x : p) p2 += x * x;
  // C(t) = p p^T + (m2 - |p|^2)/d I + Dev(p p^T) ... written as pp + s I + D_c(t)
  const double s = (m2 - p2) / d;
  std::vector<double> D0(d * d);  // centered deviator at t = 0
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) D0[i * d + j] = C0[i * d + j] - p[i] * p[j] - (i == j ? s : 0.0);
  auto frob2 = [&](double t) {
    double e = std::exp(-c.kappa * t), f = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double x = p[i] * p[j] + (i == j ? s : 0.0) + D0[i * d + j] * e;
        f += x * x;
      }
    return f;
  };
  return rk4(s0.m4, times, [&](double t, double m4) { return 2.0 * c.c1 * m4 + c.c2 * m2 * m2 + c.c3 * frob2(t); });
}

MomentTrack make_track(const std::vector<std::vector<Checkpoint>>& runs, const std::vector<double>& thresholds) {
  MomentTrack tr;
  tr.thresholds = thresholds;
  if (runs.empty()) return tr;
  const std::size_t nc = runs[0].size();
  const double n = static_cast<double>(runs.size());
  auto stats = [&](auto get, double& mean, double& se) {
    CompensatedSum s;
    for (const auto& r : runs) s.add(get(r));
    mean = s.value() / n;
    CompensatedSum q;
    for (const auto& r : runs) q.add((get(r) - mean) * (get(r) - mean));
    se = runs.size() > 1 ? std::sqrt(q.value() / (n - 1.0) / n) : 0.0;
  };
  for (std::size_t c = 0; c < nc; ++c) {
    for (const auto& r : runs)
      if (r.size() != nc || r[c].time != runs[0][c].time)
        throw std::invalid_argument("make_track: runs use different checkpoint grids");
    tr.times.push_back(runs[0][c].time);
    double m, se;
    stats([&](const std::vector<Checkpoint>& r) { return r[c].summary.m2; }, m, se);
    tr.m2.push_back(m);
    tr.m2_se.push_back(se);
    stats([&](const std::vector<Checkpoint>& r) { return r[c].summary.m4; }, m, se);
    tr.m4.push_back(m);
    tr.m4_se.push_back(se);
    std::vector<double> tm, ts;
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      stats([&](const std::vector<Checkpoint>& r) { return r[c].summary.truncated_m2.at(k); }, m, se);
      tm.push_back(m);
      ts.push_back(se);
    }
    tr.truncated.push_back(tm);
    tr.truncated_se.push_back(ts);
  }
  return tr;
}

PovznerReport povzner_check(const MomentTrack& track, double p, const std::vector<double>& s_grid,
                            std::optional<double> reference_C) {
  if (p != 2.0 && p != 4.0) throw std::invalid_argument("povzner_check: the track carries p = 2 and p = 4 only");
  if (track.times.empty()) throw std::invalid_argument("povzner_check: empty track");
  const auto& m = p == 2.0 ? track.m2 : track.m4;
  const double T = track.times.back();
  PovznerReport rep;
  rep.p = p;
  rep.s_grid = s_grid;
  std::vector<double> bound_shape;
  for (double s : s_grid) {
    if (!(s > 0.0)) throw std::invalid_argument("povzner_check: s must be positive");
    double sup = -INFINITY;
    for (std::size_t c = 0; c < track.times.size(); ++c)
      if (track.times[c] >= s) sup = std::max(sup, m[c]);
    if (!std::isfinite(sup)) throw std::invalid_argument("povzner_check: no checkpoint at or after s");
    rep.sup_moment.push_back(sup);
    double shape = (1.0 + T) * std::pow(s, 2.0 - p);
    bound_shape.push_back(shape);
    rep.fitted_C = std::max(rep.fitted_C, sup / shape);
  }
  rep.C_used = reference_C ? *reference_C : rep.fitted_C;
  for (std::size_t k = 0; k < s_grid.size(); ++k)
    if (rep.sup_moment[k] > rep.C_used * bound_shape[k] * (1.0 + 1e-12)) rep.violations.push_back(s_grid[k]);
  if (s_grid.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = static_cast<double>(s_grid.size());
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
      double x = std::log(s_grid[k]), y = std::log(rep.sup_moment[k]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double den = n * sxx - sx * sx;
    rep.fitted_exponent = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  }
  return rep;
}

}  // namespace kaclab
