#include "kaclab/sphere_rule.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kaclab {

double SphereRule::average(const std::function<double(std::span<const double>)>& f) const {
  double s = 0.0;
  for (std::size_t k = 0; k < size(); ++k) s += weights[k] * f(node(k));
  return s;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= n; ++k) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

namespace {

void add(SphereRule& r, double w, std::initializer_list<double> p) {
  r.nodes.insert(r.nodes.end(), p);
  r.weights.push_back(w);
}

SphereRule circle_rule(int n) {
  SphereRule r;
  r.dim = 2;
  for (int k = 0; k < n; ++k) {
    double a = 2.0 * std::numbers::pi * k / n;
    add(r, 1.0 / n, {std::cos(a), std::sin(a)});
  }
  return r;
}

SphereRule lebedev(int points) {
  SphereRule r;
  r.dim = 3;
  auto axes = [&](double w) {
    for (int k = 0; k < 3; ++k)
      for (double s : {1.0, -1.0}) {
        double p[3] = {0, 0, 0};
        p[k] = s;
        add(r, w, {p[0], p[1], p[2]});
      }
  };
  auto corners = [&](double w) {
    double c = 1.0 / std::sqrt(3.0);
    for (double a : {c, -c})
      for (double b : {c, -c})
        for (double e : {c, -c}) add(r, w, {a, b, e});
  };
  auto edges = [&](double w) {
    double c = 1.0 / std::sqrt(2.0);
    for (int k = 0; k < 3; ++k)
      for (double a : {c, -c})
        for (double b : {c, -c}) {
          double p[3] = {a, b, 0};
          if (k == 1) p[0] = a, p[1] = 0, p[2] = b;
          if (k == 2) p[0] = 0, p[1] = a, p[2] = b;
          add(r, w, {p[0], p[1], p[2]});
        }
  };
  switch (points) {
    case 6:
      axes(1.0 / 6.0);
      break;
    case 14:
      axes(1.0 / 15.0);
      corners(3.0 / 40.0);
      break;
    case 26:
      axes(1.0 / 21.0);
      edges(4.0 / 105.0);
      corners(27.0 / 840.0);
      break;
    default:
      throw std::invalid_argument("Lebedev rule order must be 6, 14 or 26");
  }
  return r;
}

}  // namespace

SphereRule compensator_rule(int d, int order) {
  if (d == 1) {
    SphereRule r;
    r.dim = 1;
    add(r, 0.5, {1.0});
    add(r, 0.5, {-1.0});
    return r;
  }
  if (d == 2) return circle_rule(order);
  if (d == 3) return lebedev(order);
  throw std::invalid_argument("spherical quadrature implemented for d <= 3");
}

SphereRule product_rule(int d, int n_polar, int n_azimuth) {
  if (d == 1) return compensator_rule(1);
  if (d == 2) return circle_rule(n_azimuth);
  if (d != 3) throw std::invalid_argument("spherical quadrature implemented for d <= 3");
  std::vector<double> x, w;
  gauss_legendre(n_polar, x, w);
  SphereRule r;
  r.dim = 3;
  for (int i = 0; i < n_polar; ++i) {
    double st = std::sqrt(std::max(0.0, 1.0 - x[i] * x[i]));
    for (int k = 0; k < n_azimuth; ++k) {
      double a = 2.0 * std::numbers::pi * (k + 0.5) / n_azimuth;
      add(r, 0.5 * w[i] / n_azimuth, {st * std::cos(a), st * std::sin(a), x[i]});
    }
  }
  return r;
}

}  // namespace kaclab
