#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace kaclab {

// Nodes and weights for averaging over the uniform probability measure on S^{d-1}.
struct SphereRule {
  int dim = 3;
  std::vector<double> nodes;    // flat, size() * dim
  std::vector<double> weights;  // sum to 1

  std::size_t size() const { return weights.size(); }
  std::span<const double> node(std::size_t k) const {
    return {nodes.data() + k * dim, static_cast<std::size_t>(dim)};
  }
  double average(const std::function<double(std::span<const double>)>& f) const;
};

// d=1: {-1,+1}; d=2: `order` equally spaced angles; d=3: Lebedev rule with
// 6, 14 or 26 points.
SphereRule compensator_rule(int d, int order = 26);

// Gauss-Legendre in cos(theta) times trapezoid in azimuth (d=3), exact for
// polynomials of degree < min(2*n_polar, n_azimuth). d=2 uses n_azimuth angles.
SphereRule product_rule(int d, int n_polar, int n_azimuth);

// Gauss-Legendre nodes/weights on [-1,1]
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

}  // namespace kaclab
