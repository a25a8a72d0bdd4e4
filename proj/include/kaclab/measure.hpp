#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kaclab {

class ParticleState;

// Finite atomic measure: points are stored flat, `dim` coordinates each.
class WeightedMeasure {
 public:
  WeightedMeasure() = default;
  explicit WeightedMeasure(std::size_t dim) : dim_(dim) {}
  WeightedMeasure(std::size_t dim, std::vector<double> points, std::vector<double> weights);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }
  std::span<const double> point(std::size_t k) const { return {points_.data() + k * dim_, dim_}; }
  double weight(std::size_t k) const { return weights_[k]; }
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  double total_mass() const;

  void add(std::span<const double> x, double w);
  // atoms at bitwise-equal locations combined, sorted lexicographically
  WeightedMeasure merged() const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> points_;
  std::vector<double> weights_;
};

WeightedMeasure empirical_measure(const ParticleState& state);

}  // namespace kaclab
