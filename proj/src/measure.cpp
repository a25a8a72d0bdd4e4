#include "kaclab/measure.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "kaclab/kinetics.hpp"

namespace kaclab {

WeightedMeasure::WeightedMeasure(std::size_t dim, std::vector<double> points, std::vector<double> weights)
    : dim_(dim), points_(std::move(points)), weights_(std::move(weights)) {
  if (dim_ == 0 || points_.size() != dim_ * weights_.size())
    throw std::invalid_argument("WeightedMeasure: points/weights size mismatch");
  for (double w : weights_)
    if (!(w >= 0.0)) throw std::invalid_argument("WeightedMeasure: negative weight");
}

double WeightedMeasure::total_mass() const {
  double s = 0.0, c = 0.0;
  for (double w : weights_) {
    double y = w - c, t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

void WeightedMeasure::add(std::span<const double> x, double w) {
  if (x.size() != dim_) throw std::invalid_argument("WeightedMeasure::add: dimension mismatch");
  if (!(w >= 0.0)) throw std::invalid_argument("WeightedMeasure::add: negative weight");
  points_.insert(points_.end(), x.begin(), x.end());
  weights_.push_back(w);
}

WeightedMeasure WeightedMeasure::merged() const {
  std::vector<std::size_t> idx(size());
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    auto pa = point(a), pb = point(b);
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
  };
  std::stable_sort(idx.begin(), idx.end(), less);
  WeightedMeasure out(dim_);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    auto p = point(idx[k]);
    if (!out.empty()) {
      auto q = out.point(out.size() - 1);
      if (std::equal(p.begin(), p.end(), q.begin())) {
        out.weights_.back() += weight(idx[k]);
        continue;
      }
    }
    out.add(p, weight(idx[k]));
  }
  return out;
}

WeightedMeasure empirical_measure(const ParticleState& state) {
  WeightedMeasure m(state.dim());
  double w = 1.0 / static_cast<double>(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) m.add(state.velocity(i), w);
  return m;
}

}  // namespace kaclab
