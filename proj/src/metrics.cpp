#include "kaclab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kaclab/random.hpp"
#include "kaclab/transport.hpp"

namespace kaclab {

namespace {

struct SignedSupport {
  std::size_t dim;
  std::vector<double> pos_pts, neg_pts;
  std::vector<double> pos_w, neg_w;
};

// difference mu - nu on the merged combined support
SignedSupport signed_support(const WeightedMeasure& mu, const WeightedMeasure& nu) {
  WeightedMeasure a = mu.merged(), b = nu.merged();
  SignedSupport s{mu.empty() ? nu.dim() : mu.dim(), {}, {}, {}, {}};
  std::size_t ia = 0, ib = 0;
  auto less = [](std::span<const double> p, std::span<const double> q) {
    return std::lexicographical_compare(p.begin(), p.end(), q.begin(), q.end());
  };
  while (ia < a.size() || ib < b.size()) {
    double delta;
    std::span<const double> x;
    if (ib == b.size() || (ia < a.size() && less(a.point(ia), b.point(ib)))) {
      x = a.point(ia);
      delta = a.weight(ia++);
    } else if (ia == a.size() || less(b.point(ib), a.point(ia))) {
      x = b.point(ib);
      delta = -b.weight(ib++);
    } else {
      x = a.point(ia);
      delta = a.weight(ia++) - b.weight(ib++);
    }
    if (delta > 0.0) {
      s.pos_pts.insert(s.pos_pts.end(), x.begin(), x.end());
      s.pos_w.push_back(delta);
    } else if (delta < 0.0) {
      s.neg_pts.insert(s.neg_pts.end(), x.begin(), x.end());
      s.neg_w.push_back(-delta);
    }
  }
  return s;
}

// transportation with an abstain source and sink at unit cost
DistanceResult solve_signed(const SignedSupport& s) {
  DistanceResult r;
  const std::size_t m = s.pos_w.size(), n = s.neg_w.size(), d = s.dim;
  r.support = m + n;
  if (m == 0 && n == 0) return r;
  double sp = std::accumulate(s.pos_w.begin(), s.pos_w.end(), 0.0);
  double sn = std::accumulate(s.neg_w.begin(), s.neg_w.end(), 0.0);
  std::vector<double> supply(s.pos_w), demand(s.neg_w);
  supply.push_back(sn);
  demand.push_back(sp);
  const std::size_t rows = m + 1, cols = n + 1;
  std::vector<double> cost(rows * cols);
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = s.pos_pts.data() + i * d;
    for (std::size_t j = 0; j < n; ++j) {
      const double* y = s.neg_pts.data() + j * d;
      double q = 0.0;
      for (std::size_t k = 0; k < d; ++k) q += (x[k] - y[k]) * (x[k] - y[k]);
      cost[i * cols + j] = std::min(std::sqrt(q), 2.0);
    }
    cost[i * cols + n] = 1.0;
  }
  for (std::size_t j = 0; j < n; ++j) cost[m * cols + j] = 1.0;
  cost[m * cols + n] = 0.0;
  auto t = solve_transport(supply, demand, cost);
  r.value = t.cost;
  r.duality_gap = std::abs(t.cost - t.dual_value);
  return r;
}

WeightedMeasure resample(const WeightedMeasure& mu, std::size_t k, RandomStream& rng) {
  std::vector<double> cdf(mu.size());
  std::partial_sum(mu.weights().begin(), mu.weights().end(), cdf.begin());
  double mass = cdf.empty() ? 0.0 : cdf.back();
  WeightedMeasure out(mu.dim());
  for (std::size_t s = 0; s < k; ++s) {
    double u = rng.uniform() * mass;
    std::size_t idx = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    idx = std::min(idx, mu.size() - 1);
    out.add(mu.point(idx), mass / static_cast<double>(k));
  }
  return out;
}

DistanceResult distance_impl(const WeightedMeasure& a, const WeightedMeasure& b, const DistanceOptions& opt) {
  if (!a.empty() && !b.empty() && a.dim() != b.dim()) throw std::invalid_argument("distance: dimension mismatch");
  SignedSupport s = signed_support(a, b);
  if (s.pos_w.size() + s.neg_w.size() <= opt.support_cap) return solve_signed(s);

  // i.i.d. subsampling with a recorded seed
  RandomStream rng(opt.seed, 0x5b5b);
  std::size_t ka = std::max<std::size_t>(1, opt.support_cap / 2), kb = ka;
  std::vector<double> vals;
  DistanceResult out;
  for (int rep = 0; rep < std::max(1, opt.replicates); ++rep) {
    WeightedMeasure sa = a.empty() ? a : resample(a, ka, rng);
    WeightedMeasure sb = b.empty() ? b : resample(b, kb, rng);
    auto r = solve_signed(signed_support(sa, sb));
    vals.push_back(r.value);
    out.support = std::max(out.support, r.support);
    out.duality_gap = std::max(out.duality_gap, r.duality_gap);
  }
  double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  out.value = mean;
  out.standard_error = vals.size() > 1 ? std::sqrt(var / (vals.size() - 1) / vals.size()) : 0.0;
  out.subsampled = true;
  out.seed = opt.seed;
  return out;
}

}  // namespace

DistanceResult bl_distance(const WeightedMeasure& mu, const WeightedMeasure& nu, const DistanceOptions& opt) {
  double ma = mu.total_mass(), mb = nu.total_mass();
  if (std::abs(ma - mb) > 1e-12 * std::max({1.0, ma, mb}))
    throw std::invalid_argument("bl_distance: total masses differ");
  return distance_impl(mu, nu, opt);
}

DistanceResult flux_distance(const WeightedMeasure& w1, const WeightedMeasure& w2, const DistanceOptions& opt) {
  return distance_impl(w1, w2, opt);
}

double tv_distance(const WeightedMeasure& mu, const WeightedMeasure& nu) {
  SignedSupport s = signed_support(mu, nu);
  return std::accumulate(s.pos_w.begin(), s.pos_w.end(), 0.0) + std::accumulate(s.neg_w.begin(), s.neg_w.end(), 0.0);
}

double moment(const WeightedMeasure& mu, double p, std::optional<double> threshold) {
  double s = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    double r = 0.0;
    for (double x : mu.point(k)) r += x * x;
    r = std::sqrt(r);
    if (threshold && r > *threshold) continue;
    s += mu.weight(k) * std::pow(r, p);
  }
  return s;
}

namespace {

RateFit wls(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
  if (x.size() < 3) throw std::invalid_argument("estimate_ldp_rate: need at least 3 levels with hits");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sw += w[k];
    sx += w[k] * x[k];
    sy += w[k] * y[k];
  }
  double xb = sx / sw, yb = sy / sw, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += w[k] * (x[k] - xb) * (x[k] - xb);
    sxy += w[k] * (x[k] - xb) * (y[k] - yb);
  }
  if (!(sxx > 0)) throw std::invalid_argument("estimate_ldp_rate: N levels must differ");
  return {sxy / sxx, std::sqrt(1.0 / sxx), x.size()};
}

}  // namespace

RateFit estimate_ldp_rate(std::span<const LevelCount> counts) {
  std::vector<double> x, y, w;
  bool any = false;
  for (const auto& c : counts) {
    if (c.hits > 0) any = true;
    if (!(c.hits > 0) || !(c.trials > 0)) continue;
    double p = c.hits / c.trials;
    // delta-method variance of log p-hat under binomial sampling
    double var = std::max((1.0 - p) / (c.trials * p), 1.0 / (c.trials * c.trials));
    x.push_back(c.N);
    y.push_back(std::log(p));
    w.push_back(1.0 / var);
  }
  if (!any) throw std::invalid_argument("estimate_ldp_rate: all hit counts are zero");
  return wls(x, y, w);
}

RateFit estimate_ldp_rate(std::span<const LevelEstimate> est) {
  std::vector<double> x, y, w;
  for (const auto& e : est) {
    if (!(e.probability > 0)) continue;
    double rel = e.standard_error / e.probability;
    x.push_back(e.N);
    y.push_back(std::log(e.probability));
    w.push_back(1.0 / std::max(rel * rel, 1e-300));
  }
  if (x.empty()) throw std::invalid_argument("estimate_ldp_rate: all probability estimates are zero");
  return wls(x, y, w);
}

}  // namespace kaclab
