#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace kaclab::test {

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& x) {
  double n = static_cast<double>(x.size()), s = 0.0;
  for (double v : x) s += v;
  double m = s / n, q = 0.0;
  for (double v : x) q += (v - m) * (v - m);
  return {m, std::sqrt(q / (n - 1.0) / n)};
}

// two-sample Kolmogorov-Smirnov statistic for weighted samples
inline double weighted_ks(std::vector<std::pair<double, double>> a, std::vector<std::pair<double, double>> b) {
  auto norm = [](std::vector<std::pair<double, double>>& s) {
    std::sort(s.begin(), s.end());
    double t = 0.0;
    for (auto& p : s) t += p.second;
    for (auto& p : s) p.second /= t;
  };
  norm(a);
  norm(b);
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, d = 0.0;
  while (i < a.size() || j < b.size()) {
    double x = std::min(i < a.size() ? a[i].first : INFINITY, j < b.size() ? b[j].first : INFINITY);
    while (i < a.size() && a[i].first == x) fa += a[i++].second;
    while (j < b.size() && b[j].first == x) fb += b[j++].second;
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

inline double effective_size(const std::vector<std::pair<double, double>>& s) {
  double w = 0.0, w2 = 0.0;
  for (auto& p : s) {
    w += p.second;
    w2 += p.second * p.second;
  }
  return w * w / w2;
}

// 1% critical value of the two-sample KS statistic
inline double ks_critical_1pct(double n, double m) { return 1.628 * std::sqrt((n + m) / (n * m)); }

}  // namespace kaclab::test
