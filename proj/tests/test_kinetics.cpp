#include "doctest.h"

#include <cmath>
#include <vector>

#include "kaclab/engine.hpp"
#include "kaclab/error.hpp"
#include "kaclab/fenwick.hpp"
#include "kaclab/metrics.hpp"
#include "kaclab/sphere_rule.hpp"

using namespace kaclab;

TEST_CASE("total_rate examples") {
  Kernel maxwell, rhs{KernelKind::hard_spheres};
  ParticleState two({0.3, -1.0, 2.0, 0.1, 0.5, -0.7}, 3);
  CHECK(total_rate(two, maxwell) == doctest::Approx(2.0).epsilon(1e-15));
  ParticleState one({0.4, 0.2, -0.1}, 3);
  CHECK(total_rate(one, maxwell) == 1.0);
  ParticleState opp({1, 0, 0, -1, 0, 0}, 3);
  CHECK(total_rate(opp, rhs) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("collision map conserves momentum and energy") {
  RandomStream r(1, 0);
  for (int k = 0; k < 1000; ++k) {
    Velocity v(3), vs(3);
    for (auto& x : v) x = 3 * r.normal();
    for (auto& x : vs) x = 3 * r.normal();
    Velocity s = sample_sigma(r, 3);
    auto [a, b] = post_collision(v, vs, s);
    double e0 = norm2(v) + norm2(vs), e1 = norm2(a) + norm2(b);
    CHECK(std::abs(e1 - e0) <= 1e-12 * e0);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(a[c] + b[c] - v[c] - vs[c]) <= 1e-12 * (1 + std::abs(v[c] + vs[c])));
  }
  Velocity v{1, 0, 0}, vs{-1, 0, 0}, e1{1, 0, 0};
  auto [a, b] = post_collision(v, vs, e1);
  CHECK(a == vs);
  CHECK(b == v);
  Velocity bad{1, 1, 0};
  CHECK_THROWS(post_collision(v, vs, bad));
}

TEST_CASE("kernel names and dimension checks") {
  CHECK(Kernel::from_name("maxwell").kind == KernelKind::maxwell);
  CHECK(Kernel::from_name("hard_spheres").kind == KernelKind::hard_spheres);
  CHECK_THROWS_AS(Kernel::from_name("soft"), ConfigError);
  Velocity a{1, 0, 0}, b{1, 0};
  CHECK_THROWS(eval_kernel(Kernel{}, a, b));
  Velocity c{0, 0, 0};
  CHECK(eval_kernel(Kernel{KernelKind::hard_spheres}, a, c) == 2.0);
}

TEST_CASE("fenwick sampling matches a linear scan") {
  RandomStream r(3, 0);
  std::vector<double> w(37);
  for (auto& x : w) x = r.uniform() < 0.2 ? 0.0 : r.uniform();
  FenwickTree f(w);
  for (int it = 0; it < 2000; ++it) {
    if (it % 3 == 0) {
      std::size_t i = r.index(w.size());
      w[i] = r.uniform() < 0.3 ? 0.0 : 2 * r.uniform();
      f.set(i, w[i]);
    }
    double total = 0.0;
    for (double x : w) total += x;
    CHECK(f.total() == doctest::Approx(total).epsilon(1e-12));
    double t = r.uniform() * total;
    std::size_t k = f.find(t);
    double acc = 0.0;
    std::size_t lin = 0;
    for (; lin < w.size(); ++lin) {
      if (w[lin] > 0 && t < acc + w[lin]) break;
      acc += w[lin];
    }
    if (lin < w.size()) {
      CHECK(w[k] > 0.0);
      CHECK(k == lin);
    }
  }
}

TEST_CASE("sphere rules integrate low-degree polynomials") {
  for (int order : {14, 26}) {
    SphereRule r = compensator_rule(3, order);
    double s = 0.0;
    for (double w : r.weights) s += w;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    auto avg = [&](auto f) { return r.average([&](std::span<const double> x) { return f(x); }); };
    CHECK(avg([](auto x) { return x[0] * x[0]; }) == doctest::Approx(1.0 / 3).epsilon(1e-13));
    CHECK(avg([](auto x) { return x[0] * x[0] * x[0] * x[0]; }) == doctest::Approx(1.0 / 5).epsilon(1e-13));
    CHECK(avg([](auto x) { return x[0] * x[0] * x[1] * x[1]; }) == doctest::Approx(1.0 / 15).epsilon(1e-13));
    if (order == 26) {
      CHECK(avg([](auto x) { return std::pow(x[2], 6); }) == doctest::Approx(1.0 / 7).epsilon(1e-13));
    }
  }
  SphereRule p = product_rule(3, 8, 16);
  CHECK(p.average([](std::span<const double> x) { return std::pow(x[1], 6); }) == doctest::Approx(1.0 / 7).epsilon(1e-13));
  SphereRule c = compensator_rule(2, 16);
  CHECK(c.average([](std::span<const double> x) { return x[0] * x[0]; }) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("empirical measure") {
  ParticleState one({0, 0, 0}, 3);
  auto m = empirical_measure(one);
  CHECK(m.size() == 1);
  CHECK(m.total_mass() == 1.0);
  ParticleState twin({0.5, 1, -1, 0.5, 1, -1}, 3);
  auto t = empirical_measure(twin);
  WeightedMeasure single(3);
  single.add(std::vector<double>{0.5, 1, -1}, 1.0);
  CHECK(t.merged().size() == 1);
  CHECK(bl_distance(t, single).value == 0.0);

  ReferenceMeasure ref(3);
  RandomStream r(9, 0);
  ParticleState s(10000, 3);
  for (std::size_t i = 0; i < s.size(); ++i) ref.sample(r, s.velocity(i));
  auto mu = empirical_measure(s);
  CHECK(mu.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
  double m2 = moment(mu, 2.0);
  // Var |v|^2 = (m4 - 1) = 2/3 for d = 3
  double se = std::sqrt((5.0 / 3.0 - 1.0) / 10000.0);
  CHECK(std::abs(m2 - 1.0) < 3 * se);
}

TEST_CASE("particle state sums") {
  ParticleState s({1, 2, 3, -1, 0, 1}, 3);
  CHECK(s.energy_sum() == 16.0);
  CHECK(s.momentum_sum() == Velocity{0, 2, 4});
  ParticleState bad({1, NAN, 0}, 3);
  CHECK_THROWS(bad.validate());
}
