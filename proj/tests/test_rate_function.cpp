#include "doctest.h"

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "kaclab/counterexample.hpp"
#include "kaclab/error.hpp"
#include "kaclab/rate_function.hpp"
#include "stats.hpp"

using namespace kaclab;
using Desc = TestFunctionDescriptor;

TEST_CASE("tau") {
  CHECK(tau(1.0) == 0.0);
  CHECK(tau(0.0) == 1.0);
  CHECK(tau(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS(tau(-0.1));
  for (double a = 0.0; a <= 5.0; a += 0.25)
    for (double b = 0.0; b <= 5.0; b += 0.25)
      for (double th = 0.0; th <= 1.0; th += 0.1)
        CHECK(tau(th * a + (1 - th) * b) <= th * tau(a) + (1 - th) * tau(b) + 1e-12);
}

TEST_CASE("relative entropy") {
  CHECK(relative_entropy(EnergyTail(3, 0.0, 0.0)) == 0.0);
  EnergyTail t(3, 0.0, 0.75);
  CHECK(relative_entropy(t) == doctest::Approx(1.5 - 1.5 * std::log(2.0)).epsilon(1e-12));
  CHECK(relative_entropy(t) == doctest::Approx(0.460279).epsilon(1e-6));

  RandomStream r(8, 0);
  ParticleState s(10000, 3);
  for (std::size_t i = 0; i < s.size(); ++i) t.sample(r, s.velocity(i));
  auto mu = empirical_measure(s);
  std::function<double(VelocityView)> lr = [&](VelocityView v) { return t.phi(v); };
  auto e = relative_entropy(mu, &lr);
  CHECK(e.absolutely_continuous);
  CHECK(std::abs(e.value - 0.460279) < 3 * e.standard_error);
  auto none = relative_entropy(mu);
  CHECK_FALSE(none.absolutely_continuous);
  CHECK(std::isinf(none.value));
}

TEST_CASE("dynamic cost examples") {
  auto c = test::maxwell_config(3, 0.1, 4);
  c.tilting = test::dynamic_plan(std::make_shared<ConstantTilt>(2.0));
  auto tr = simulate(c);
  auto cost = dynamic_cost(tr, *tr.scheme);
  CHECK(std::abs(cost.path_total - (2 * std::log(2.0) - 1) * 0.3) < 1e-9);
  CHECK(cost.path_total == doctest::Approx(0.116).epsilon(5e-3));
  CHECK(cost.value == doctest::Approx(cost.path_total / 3).epsilon(1e-14));

  c.tilting = test::dynamic_plan(std::make_shared<ConstantTilt>(1.0));
  auto tr1 = simulate(c);
  CHECK(dynamic_cost(tr1, *tr1.scheme).value == 0.0);
}

TEST_CASE("Maxwell relative-speed tilt stays under the quadratic cost bound") {
  const double delta = 0.1, T = 1.0;
  auto c = test::maxwell_config(300, T, 9);
  c.tilting = test::dynamic_plan(std::make_shared<RelativeSpeedTilt>(delta, Kernel{}));
  auto tr = simulate(c);
  double theta = std::max(1.0, tr.initial_state.energy_sum() / c.N);
  auto cost = dynamic_cost(tr, *tr.scheme);
  CHECK(cost.value > 0.0);
  CHECK(cost.value <= 4 * delta * delta * theta * T + 1e-9);
}

TEST_CASE("subsampled dynamic cost agrees with the exact pair sum") {
  auto c = test::maxwell_config(200, 1.0, 10);
  c.tilting = test::dynamic_plan(std::make_shared<RelativeSpeedTilt>(0.5, Kernel{}));
  auto tr = simulate(c);
  auto exact = dynamic_cost(tr, *tr.scheme);
  auto est = dynamic_cost_sampled(tr, *tr.scheme, 400, 400, 3);
  CHECK_FALSE(est.exact);
  CHECK(est.standard_error > 0.0);
  CHECK(std::abs(est.value - exact.value) < 3 * est.standard_error);
}

namespace {
Trajectory tilted_path(std::size_t N, double T, std::uint64_t seed) {
  auto c = test::maxwell_config(N, T, seed);
  c.tilting = test::dynamic_plan(std::make_shared<RelativeSpeedTilt>(0.3, Kernel{}), true,
                                 std::make_shared<EnergyTail>(3, 0.0, 0.5));
  return simulate(c);
}
SpatialTest sp(SpatialTest::Kind k, double c, double radius = 1.0, int axis = 0) {
  SpatialTest s;
  s.kind = k;
  s.coefficient = c;
  s.radius = radius;
  s.axis = axis;
  return s;
}
FluxTest fl(FluxTest::Kind k, double c, double radius = 1.0, double t0 = 0.0, double t1 = INFINITY) {
  FluxTest g;
  g.kind = k;
  g.coefficient = c;
  g.radius = radius;
  g.t0 = t0;
  g.t1 = t1;
  return g;
}
}  // namespace

TEST_CASE("xi functionals: trivial cases and continuity residual") {
  auto c = test::maxwell_config(200, 1.0, 12);
  c.kernel.kind = KernelKind::hard_spheres;
  auto tr = simulate(c);
  ReferenceMeasure ref(3);
  CHECK(xi1(tr, Desc::product_test({TimeProfile::Kind::linear, 1.0}, sp(SpatialTest::Kind::zero, 0.0))) == 0.0);
  CHECK(xi2(tr, fl(FluxTest::Kind::zero, 0.0)) == 0.0);
  CHECK(xi0(tr.initial_state, sp(SpatialTest::Kind::zero, 0.0), ref) == 0.0);
  CHECK_THROWS_AS(xi1(tr, Desc::spatial_test(sp(SpatialTest::Kind::constant, 1.0))), std::invalid_argument);

  RandomStream r(5, 0);
  const double tol = 1e-9 * (1.0 + tr.log.size());
  for (int k = 0; k < 10; ++k) {
    SpatialTest b;
    switch (k % 3) {
      case 0: b = sp(SpatialTest::Kind::radial_bump, r.normal(), 0.5 + r.uniform()); break;
      case 1: b = sp(SpatialTest::Kind::cosine, r.normal()); b.wave = {r.normal(), r.normal(), r.normal()}; break;
      default: b = sp(SpatialTest::Kind::coordinate, r.normal(), 1.0, int(r.index(3))); break;
    }
    TimeProfile a{k % 2 ? TimeProfile::Kind::linear : TimeProfile::Kind::sine, 0.5 + 3 * r.uniform()};
    CHECK(std::abs(xi1(tr, Desc::product_test(a, b))) <= tol);
  }
}

TEST_CASE("delta_f agrees with direct evaluation") {
  RandomStream r(6, 0);
  auto d = Desc::product_test({TimeProfile::Kind::sine, 2.0}, sp(SpatialTest::Kind::radial_bump, 0.7, 1.3));
  for (int k = 0; k < 200; ++k) {
    Velocity v(3), vs(3);
    for (auto& x : v) x = r.normal();
    for (auto& x : vs) x = r.normal();
    auto s = sample_sigma(r, 3);
    double t = r.uniform();
    Velocity dv(3);
    double w = dot(Velocity{v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]}, s);
    Velocity a(3), b(3);
    for (int q = 0; q < 3; ++q) {
      a[q] = v[q] - w * s[q];
      b[q] = vs[q] + w * s[q];
    }
    auto bump = [](VelocityView x) { return 0.7 * std::exp(-norm2(x) / (2 * 1.3 * 1.3)); };
    double direct = std::sin(2.0 * t) * (bump(a) + bump(b) - bump(v) - bump(vs));
    CHECK(d.delta_f(t, v, vs, s) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("reference mgf of test functions") {
  ReferenceMeasure ref(3);
  auto bump = sp(SpatialTest::Kind::radial_bump, 0.8, 0.9);
  double q = std::log(ref.radial_integral([](double r) { return std::exp(0.8 * std::exp(-r * r / (2 * 0.81))); }));
  CHECK(bump.log_reference_mgf(ref) == doctest::Approx(q).epsilon(1e-10));
  auto en = sp(SpatialTest::Kind::energy, 0.5);
  CHECK(en.log_reference_mgf(ref) == doctest::Approx(cumulant_psi(ref, 0.0, 0.5)).epsilon(1e-12));
  auto co = sp(SpatialTest::Kind::coordinate, 0.6, 1.0, 1);
  CHECK(co.log_reference_mgf(ref) == doctest::Approx(0.5 * 0.36 / 3.0).epsilon(1e-12));
  // cosine against a 1D Gauss-Hermite-free oracle: along k, k.v ~ N(0, |k|^2 / 3)
  auto cs = sp(SpatialTest::Kind::cosine, 0.9);
  cs.wave = {0.3, -0.4, 1.2};
  double s2 = (0.09 + 0.16 + 1.44) / 3.0, acc = 0.0, h = 1e-3;
  for (double x = -12.0; x <= 12.0; x += h)
    acc += h * std::exp(-x * x / (2 * s2)) / std::sqrt(2 * M_PI * s2) * std::exp(0.9 * std::cos(x));
  CHECK(cs.log_reference_mgf(ref) == doctest::Approx(std::log(acc)).epsilon(1e-9));
}

TEST_CASE("variational lower bound over a family of descriptors") {
  auto tr = tilted_path(400, 1.0, 21);
  ReferenceMeasure ref(3);
  double H = relative_entropy(*tr.scheme->initial_tilt());
  double J = dynamic_cost(tr, *tr.scheme).value;
  using SK = SpatialTest::Kind;
  using FK = FluxTest::Kind;
  std::vector<Desc> phis = {Desc::spatial_test(sp(SK::energy, 0.5)), Desc::spatial_test(sp(SK::energy, 0.3)),
                            Desc::spatial_test(sp(SK::radial_bump, -1.0, 1.0)),
                            Desc::spatial_test(sp(SK::coordinate, 0.2, 1.0, 2)), Desc::spatial_test(sp(SK::zero, 0.0))};
  std::vector<Desc> gs = {Desc::flux_test(fl(FK::relative_speed_bump, 0.4, 1.5)), Desc::flux_test(fl(FK::constant, 0.2)),
                          Desc::flux_test(fl(FK::energy_exchange, 0.3)),
                          Desc::flux_test(fl(FK::sigma_alignment, 0.5, 1.0, 0.2, 0.8))};
  auto f = Desc::product_test({TimeProfile::Kind::linear, 1.0}, sp(SK::radial_bump, 0.5, 1.0));
  int tested = 0;
  // the flux part depends on g only; reuse it across phi
  for (auto& g : gs) {
    const auto base = xi_functionals(tr, phis[0], f, g, ref);
    for (auto& phi : phis) {
      auto x = base;
      x.xi0 = xi0(tr.initial_state, phi.space, ref, &x.xi0_variance);
      double lhs = x.xi0 + x.xi1 + x.xi2;
      CHECK(lhs <= H + J + 3 * std::sqrt(x.xi0_variance + x.xi2_variance));
      ++tested;
    }
  }
  CHECK(tested == 20);
}

TEST_CASE("descriptor JSON round trip and strict keys") {
  auto d = Desc::product_test({TimeProfile::Kind::sine, 2.5}, sp(SpatialTest::Kind::radial_bump, 0.7, 1.3));
  auto e = Desc::from_json(d.to_json());
  CHECK(e.to_json() == d.to_json());
  auto g = Desc::flux_test(fl(FluxTest::Kind::sigma_alignment, 0.5, 1.0, 0.2, 0.8));
  CHECK(Desc::from_json(g.to_json()).to_json() == g.to_json());
  auto j = d.to_json();
  j["bogus"] = 1;
  CHECK_THROWS_AS(Desc::from_json(j), ConfigError);
}
