#include "doctest.h"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <cmath>
#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "kaclab/engine.hpp"
#include "kaclab/error.hpp"
#include "kaclab/metrics.hpp"
#include "stats.hpp"

using namespace kaclab;

TEST_CASE("a single particle never changes") {
  auto c = test::maxwell_config(1, 50.0, 3);
  c.kernel.kind = KernelKind::hard_spheres;
  auto tr = simulate(c);
  CHECK(tr.log.size() > 10);
  CHECK(tr.final_state == tr.initial_state);
  for (std::size_t k = 0; k < tr.log.size(); ++k) {
    CHECK(tr.log.i(k) == 0);
    CHECK(tr.log.j(k) == 0);
  }
  RandomStream r(1, 1);
  auto [s, e] = step(tr.initial_state, Kernel{}, nullptr, r);
  CHECK(s == tr.initial_state);
  CHECK_FALSE(e.fictitious);
  CHECK(e.time > 0.0);
}

TEST_CASE("zero horizon gives an empty log") {
  for (auto kind : {KernelKind::maxwell, KernelKind::hard_spheres}) {
    auto c = test::maxwell_config(100, 0.0);
    c.kernel.kind = kind;
    c.record_full_states = true;
    auto tr = simulate(c);
    CHECK(tr.log.size() == 0);
    REQUIRE(tr.checkpoints.size() == 1);
    CHECK(*tr.checkpoints[0].state == tr.initial_state);
  }
}

TEST_CASE("config validation") {
  auto c = test::maxwell_config(0, 1.0);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.N = 5;
  c.checkpoint_times = {0.5, 0.2};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.checkpoint_times = {0.0, 1.5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.checkpoint_times = {};
  CHECK(c.resolved_checkpoints() == std::vector<double>{0.0, 1.0});
}

TEST_CASE("two Maxwell particles: inter-event times are Exp(2)") {
  auto c = test::maxwell_config(2, 5300.0, 17);
  auto tr = simulate(c);
  std::vector<double> gaps;
  double last = 0.0;
  for (std::size_t k = 0; k < tr.log.size() && gaps.size() < 10000; ++k) {
    if (tr.log.fictitious(k)) continue;
    gaps.push_back(tr.log.time(k) - last);
    last = tr.log.time(k);
  }
  REQUIRE(gaps.size() == 10000);
  auto m = test::mean_se(gaps);
  CHECK(std::abs(m.mean - 0.5) < 3 * m.se);
}

TEST_CASE("thinning: event counts of two Maxwell particles are Poisson(2T)") {
  const double T = 1.0;
  const int runs = 10000, bins = 8;
  std::vector<double> obs(bins, 0.0);
  for (int k = 0; k < runs; ++k) {
    auto c = test::maxwell_config(2, T, 99);
    c.stream = k;
    auto tr = simulate(c);
    std::size_t n = tr.log.real_count();
    obs[std::min<std::size_t>(n, bins - 1)] += 1;
  }
  boost::math::poisson_distribution<> pois(2 * T);
  double chi = 0.0, tail = 1.0;
  for (int b = 0; b < bins; ++b) {
    double p = b < bins - 1 ? boost::math::pdf(pois, b) : tail;
    tail -= p;
    double e = p * runs;
    chi += (obs[b] - e) * (obs[b] - e) / e;
  }
  double crit = boost::math::quantile(boost::math::chi_squared(bins - 1), 0.99);
  CHECK(chi < crit);
}

TEST_CASE("conservation along a Maxwell path") {
  auto c = test::maxwell_config(1000, 1.0, 5);
  auto tr = simulate(c);
  double e0 = tr.initial_state.energy_sum(), e1 = tr.final_state.energy_sum();
  CHECK(std::abs(e1 - e0) <= 1e-9 * e0);
  auto p0 = tr.initial_state.momentum_sum(), p1 = tr.final_state.momentum_sum();
  for (int k = 0; k < 3; ++k) CHECK(std::abs(p1[k] - p0[k]) <= 1e-9 * std::sqrt(e0));

  ParticleState s = tr.initial_state;
  for (std::size_t k = 0; k < tr.log.size(); ++k) {
    std::size_t i = tr.log.i(k), j = tr.log.j(k);
    double before = norm2(s.velocity(i)) + (i == j ? 0.0 : norm2(s.velocity(j)));
    replay_events(s, tr.log, k, tr.log.time(k));
    double after = norm2(s.velocity(i)) + (i == j ? 0.0 : norm2(s.velocity(j)));
    REQUIRE(std::abs(after - before) <= 1e-12 * before);
  }
  CHECK(s == tr.final_state);
}

TEST_CASE("hard-sphere majorant holds and paths conserve energy") {
  auto c = test::maxwell_config(500, 2.0, 8);
  c.kernel.kind = KernelKind::hard_spheres;
  auto tr = simulate(c);
  CHECK(tr.log.size() > tr.log.real_count());
  double e0 = tr.initial_state.energy_sum();
  CHECK(std::abs(tr.final_state.energy_sum() - e0) <= 1e-9 * e0);
}

TEST_CASE("determinism") {
  auto c = test::maxwell_config(200, 1.0, 42);
  c.kernel.kind = KernelKind::hard_spheres;
  auto a = simulate(c), b = simulate(c);
  CHECK(a.log == b.log);
  CHECK(a.final_state == b.final_state);
  c.seed = 43;
  auto d = simulate(c);
  CHECK_FALSE(a.log == d.log);
}

TEST_CASE("checkpoints are reproduced by replay") {
  auto c = test::maxwell_config(300, 1.0, 2);
  c.kernel.kind = KernelKind::hard_spheres;
  c.checkpoint_times = {0.0, 0.25, 0.5, 0.75, 1.0};
  c.record_full_states = true;
  auto tr = simulate(c);
  for (auto& cp : tr.checkpoints) CHECK(replay_to(tr.initial_state, tr.log, cp.time) == *cp.state);
}

TEST_CASE("exchangeability under relabelling") {
  auto c = test::maxwell_config(50, 1.0, 4);
  c.kernel.kind = KernelKind::hard_spheres;
  c.checkpoint_times = {0.0, 0.5, 1.0};
  c.record_full_states = true;
  auto tr = simulate(c);
  const std::size_t N = c.N;
  std::vector<std::size_t> perm(N);
  std::iota(perm.begin(), perm.end(), 0);
  RandomStream r(0, 0);
  for (std::size_t k = N - 1; k > 0; --k) std::swap(perm[k], perm[r.index(k + 1)]);

  ParticleState init(N, 3);
  for (std::size_t k = 0; k < N; ++k)
    for (int c2 = 0; c2 < 3; ++c2) init.velocity(perm[k])[c2] = tr.initial_state.velocity(k)[c2];
  EventLog relabelled(3, N, c.T);
  for (std::size_t k = 0; k < tr.log.size(); ++k)
    relabelled.push(tr.log.time(k), perm[tr.log.i(k)], perm[tr.log.j(k)], tr.log.sigma(k), tr.log.assignment(k),
                    tr.log.pre_v(k), tr.log.pre_v_star(k), tr.log.fictitious(k));
  for (auto& cp : tr.checkpoints) {
    auto a = empirical_measure(*cp.state).merged();
    auto b = empirical_measure(replay_to(init, relabelled, cp.time)).merged();
    CHECK(a.points() == b.points());
    CHECK(a.weights() == b.weights());
  }
}

TEST_CASE("continuity equation in exact discrete form") {
  auto c = test::maxwell_config(400, 1.5, 6);
  c.kernel.kind = KernelKind::hard_spheres;
  auto tr = simulate(c);
  auto f = [](VelocityView v) { return std::cos(0.7 * v[0] - 1.3 * v[1] + 0.4 * v[2]) / (1.0 + norm2(v)); };
  double lhs = (test::sum_f(tr.final_state, f) - test::sum_f(tr.initial_state, f)) / c.N;
  double rhs = 0.0;
  std::vector<double> s(3);
  for (std::size_t k = 0; k < tr.log.size(); ++k) {
    if (tr.log.fictitious(k)) continue;
    tr.log.recorded_sigma(k, s);
    rhs += collision_delta(f, tr.log.pre_v(k), tr.log.pre_v_star(k), s);
  }
  rhs /= c.N;
  CHECK(std::abs(lhs - rhs) <= 1e-9 * (1.0 + tr.log.size()));
}

TEST_CASE("flux measure carries mass 1/N per real event") {
  auto c = test::maxwell_config(30, 1.0, 6);
  c.kernel.kind = KernelKind::hard_spheres;
  auto tr = simulate(c);
  auto w = flux_measure(tr.log);
  CHECK(w.dim() == 10);
  CHECK(w.size() == tr.log.real_count());
  CHECK(w.total_mass() == doctest::Approx(double(tr.log.real_count()) / 30).epsilon(1e-12));
}

TEST_CASE("event times strictly increase and fictitious events leave the state alone") {
  auto c = test::maxwell_config(100, 1.0, 12);
  c.kernel.kind = KernelKind::hard_spheres;
  auto tr = simulate(c);
  ParticleState s = tr.initial_state;
  for (std::size_t k = 0; k < tr.log.size(); ++k) {
    if (k > 0) REQUIRE(tr.log.time(k) > tr.log.time(k - 1));
    ParticleState before = s;
    replay_events(s, tr.log, k, tr.log.time(k));
    if (tr.log.fictitious(k) || tr.log.i(k) == tr.log.j(k)) REQUIRE(s == before);
    auto e = tr.log.at(k);
    CHECK(e.pre_v.size() == 3);
  }
}

namespace {
struct UnderstatedTilt final : DynamicTilt {
  double value(double, std::size_t, std::size_t, VelocityView, VelocityView, VelocityView) const override { return 3.0; }
  RateBound rate_bound(double, const Kernel&) const override { return {1.0, 0.0}; }
  double multiplier_bound(double) const override { return 1.0; }
  std::string kind() const override { return "understated"; }
};
}  // namespace

TEST_CASE("a violated majorant aborts the run") {
  auto c = test::maxwell_config(10, 1.0, 1);
  c.tilting = test::dynamic_plan(std::make_shared<UnderstatedTilt>());
  CHECK_THROWS_AS(simulate(c), SimulationError);
}

TEST_CASE("total rate under a constant tilt") {
  ParticleState s({0, 0, 0, 1, 1, 1, -2, 0, 1}, 3);
  TiltingScheme sch(nullptr, std::make_shared<ConstantTilt>(2.0));
  CHECK(total_rate(s, Kernel{}, &sch) == doctest::Approx(6.0).epsilon(1e-14));
}
