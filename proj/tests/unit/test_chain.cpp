#include <doctest.h>

#include <cmath>
#include <map>

#include "jumplab/chain.hpp"
#include "jumplab/errors.hpp"

using namespace jumplab;

namespace {

PathEvent first_jump(const JumpSampler& S, const GridPoint& x0, std::uint64_t seed, std::uint64_t i) {
  RandomStream rng(seed, i);
  PathEvent e;
  run_path(S, x0, 1e300, rng, [&](double t, const GridPoint&, const GridPoint& to) {
    e = {t, to};
    return false;
  });
  return e;
}

ConductivityField two_neighbours() {
  return table_field(1, 1.0, 1.0,
                     {{GridPoint(0), GridPoint(1), 1.0},
                      {GridPoint(1), GridPoint(0), 1.0},
                      {GridPoint(0), GridPoint(-1), 1.0},
                      {GridPoint(-1), GridPoint(0), 1.0}});
}

}  // namespace

TEST_CASE("step distribution of two equal neighbours") {
  const auto d = step_distribution(two_neighbours(), GridPoint(0));
  REQUIRE(d.support.size() == 2);
  for (const auto& [y, p] : d.support) CHECK(p == 0.5);
  CHECK(d.total_rate == 2.0);
  CHECK(d.tail_mass_bound == 0.0);
  CHECK_THROWS_AS(step_distribution(two_neighbours(), GridPoint(5)), AbsorbingState);
}

TEST_CASE("step distribution of |h|^-2 on Z") {
  const auto C = isotropic_stable(1, 1.0, 1.0, 1.0);
  const auto d = step_distribution(C, GridPoint(0));
  double sum = 0.0, p1 = 0.0;
  for (const auto& [y, p] : d.support) {
    CHECK(p > 0.0);
    sum += p;
    if (y == GridPoint(1)) p1 = p;
  }
  CHECK(d.tail_mass_bound <= 1e-6);
  CHECK(sum == doctest::Approx(1.0 - d.tail_mass_bound).epsilon(1e-12));
  CHECK(sum + d.tail_mass_bound <= 1.0 + 1e-12);
  CHECK(std::abs(p1 - 3.0 / (M_PI * M_PI)) < 1e-12);
}

TEST_CASE("path structure and reproducibility") {
  const auto C = isotropic_stable(1, 1.0, 2.0);
  const JumpSampler S(C);
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto p = sample_path(S, GridPoint(3), 5.0, 99, i);
    const auto q = sample_path(S, GridPoint(3), 5.0, 99, i);
    CHECK(p.start == GridPoint(3));
    CHECK(p.state_at(0.0) == GridPoint(3));
    REQUIRE(p.events.size() == q.events.size());
    GridPoint prev = p.start;
    double t = 0.0;
    for (std::size_t k = 0; k < p.events.size(); ++k) {
      CHECK(p.events[k].time > t);
      CHECK(p.events[k].time <= 5.0);
      CHECK(p.events[k].state != prev);
      CHECK(p.events[k].time == q.events[k].time);
      CHECK(p.events[k].state == q.events[k].state);
      // State is constant between events.
      CHECK(p.state_at(0.5 * (t + p.events[k].time)) == prev);
      prev = p.events[k].state;
      t = p.events[k].time;
    }
    CHECK(p.final_state() == prev);
  }
}

TEST_CASE("holding times are exponential with rate C_x rho^-d") {
  // Finite table: first two holding times of independent paths.
  const double c = 1.5;
  const auto T = table_field(1, 1.0, 1.0, {{GridPoint(0), GridPoint(1), c}, {GridPoint(1), GridPoint(0), c}});
  const JumpSampler S(T);
  std::vector<double> holds;
  for (std::uint64_t i = 0; i < 50000; ++i) {
    RandomStream rng(4, i);
    double last = 0.0;
    int jumps = 0;
    run_path(S, GridPoint(0), 1e300, rng, [&](double t, const GridPoint&, const GridPoint&) {
      holds.push_back(t - last);
      last = t;
      return ++jumps < 2;
    });
  }
  const auto m = mean_and_se(holds);
  CHECK(std::abs(m.mean - 1.0 / c) < 3.0 * m.se);

  // Infinite range with null events: the first jump time still has rate C_x rho^-d.
  const auto C = isotropic_stable(1, 1.0, 2.0);
  const JumpSampler Si(C);
  const double rate = total_rate(C, GridPoint(0)).value * C.lattice().point_measure();
  std::vector<double> first;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    first.push_back(first_jump(Si, GridPoint(0), 5, i).time);
  }
  const auto mf = mean_and_se(first);
  CHECK(std::abs(mf.mean - 1.0 / rate) < 3.0 * mf.se);
}

TEST_CASE("truncated paths never jump further than lambda") {
  const auto C = isotropic_stable(1, 1.0);
  const double lambda = 3.0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto p = sample_path(C, GridPoint(0), 1.0, lambda, seed);
    REQUIRE(p.truncation_lambda);
    GridPoint prev = p.start;
    for (const auto& e : p.events) {
      CHECK(C.lattice().distance(prev, e.state) <= lambda);
      prev = e.state;
    }
  }
}

TEST_CASE("truncated jump law converges in total variation") {
  const auto C = isotropic_stable(1, 1.0, 1.0, 1.0);
  const double full = M_PI * M_PI / 3.0;
  double prev = 1.0;
  for (const double lambda : {4.0, 16.0, 64.0}) {
    SamplerOptions o;
    o.lambda = lambda;
    const JumpSampler S(C, o);
    // TV between the truncated and the full jump law is the removed mass.
    const double tv = 1.0 - S.event_rate(GridPoint(0)) / full;
    double tail = 0.0;
    for (std::int64_t h = 1; h <= static_cast<std::int64_t>(lambda); ++h) tail += 2.0 / double(h * h);
    CHECK(tv == doctest::Approx(1.0 - tail / full).epsilon(1e-10));
    CHECK(tv < prev);
    prev = tv;
  }
}

TEST_CASE("first jump law is symmetric") {
  const auto C = isotropic_stable(2, 1.0);
  const JumpSampler S(C);
  std::map<GridPoint, std::size_t> count;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    ++count[first_jump(S, GridPoint{}, 12, i).state];
  }
  for (const GridPoint h : {GridPoint(1, 0), GridPoint(2, 1), GridPoint(1, 1)}) {
    const double a = static_cast<double>(count[h]);
    for (const GridPoint g : {GridPoint(-h[0], h[1]), GridPoint(h[0], -h[1]), GridPoint(h[1], h[0])}) {
      const double b = static_cast<double>(count[g]);
      CHECK(std::abs(a - b) <= 4.0 * std::sqrt(a + b));
    }
  }
}

TEST_CASE("exit and hitting times") {
  const ScaledLattice lat(1, 1.0);
  PathSample p;
  p.start = GridPoint(0);
  p.events = {{0.5, GridPoint(1)}, {1.2, GridPoint(3)}, {1.7, GridPoint(-4)}};
  p.horizon = 2.0;
  BallDomain ball{{0, 0, 0}, 2.0};
  const auto r = exit_and_hit(p, lat, ball, [](const GridPoint& x) { return x == GridPoint(1); });
  CHECK(r.tau == 1.2);
  CHECK_FALSE(r.tau_censored);
  CHECK(r.sigma == 0.5);
  CHECK_FALSE(r.sigma_censored);
  const auto w = exit_and_hit(p, lat, BallDomain{{0, 0, 0}, 100.0}, [](const GridPoint& x) { return x == GridPoint(7); });
  CHECK(w.tau_censored);
  CHECK(w.tau == 2.0);
  CHECK(w.sigma_censored);
  CHECK(w.sigma == 2.0);
}

TEST_CASE("exit probability estimates") {
  const auto C = isotropic_stable(1, 1.0);
  const JumpSampler S(C);
  const auto tiny = estimate_exit_prob(S, GridPoint(0), 8.0, 1e-7, 1.0, 2000, 3);
  CHECK(tiny.p_hat == 0.0);
  double prev = 0.0;
  for (const double g : {0.01, 0.05, 0.1, 0.3, 1.0}) {
    const auto e = estimate_exit_prob(S, GridPoint(0), 8.0, g, 1.0, 2000, 3);
    CHECK(e.p_hat >= prev);
    CHECK(e.ci.lo <= e.p_hat);
    CHECK(e.ci.hi >= e.p_hat);
    prev = e.p_hat;
  }
  const auto a = estimate_exit_prob(S, GridPoint(0), 8.0, 0.1, 1.0, 20000, 21);
  const auto b = estimate_exit_prob(S, GridPoint(0), 8.0, 0.1, 1.0, 20000, 21);
  CHECK(a.p_hat == b.p_hat);
  const auto c = estimate_exit_prob(S, GridPoint(0), 16.0, 0.1, 1.0, 20000, 22);
  CHECK(std::abs(a.p_hat - c.p_hat) < 0.05);
  const auto split = estimate_exit_prob(S, GridPoint(0), 8.0, 1.0, 1.0, 2000, 3, BigJumpSplit{2.0, 6.0});
  REQUIRE(split.big_jump_fraction);
  CHECK(*split.big_jump_fraction >= 0.0);
  CHECK(*split.big_jump_fraction <= 1.0);
}

TEST_CASE("Levy system with f = 0 is exactly zero") {
  const JumpSampler S(isotropic_stable(1, 1.0));
  const auto r = levy_system_check(S, levy_zero(), GridPoint(0), 1.0, 1000, 1);
  CHECK(r.lhs == 0.0);
  CHECK(r.rhs == 0.0);
}

TEST_CASE("Levy system at short horizon matches the first-jump expansion") {
  const auto C = isotropic_stable(1, 1.0);
  const JumpSampler S(C);
  const double T = 1e-3;
  const GridPoint y0(2);
  const double rate = C.jump_rate(GridPoint(0), y0);
  const double cx = total_rate(C, GridPoint(0)).value * C.lattice().point_measure();
  const auto r = levy_system_check(S, levy_hit_point(C, y0), GridPoint(0), T, 100000, 8);
  CHECK(std::abs(r.rhs - T * rate) <= 2.0 * T * T * cx * rate + 1e-15);
  CHECK(std::abs(r.lhs - T * rate) <= 4.0 * r.lhs_se + T * T * cx * rate);
}

TEST_CASE("Levy system identity for the canned functions on two fields") {
  const std::vector<ConductivityField> fields = {isotropic_stable(1, 1.0), isotropic_stable(2, 1.2, 2.0)};
  for (const auto& C : fields) {
    const JumpSampler S(C);
    const auto& lat = C.lattice();
    const std::vector<LevyTestFunction> fs = {levy_big_jumps(lat, 2.0), levy_hit_point(C, GridPoint(1)),
                                              levy_discounted_jumps(lat, 1.0, 4, 3.0),
                                              levy_local_displacement(lat, 1.5, 4), levy_oscillating_forward(lat, 4)};
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const auto r = levy_system_check(S, fs[i], GridPoint{}, 1.0, 100000, 30 + i);
      INFO(fs[i].name << " d=" << C.dim() << " lhs=" << r.lhs << " rhs=" << r.rhs << " se=" << r.combined_se);
      CHECK(std::abs(r.lhs - r.rhs) <= 3.0 * r.combined_se + r.rate_tail_bound);
    }
  }
}

TEST_CASE("working gamma tilde") {
  const JumpSampler S(isotropic_stable(1, 1.0));
  const auto g = estimate_gamma_tilde(S, GridPoint(0), {0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2}, 4000, 2);
  REQUIRE(g.gamma);
  double prev = 0.0;
  for (std::size_t i = 0; i < g.grid.size(); ++i) {
    CHECK(g.p_hat[i] >= prev);
    prev = g.p_hat[i];
    if (g.grid[i] <= *g.gamma) CHECK(g.p_hat[i] <= 0.5);
    if (g.grid[i] > *g.gamma) CHECK(g.p_hat[i] > 0.5);
  }
}
