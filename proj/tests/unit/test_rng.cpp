#include <doctest.h>

#include <cmath>
#include <set>

#include "jumplab/parallel.hpp"
#include "jumplab/rng.hpp"
#include "jumplab/stats.hpp"

using namespace jumplab;

// Known-answer vectors of the Philox4x32-10 reference implementation.
TEST_CASE("philox4x32-10 known answers") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    seen.insert(x);
    seen.insert(c.next_u64());
    seen.insert(d.next_u64());
  }
  CHECK(seen.size() == 300);
  CHECK(stream_key(1, 2) != stream_key(2, 1));
  CHECK(stream_key(1, 2) == stream_key(1, 2));
}

TEST_CASE("uniform and exponential draws") {
  RandomStream r(3, 0);
  std::vector<double> u(200000), e(200000);
  for (auto& x : u) {
    x = r.uniform_open01();
    REQUIRE(x > 0.0);
    REQUIRE(x <= 1.0);
  }
  for (auto& x : e) x = r.exponential(2.0);
  const auto mu = mean_and_se(u);
  const auto me = mean_and_se(e);
  CHECK(std::abs(mu.mean - 0.5) < 4 * mu.se);
  CHECK(std::abs(me.mean - 0.5) < 4 * me.se);
  // KS against the exact exponential law.
  CHECK(ks_distance(e, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-2.0 * x); }) <
        dkw_halfwidth(e.size(), 0.001));
  for (int i = 0; i < 10000; ++i) CHECK(r.below(7) < 7);
}

TEST_CASE("wilson interval") {
  const auto ci = wilson_interval(0, 100);
  CHECK(ci.lo == 0.0);
  CHECK(ci.hi > 0.0);
  const auto full = wilson_interval(100, 100);
  CHECK(full.hi == 1.0);
  // 50 of 100 at z = 1.96: centre 0.5, half-width z sqrt(0.25/100 + z^2/40000) / (1 + z^2/100).
  const double z = 1.959963984540054;
  const double half = z * std::sqrt(0.0025 + z * z / 40000.0) / (1.0 + z * z / 100.0);
  const auto mid = wilson_interval(50, 100);
  CHECK(mid.lo == doctest::Approx(0.5 - half).epsilon(1e-12));
  CHECK(mid.hi == doctest::Approx(0.5 + half).epsilon(1e-12));
}

TEST_CASE("ks statistics") {
  CHECK(ks_distance({0.5}, [](double x) { return std::clamp(x, 0.0, 1.0); }) == doctest::Approx(0.5));
  CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_two_sample({1, 2}, {3, 4}) == 1.0);
}

TEST_CASE("parallel_for results do not depend on the worker count") {
  std::vector<double> a(1000), b(1000);
  set_thread_count(1);
  parallel_for(a.size(), [&](std::size_t i) { a[i] = RandomStream(9, i).uniform01(); });
  set_thread_count(4);
  parallel_for(b.size(), [&](std::size_t i) { b[i] = RandomStream(9, i).uniform01(); });
  CHECK(a == b);
}
