#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "jumplab/errors.hpp"
#include "jumplab/lattice.hpp"

using namespace jumplab;

namespace {

double pos1(const GridPoint& p, double n) { return static_cast<double>(p[0]) / n; }

}  // namespace

TEST_CASE("scaled lattice spacing and point measure") {
  const ScaledLattice lat(2, 4.0);
  CHECK(lat.spacing() == 0.25);
  CHECK(lat.point_measure() == 1.0 / 16.0);
  const GridPoint p(3, -2);
  const Vec x = lat.position(p);
  CHECK(x[0] == 0.75);
  CHECK(x[1] == -0.5);
  const double xs[2] = {0.75, -0.5};
  CHECK(lat.at(xs) == p);
  const double off[2] = {0.3, 0.0};
  CHECK_THROWS_AS(lat.at(off), InvalidArgument);
}

TEST_CASE("round_to_grid takes the floor per coordinate") {
  const double a[1] = {0.7};
  CHECK(pos1(round_to_grid(a, 2.0), 2.0) == 0.5);
  const double b[1] = {0.25};
  CHECK(pos1(round_to_grid(b, 4.0), 4.0) == 0.25);
  const double c[1] = {-0.3};
  CHECK(pos1(round_to_grid(c, 2.0), 2.0) == -0.5);
}

TEST_CASE("round_to_grid lands within one spacing below x") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (const double n : {1.0, 2.0, 3.0, 8.0}) {
    for (int i = 0; i < 2000; ++i) {
      const double x[2] = {u(gen), u(gen)};
      const GridPoint g = round_to_grid(x, n);
      for (int j = 0; j < 2; ++j) {
        const double gx = static_cast<double>(g[j]) / n;
        CHECK(gx <= x[j]);
        CHECK(x[j] - gx < 1.0 / n);
      }
    }
  }
}

TEST_CASE("ball_points counts") {
  const ScaledLattice z2(2, 1.0);
  CHECK(ball_points(GridPoint{}, 1.5, z2).size() == 9);
  // Oracle: count integer points with x^2 + y^2 <= 6.25 directly.
  std::size_t expect = 0;
  for (int x = -3; x <= 3; ++x)
    for (int y = -3; y <= 3; ++y) expect += (x * x + y * y) * 4 <= 25 ? 1 : 0;
  CHECK(expect == 21);
  CHECK(ball_points(GridPoint{}, 2.5, z2).size() == expect);
  CHECK(ball_points(GridPoint(4, 1), 0.0, z2) == std::vector<GridPoint>{GridPoint(4, 1)});
  const ScaledLattice fine(2, 4.0);
  CHECK(ball_points(GridPoint(1, 1), 0.2, fine) == std::vector<GridPoint>{GridPoint(1, 1)});
  CHECK(ball_count(2.5, z2) == 21);
}

TEST_CASE("ball_points is lexicographic, monotone in r and symmetric") {
  const ScaledLattice lat(2, 2.0);
  const GridPoint c(3, -1);
  auto prev = ball_points(c, 0.0, lat);
  for (double r = 0.25; r <= 3.0; r += 0.25) {
    const auto cur = ball_points(c, r, lat);
    CHECK(std::is_sorted(cur.begin(), cur.end()));
    CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
    std::set<GridPoint> offsets;
    for (const auto& p : cur) offsets.insert(p - c);
    for (const auto& h : offsets) {
      CHECK(offsets.count(GridPoint(-h[0], h[1])) == 1);
      CHECK(offsets.count(GridPoint(h[0], -h[1])) == 1);
      CHECK(offsets.count(GridPoint(h[1], h[0])) == 1);
    }
    prev = cur;
  }
}

TEST_CASE("ball enumeration respects the point cap") {
  const ScaledLattice lat(2, 1.0);
  CHECK_THROWS_AS(ball_points(GridPoint{}, 100.0, lat, 1000), ResourceLimit);
}

TEST_CASE("cube_partition_index uses half-open cubes") {
  const double a[2] = {0.3, 0.9};
  CHECK(cube_partition_index(a, 1.0).anchor == GridPoint(0, 0));
  const double b[1] = {0.5};
  CHECK(cube_partition_index(b, 2.0).anchor == GridPoint(1));
  const double c[1] = {0.4999};
  CHECK(cube_partition_index(c, 2.0).anchor == GridPoint(0));
}

TEST_CASE("cubes partition the plane") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-7.0, 7.0);
  const double n = 3.0;
  for (int i = 0; i < 10000; ++i) {
    const double x[2] = {u(gen), u(gen)};
    const Cube q = cube_partition_index(x, n);
    CHECK(q.contains(x));
    // The query lies in no neighbouring cube.
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy) {
        if (dx == 0 && dy == 0) continue;
        Cube other = q;
        other.anchor = q.anchor + GridPoint(dx, dy);
        CHECK_FALSE(other.contains(x));
      }
  }
}

TEST_CASE("window enumeration") {
  const Window w = Window::centered(2, 2);
  CHECK(w.size() == 25);
  const auto pts = w.points();
  CHECK(pts.size() == 25);
  CHECK(std::is_sorted(pts.begin(), pts.end()));
  CHECK(w.contains(GridPoint(-2, 2)));
  CHECK_FALSE(w.contains(GridPoint(3, 0)));
  std::size_t visited = 0;
  for_each_offset(2, 2, [&](const Index&) { ++visited; });
  CHECK(visited == 25);
}

TEST_CASE("grid point equality and hashing are exact") {
  const GridPoint a(1, 2), b(1, 2), c(2, 1);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(GridPointHash{}(a) == GridPointHash{}(b));
  CHECK(norm2(GridPoint(3, 4).k, 2) == 25);
  CHECK(sup_norm(GridPoint(3, -4).k, 2) == 4);
}
