#include <doctest.h>

#include <cmath>

#include "jumplab/heatkernel.hpp"

using namespace jumplab;

namespace {

ConductivityField two_state(double c) {
  return table_field(1, 1.0, 1.0, {{GridPoint(0), GridPoint(1), c}, {GridPoint(1), GridPoint(0), c}});
}

std::vector<GridPoint> line(std::int64_t r) {
  std::vector<GridPoint> w;
  for (std::int64_t i = -r; i <= r; ++i) w.push_back(GridPoint(i));
  return w;
}

double at(const HeatKernelColumn& col, std::size_t t, std::size_t j) { return col.values[t][j]; }

}  // namespace

TEST_CASE("two-point generator") {
  const double c = 0.7;
  const auto G = generator_matrix(two_state(c), {GridPoint(0), GridPoint(1)});
  REQUIRE(G.size() == 2);
  CHECK(G.rates.coeff(0, 1) == c);
  CHECK(G.rates.coeff(1, 0) == c);
  CHECK(G.rates.coeff(0, 0) == -c);
  CHECK(G.out_rate[0] == 0.0);
  CHECK(G.max_rate() == c);
}

TEST_CASE("generator rows account for the full rate and are reversible") {
  const auto C = isotropic_stable(1, 1.0, 2.0);
  GeneratorOptions o;
  o.boundary = Boundary::FullRateKilled;
  const auto G = generator_matrix(C, line(12), o);
  for (std::size_t i = 0; i < G.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    double sum = G.out_rate[i];
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(G.rates, row); it; ++it) {
      sum += it.value();
      CHECK(it.value() == G.rates.coeff(it.col(), row));
    }
    CHECK(std::abs(sum) <= 1e-12);
    const double full = total_rate(C, G.window[i]).value * C.lattice().point_measure();
    CHECK(std::abs(G.rates.coeff(row, row) + full) <= 1e-10 * full + G.out_rate_error);
  }
}

TEST_CASE("heat kernel at t = 0 is the point density") {
  const auto C = isotropic_stable(1, 1.0, 2.0);
  const auto G = generator_matrix(C, line(6));
  const auto col = heat_kernel(G, {0.0}, GridPoint(1));
  for (std::size_t j = 0; j < G.size(); ++j) CHECK(at(col, 0, j) == (G.window[j] == GridPoint(1) ? 2.0 : 0.0));
}

TEST_CASE("two-state chain has the closed-form kernel") {
  const double c = 1.3;
  const auto G = generator_matrix(two_state(c), {GridPoint(0), GridPoint(1)});
  UniformizationOptions u;
  u.tolerance = 1e-13;
  const std::vector<double> ts = {0.01, 0.1, 0.5, 1.0, 4.0};
  const auto table = heat_kernel_table(G, ts, {GridPoint(0), GridPoint(1)}, u);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double off = 0.5 * (1.0 - std::exp(-2.0 * c * ts[k]));
    CHECK(std::abs(at(table.columns[0], k, 1) - off) < 1e-10);
    CHECK(std::abs(at(table.columns[0], k, 0) - (1.0 - off)) < 1e-10);
    CHECK(std::abs(at(table.columns[0], k, 1) - at(table.columns[1], k, 0)) < 1e-12);
  }
}

TEST_CASE("symmetry, mass and the semigroup property") {
  const auto C = isotropic_stable(1, 1.0);
  const auto w = line(2);
  const std::vector<double> ts = {0.25, 0.5, 1.0, 2.0};
  for (const auto b : {Boundary::Killed, Boundary::FullRateKilled}) {
    GeneratorOptions o;
    o.boundary = b;
    const auto G = generator_matrix(C, w, o);
    const auto table = heat_kernel_table(G, ts, w);
    for (std::size_t k = 0; k < ts.size(); ++k)
      for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = 0; j < w.size(); ++j)
          CHECK(std::abs(at(table.columns[i], k, j) - at(table.columns[j], k, i)) < 1e-9);
    double prev = 1.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double m = column_mass(table.columns[2], k, C.lattice());
      if (b == Boundary::Killed) {
        CHECK(std::abs(m - 1.0) < 1e-9);
      } else {
        CHECK(m < prev);
      }
      prev = m;
    }
    std::vector<double> delta(w.size(), 0.0);
    delta[1] = 1.0;
    const auto once = apply_semigroup(G, 0.5, delta);
    const auto twice = apply_semigroup(G, 0.25, apply_semigroup(G, 0.25, delta));
    for (std::size_t j = 0; j < w.size(); ++j) CHECK(std::abs(once[j] - twice[j]) < 1e-8);
  }
}

TEST_CASE("scaling identity for a table field") {
  // A finite symmetric table on Z; under rho = 2 the generator is 2^alpha times the rho = 1 generator.
  std::vector<TableEntry> entries;
  auto add = [&](std::int64_t a, std::int64_t b, double v) {
    entries.push_back({GridPoint(a), GridPoint(b), v});
    entries.push_back({GridPoint(b), GridPoint(a), v});
  };
  add(-2, 0, 0.3);
  add(0, 1, 1.0);
  add(1, 3, 0.5);
  add(-1, 2, 0.2);
  add(-2, 3, 0.05);
  const auto T = table_field(1, 1.0, 1.0, entries);
  const auto S = scale_conductivity(T, 2.0);
  const auto w = line(3);
  const auto G1 = generator_matrix(T, w);
  const auto G2 = generator_matrix(S, w);
  const std::vector<double> ts = {0.1, 0.4, 1.0};
  std::vector<double> ts1;
  for (const double t : ts) ts1.push_back(2.0 * t);
  UniformizationOptions u;
  u.tolerance = 1e-13;
  for (const auto& src : {GridPoint(0), GridPoint(-2), GridPoint(3)}) {
    const auto a = heat_kernel(G2, ts, src, u);
    const auto b = heat_kernel(G1, ts1, src, u);
    for (std::size_t k = 0; k < ts.size(); ++k)
      for (std::size_t j = 0; j < w.size(); ++j) CHECK(std::abs(at(a, k, j) - 2.0 * at(b, k, j)) < 1e-10);
  }
}

TEST_CASE("resolvent identity") {
  SUBCASE("zero data") {
    const auto G = generator_matrix(isotropic_stable(1, 1.0), line(4));
    const std::vector<double> z(G.size(), 0.0);
    const auto r = resolvent_check(G, z, z, 1.0);
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
  }
  SUBCASE("two points by hand") {
    const double c = 0.7, lambda = 2.0;
    const auto G = generator_matrix(two_state(c), {GridPoint(0), GridPoint(1)});
    const auto r = resolvent_check(G, {1.0, 0.0}, {1.0, -1.0}, lambda);
    // u0 - u1 = 1/(lambda + 2c), so E(u, g) = 2c/(lambda + 2c).
    CHECK(std::abs(r.lhs - 2.0 * c / (lambda + 2.0 * c)) < 1e-12);
    CHECK(std::abs(r.lhs - r.rhs) < 1e-12);
  }
  SUBCASE("large windows under both boundaries") {
    for (const auto b : {Boundary::Killed, Boundary::FullRateKilled}) {
      for (const std::int64_t R : {16, 32, 64}) {
        GeneratorOptions o;
        o.boundary = b;
        const auto G = generator_matrix(isotropic_stable(1, 1.0), line(R), o);
        std::vector<double> f(G.size()), g(G.size());
        for (std::size_t i = 0; i < G.size(); ++i) {
          const double x = static_cast<double>(G.window[i][0]) / static_cast<double>(R);
          f[i] = std::exp(-4.0 * x * x);
          g[i] = std::cos(3.0 * x) * (1.0 - x * x);
        }
        const auto r = resolvent_check(G, f, g, 1.0);
        INFO("R=" << R << " boundary=" << to_string(b));
        CHECK(r.relative_residual <= 1e-8);
      }
    }
  }
}

TEST_CASE("Holder exponent estimate is positive") {
  DiagnosticsOptions o;
  o.window_radius = 16.0;
  o.boundary = Boundary::FullRateKilled;
  o.diagonal_sources = 3;
  const auto d = kernel_diagnostics(isotropic_stable(1, 1.0), {1.0, 2.0}, {0.5, 1.0}, o);
  REQUIRE(d.holder);
  CHECK(d.holder->beta > 0.0);
  CHECK(d.on_diagonal_spread >= 1.0);
  CHECK(d.max_error_bound < 1e-6);
}
