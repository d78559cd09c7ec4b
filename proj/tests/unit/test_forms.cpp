#include <doctest.h>

#include <cmath>

#include "jumplab/forms.hpp"

using namespace jumplab;

namespace {

GridFunction delta0() { return {{GridPoint(0), 1.0}}; }

GridFunction combine(double a, const GridFunction& f, double b, const GridFunction& g) {
  GridFunction h;
  for (const auto& [x, v] : f) h[x] += a * v;
  for (const auto& [x, v] : g) h[x] += b * v;
  return h;
}

}  // namespace

TEST_CASE("discrete form of a constant on a closed table is zero") {
  std::vector<TableEntry> e;
  for (std::int64_t a = 0; a < 3; ++a)
    for (std::int64_t b = 0; b < 3; ++b)
      if (a != b) e.push_back({GridPoint(a), GridPoint(b), 0.5 + static_cast<double>(a + b)});
  const auto T = table_field(1, 1.0, 1.0, e);
  const GridFunction f = {{GridPoint(0), 2.0}, {GridPoint(1), 2.0}, {GridPoint(2), 2.0}};
  CHECK(discrete_form(T, f).value == 0.0);
}

TEST_CASE("discrete form of a point mass is the total rate") {
  const auto C = isotropic_stable(1, 1.0, 1.0, 1.0);
  const auto e = discrete_form(C, delta0());
  CHECK(std::abs(e.value - M_PI * M_PI / 3.0) <= 1e-12 + e.error_bound);
  CHECK(e.kind == FormKind::Discrete);
  for (const double lambda : {1.0, 5.0, 50.0}) {
    const auto t = discrete_form(C, delta0(), lambda);
    double partial = 0.0;
    for (std::int64_t h = static_cast<std::int64_t>(lambda); h >= 1; --h) partial += 2.0 / double(h * h);
    CHECK(t.kind == FormKind::DiscreteTruncated);
    CHECK(t.value == doctest::Approx(partial).epsilon(1e-13));
    CHECK(t.value <= e.value);
    // The removed pairs are exactly the tail beyond lambda.
    CHECK(e.value - t.value <= 2.0 / lambda + e.error_bound + 1e-12);
  }
}

TEST_CASE("discrete form is bilinear, symmetric and nonnegative") {
  const auto C = double_cone({});
  const auto w = Window::centered(2, 3);
  const auto f = random_grid_function(w, 5, 0);
  const auto g = random_grid_function(w, 5, 1);
  const auto h = random_grid_function(Window::centered(2, 2), 5, 2);
  const double a = 0.75, b = -1.5;
  const double lhs = discrete_bilinear(C, combine(a, f, b, g), h).value;
  const double rhs = a * discrete_bilinear(C, f, h).value + b * discrete_bilinear(C, g, h).value;
  CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + 1.0));
  CHECK(discrete_bilinear(C, f, g).value == doctest::Approx(discrete_bilinear(C, g, f).value).epsilon(1e-13));
  for (std::uint64_t i = 0; i < 20; ++i) CHECK(discrete_form(C, random_grid_function(w, 9, i)).value >= 0.0);
}

TEST_CASE("comparison on the isotropic field") {
  const auto C = isotropic_stable(1, 1.0);
  const double kappa = isotropic_stable_constant(1, 1.0);
  ChainSearch s;
  s.N0 = 1;
  s.kappa2 = kappa * (1.0 - 1e-12);
  const auto aw = Window::centered(1, 8);
  const auto atlas = build_chain_atlas(C, aw, search_router(C, s));
  REQUIRE_FALSE(atlas.missing);
  CHECK(atlas.certified_N0() == 1);
  std::vector<GridFunction> corpus = {GridFunction{}};
  for (std::uint64_t i = 0; i < 5; ++i) corpus.push_back(random_grid_function(Window::centered(1, 4), 3, i));
  const auto rep = form_comparison(C, atlas, aw, corpus, 3.0);
  REQUIRE(rep.rows.size() == corpus.size());
  CHECK(rep.rows[0].e_alpha == 0.0);
  CHECK(rep.rows[0].e_field == 0.0);
  CHECK(rep.rows[0].pass);
  // Direct chains: E_alpha = E_field / kappa exactly.
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    CHECK(rep.rows[i].ratio == doctest::Approx(1.0 / kappa).epsilon(1e-12));
  CHECK(rep.pass());
  CHECK(rep.max_ratio <= rep.bound);
}

TEST_CASE("continuum forms") {
  const auto corpus = smooth_corpus(1, 3, 7);
  SmoothFunction zero = corpus[0];
  zero.value = [](std::span<const double>) { return 0.0; };
  zero.gradient = [](std::span<const double>, std::span<double> g) { g[0] = 0.0; };
  CHECK(sobolev_alpha(zero, 1.0).value == 0.0);

  // E_alpha(f(./s)) = s^{d - alpha} E_alpha(f).
  for (const auto& f : corpus) {
    for (const double alpha : {0.5, 1.2}) {
      const auto a = sobolev_alpha(f, alpha);
      const auto b = sobolev_alpha(dilate(f, 2.0), alpha);
      CHECK(a.value > 0.0);
      const double expect = std::pow(2.0, 1.0 - alpha) * a.value;
      CHECK(std::abs(b.value - expect) <= 3.0 * (b.error_bound + a.error_bound) + 1e-4 * expect);
    }
  }
}

TEST_CASE("cone kernel form is dominated by the isotropic one") {
  const auto fs = smooth_corpus(2, 3, 11);
  ContinuumOptions o;
  o.x_panels = 4;
  for (const auto& f : fs) {
    const auto r = continuum_forms({cone_kernel(1.0, 1.0), isotropic_kernel(2, 1.0)}, f, o);
    REQUIRE(r.size() == 2);
    CHECK(r[0].value > 0.0);
    CHECK(r[0].value <= r[1].value + r[0].error_bound + r[1].error_bound);
  }
}

TEST_CASE("cube chains") {
  CubeChainOptions o;
  o.radius = 2;
  o.margin = 2;
  o.M0 = 4;
  o.Lambda2 = 0.5;
  const auto iso = cube_chain_check(isotropic_kernel(2, 1.0), o);
  CHECK(iso.found());
  CHECK(iso.certified_M0 == 1);
  CHECK(std::abs(iso.certified_Lambda2 - 1.0) < 0.05);
  const auto axes = cube_chain_check(axes_kernel(1.0), o);
  CHECK_FALSE(axes.found());
}
