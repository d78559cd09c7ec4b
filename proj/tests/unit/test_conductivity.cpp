#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "jumplab/conductivity.hpp"
#include "jumplab/errors.hpp"
#include "jumplab/expr.hpp"
#include "jumplab/field_io.hpp"

using namespace jumplab;

TEST_CASE("isotropic stable constant from the Gamma expression") {
  // d = 1, alpha = 1: Gamma(1) / (pi^{1/2} Gamma(1/2)) = 1/pi.
  CHECK(std::abs(isotropic_stable_constant(1, 1.0) - 1.0 / M_PI) < 1e-12);
  // d = 2, alpha = 1: Gamma(3/2) / (pi Gamma(1/2)) = 1/(2 pi).
  CHECK(std::abs(isotropic_stable_constant(2, 1.0) - 0.5 / M_PI) < 1e-12);
  const auto C = isotropic_stable(1, 1.0);
  CHECK(C.evaluate(GridPoint(0), GridPoint(1)) == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
  CHECK(C.evaluate(GridPoint(0), GridPoint(0)) == 0.0);
}

TEST_CASE("cell-pair builder matches the closed-form double integral") {
  // int_{-1/2}^{1/2} int_{5/2}^{7/2} (eta - xi)^{-2} = ln(9/8).
  const auto k = isotropic_kernel(1, 1.0, 1.0);
  const auto C = build_from_kernel(k, 1.0);
  CHECK(std::abs(C.evaluate(GridPoint(0), GridPoint(3)) - std::log(9.0 / 8.0)) < 1e-10);
  CHECK(C.evaluate(GridPoint(0), GridPoint(1)) == 0.0);
  CHECK(C.evaluate(GridPoint(5), GridPoint(4)) == 0.0);
}

TEST_CASE("constant kernel gives the constant on separated cells") {
  KernelSpec k;
  k.d = 2;
  k.alpha = 1.0;
  k.k = [](std::span<const double>, std::span<const double>) { return 2.5; };
  k.profile = [](std::span<const double>) { return 2.5; };
  for (const double n : {1.0, 3.0}) {
    const auto C = build_from_kernel(k, n);
    CHECK(C.evaluate(GridPoint(0, 0), GridPoint(2, 0)) == 2.5);
    CHECK(C.evaluate(GridPoint(0, 0), GridPoint(-3, 5)) == 2.5);
    CHECK(C.evaluate(GridPoint(0, 0), GridPoint(1, 1)) == 0.0);
    CHECK(C.evaluate(GridPoint(0, 0), GridPoint(1, 0)) == 0.0);
  }
}

TEST_CASE("builder entries stay within the comparison bounds") {
  const double kappa = 0.7;
  for (const int d : {1, 2}) {
    const double alpha = 0.8;
    const auto k = isotropic_kernel(d, alpha, kappa);
    const double n = 2.0;
    const auto C = build_from_kernel(k, n);
    const ScaledLattice lat(d, n);
    const double lo = kappa * std::pow(4.0 * d, -(d + alpha) / 2.0);
    const double hi = kappa * std::pow(4.0 * d, (d + alpha) / 2.0);
    for (std::int64_t a = 2; a <= 6; ++a)
      for (std::int64_t b = 0; b <= (d == 2 ? 4 : 0); ++b) {
        const GridPoint x{}, y(a, b);
        const double r = std::pow(lat.distance(x, y), -(d + alpha));
        const double c = C.evaluate(x, y);
        CHECK(c >= lo * r);
        CHECK(c <= hi * r);
        CHECK(c == doctest::Approx(C.evaluate(y, x)).epsilon(1e-12));
      }
  }
}

TEST_CASE("scaling map") {
  const auto T = table_field(1, 1.0, 1.0, {{GridPoint(1), GridPoint(3), 0.25}, {GridPoint(3), GridPoint(1), 0.25}});
  CHECK(scale_conductivity(T, 1.0).evaluate(GridPoint(1), GridPoint(3)) == 0.25);
  // Positions 0.5 and 1.5 on Z/2 have integer coordinates 1 and 3.
  const auto S = scale_conductivity(T, 2.0);
  CHECK(S.evaluate(GridPoint(1), GridPoint(3)) == 1.0);
  CHECK(S.lattice().position(GridPoint(1))[0] == 0.5);
  CHECK_THROWS_AS(scale_conductivity(S, 2.0), InvalidArgument);
}

TEST_CASE("isotropic family is scale invariant in positions") {
  for (const int d : {1, 2}) {
    const double alpha = 1.3;
    const double kappa = isotropic_stable_constant(d, alpha);
    const auto base = isotropic_stable(d, alpha);
    for (const double rho : {2.0, 4.0}) {
      const auto C = scale_conductivity(base, rho);
      const ScaledLattice& lat = C.lattice();
      for (std::int64_t a = 1; a < 5; ++a) {
        const GridPoint x(0, 1), y(a, d == 2 ? -a : 0);
        const double expect = kappa * std::pow(lat.distance(x, y), -(d + alpha));
        CHECK(C.evaluate(x, y) == doctest::Approx(expect).epsilon(1e-13));
        CHECK(C.evaluate(x, y) == base.evaluate(x, y) * std::pow(rho, d + alpha));
      }
    }
  }
}

TEST_CASE("total rate of a finite table") {
  const auto T = table_field(1, 1.0, 1.0,
                             {{GridPoint(0), GridPoint(1), 1.0},
                              {GridPoint(1), GridPoint(0), 1.0},
                              {GridPoint(0), GridPoint(-2), 2.5},
                              {GridPoint(-2), GridPoint(0), 2.5}});
  const auto r = total_rate(T, GridPoint(0));
  CHECK(r.value == 3.5);
  CHECK(r.exact);
  CHECK(total_rate(T, GridPoint(7)).value == 0.0);
}

TEST_CASE("total rate of |h|^-2 on Z is pi^2/3") {
  const auto C = isotropic_stable(1, 1.0, 1.0, 1.0);
  const double basel = M_PI * M_PI / 3.0;
  CHECK(std::abs(total_rate(C, GridPoint(5)).value - basel) < 1e-13);
  // Truncated sum: partial sums from below, certified tail bound from above.
  for (const std::int64_t R : {10, 100, 1000}) {
    TailPolicy tp;
    tp.kind = TailPolicy::Kind::Truncate;
    tp.radius = R;
    const auto r = total_rate(C, GridPoint(0), tp);
    double partial = 0.0;
    for (std::int64_t h = R; h >= 1; --h) partial += 2.0 / static_cast<double>(h * h);
    CHECK(r.value == doctest::Approx(partial).epsilon(1e-14));
    CHECK(r.value <= basel);
    CHECK(r.value + r.tail_bound >= basel);
    CHECK(r.tail_bound <= 2.0 / static_cast<double>(R) + 1e-15);
  }
}

TEST_CASE("total rate is bounded by kappa1 times the lattice zeta sum") {
  DoubleConeParams p;
  p.gamma = 0.5;
  p.a = 0.5;
  p.b = 2.0;
  p.g = [](const GridPoint& x, const GridPoint& y) { return 1.25 + 0.75 * std::cos(double(x[0] + y[0])); };
  const auto C = double_cone(p);
  TailPolicy tp;
  tp.kind = TailPolicy::Kind::Truncate;
  tp.radius = 200;
  const auto r = total_rate(C, GridPoint(1, 2), tp);
  // Dominating sum over |h|_inf <= 200 plus its own bound.
  double dom = 0.0;
  for_each_offset(2, 200, [&](const Index& h) {
    if (sup_norm(h, 2) > 0) dom += std::pow(norm(h, 2), -3.0);
  });
  CHECK(r.value <= 2.0 * dom);
  CHECK(r.value > 0.0);
}

TEST_CASE("built-in family membership") {
  const auto cone = double_cone({});
  CHECK(cone.evaluate(GridPoint(0, 0), GridPoint(3, 1)) > 0.0);
  CHECK(cone.evaluate(GridPoint(0, 0), GridPoint(1, 3)) == 0.0);
  const auto axes = axes_counterexample(1.0);
  CHECK(axes.evaluate(GridPoint(0, 0), GridPoint(1, 1)) == 0.0);
  CHECK(axes.evaluate(GridPoint(0, 0), GridPoint(0, 2)) == doctest::Approx(0.125));
}

TEST_CASE("random pairs are symmetric and obey the kappa1 bound") {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<std::int64_t> u(-30, 30);
  const std::vector<ConductivityField> fields = {isotropic_stable(2, 0.7), double_cone({}), axes_counterexample(1.5),
                                                 isotropic_stable(1, 1.0, 3.0)};
  for (const auto& C : fields) {
    const double k1 = *C.meta().kappa1;
    for (int i = 0; i < 10000; ++i) {
      const GridPoint x(u(gen), C.dim() == 2 ? u(gen) : 0), y(u(gen), C.dim() == 2 ? u(gen) : 0);
      CHECK(C.evaluate(x, y) == C.evaluate(y, x));
      if (x == y) continue;
      CHECK(C.evaluate(x, y) <= k1 * std::pow(C.lattice().distance(x, y), -(C.dim() + C.alpha())) * (1 + 1e-12));
    }
  }
}

TEST_CASE("table csv round trip in positions") {
  const auto path = std::filesystem::temp_directory_path() / "jumplab_table_test.csv";
  {
    std::ofstream out(path);
    out << "x1,y1,value\n0.5,1.5,0.25\n1.5,0.5,0.25\n";
  }
  const auto C = load_table_csv(path.string(), 1, 1.0, 2.0);
  CHECK(C.evaluate(GridPoint(1), GridPoint(3)) == 0.25);
  CHECK(C.evaluate(GridPoint(3), GridPoint(1)) == 0.25);
  CHECK(C.evaluate(GridPoint(0), GridPoint(3)) == 0.0);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_table_csv(path.string(), 1, 1.0, 2.0), ConfigError);
}

TEST_CASE("expression kernels") {
  const Expression e("(abs(h2) <= abs(h1)) * r^(-d-alpha)");
  ExprArgs a;
  a.d = 2;
  a.alpha = 1;
  a.h = {2, 1, 0};
  a.r = std::sqrt(5.0);
  CHECK(e.eval(a) == doctest::Approx(std::pow(5.0, -1.5)));
  a.h = {1, 2, 0};
  CHECK(e.eval(a) == 0.0);
  CHECK(e.stationary());
  CHECK_FALSE(Expression("x1 * r").stationary());
  CHECK_THROWS(Expression("r +* 2"));
}

TEST_CASE("field specs from JSON") {
  const auto C = field_from_json(nlohmann::json::parse(R"({"family": "isotropic_stable", "d": 1, "alpha": 1.0})"));
  CHECK(C.evaluate(GridPoint(0), GridPoint(2)) == doctest::Approx(0.25 / M_PI));
  const auto K = field_from_json(nlohmann::json::parse(
      R"({"family": "kernel_cells", "n": 1, "d": 1, "alpha": 1.0, "kernel": {"type": "isotropic", "scale": 1.0}})"));
  CHECK(std::abs(K.evaluate(GridPoint(0), GridPoint(3)) - std::log(9.0 / 8.0)) < 1e-10);
  try {
    field_from_json(nlohmann::json::parse(R"({"family": "double_cone", "d": 1})"));
    FAIL("expected a spec error");
  } catch (const SpecError& e) {
    CHECK(e.path() == "/field/d");
  }
  CHECK_THROWS_AS(field_from_json(nlohmann::json::parse(R"({"family": "nope"})")), SpecError);
}

TEST_CASE("meta constants are validated") {
  ConductivityMeta m;
  m.kappa4 = 2.0;
  m.kappa5 = 1.0;
  CHECK_THROWS(m.check());
  m.kappa5 = 3.0;
  CHECK_NOTHROW(m.check());
}
