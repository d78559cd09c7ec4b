// Acceptance run: one PASS/FAIL line per criterion, details in acceptance.json.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "jumplab/chain.hpp"
#include "jumplab/conductivity.hpp"
#include "jumplab/convergence.hpp"
#include "jumplab/forms.hpp"
#include "jumplab/heatkernel.hpp"
#include "jumplab/parallel.hpp"
#include "jumplab/validators.hpp"

using namespace jumplab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  json details;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::vector<GridPoint> line(std::int64_t r) {
  std::vector<GridPoint> w;
  for (std::int64_t i = -r; i <= r; ++i) w.push_back(GridPoint(i));
  return w;
}

json point(const GridPoint& p, int d) {
  json j = json::array();
  for (int i = 0; i < d; ++i) j.push_back(p[i]);
  return j;
}

Outcome builder_exactness() {
  const auto C = build_from_kernel(isotropic_kernel(1, 1.0, 1.0), 1.0);
  const double err = std::abs(C.evaluate(GridPoint(0), GridPoint(3)) - std::log(9.0 / 8.0));
  KernelSpec k;
  k.d = 2;
  k.alpha = 1.0;
  k.k = [](std::span<const double>, std::span<const double>) { return 0.75; };
  k.profile = [](std::span<const double>) { return 0.75; };
  bool constant = true, adjacent_zero = true;
  for (const double n : {1.0, 2.0}) {
    const auto K = build_from_kernel(k, n);
    for (const GridPoint y : {GridPoint(2, 0), GridPoint(3, -4), GridPoint(-2, 7)})
      constant = constant && K.evaluate(GridPoint(0, 0), y) == 0.75;
    for (const GridPoint y : {GridPoint(1, 0), GridPoint(1, 1), GridPoint(0, -1)})
      adjacent_zero = adjacent_zero && K.evaluate(GridPoint(0, 0), y) == 0.0;
  }
  return {err <= 1e-10 && constant && adjacent_zero,
          {{"abs_error_ln_9_8", err}, {"constant_exact", constant}, {"adjacent_zero", adjacent_zero}}};
}

Outcome isotropic_constant() {
  const double c = isotropic_stable(1, 1.0).evaluate(GridPoint(0), GridPoint(1));
  const double err = std::abs(c - 1.0 / M_PI);
  return {err <= 1e-12, {{"coefficient", c}, {"abs_error", err}}};
}

Outcome validators() {
  json d;
  const auto cone = double_cone({});
  const auto w = Window::centered(2, 12);
  const auto bounds = check_bounds_A1_A2(cone, w, *cone.meta().kappa1);
  const double kappa2 = *cone.meta().kappa2;
  const auto atlas = build_chain_atlas(cone, w, cone_router(cone, 1.0, kappa2));
  const bool a3 = !atlas.missing && atlas.max_length <= 2 && atlas.min_edge_bound >= kappa2;
  d["double_cone"] = {{"A1_A2", bounds.all_pass()},
                      {"pairs", atlas.pairs},
                      {"max_chain_length", atlas.max_length},
                      {"certified_N0", atlas.certified_N0()},
                      {"min_edge_bound", atlas.min_edge_bound},
                      {"A3", a3}};

  const auto axes = axes_counterexample(1.0);
  const auto dens = density_check_A4(axes, GridPoint{}, 10.0, 1.0);
  const bool a4 = dens.good == 40 && dens.total == 317 && dens.fraction < kA4Threshold;
  ChainSearch s;
  s.N0 = 4;
  s.kappa2 = *axes.meta().kappa1;
  s.radius_factor = 20.0 / std::sqrt(2.0);
  const auto chain = find_chain_A3(axes, GridPoint(0, 0), GridPoint(1, 1), s);
  json witness = nullptr;
  if (chain) {
    witness = json::array();
    for (const auto& p : chain->points) witness.push_back(point(p, 2));
  }
  d["axes"] = {{"A4_good", dens.good},
               {"A4_total", dens.total},
               {"A4_fraction", dens.fraction},
               {"A4_fails", a4},
               {"chain_kappa2", s.kappa2},
               {"chain_absent", !chain},
               {"chain_found", witness}};
  return {bounds.all_pass() && a3 && a4 && !chain, d};
}

Outcome form_comparison_check(std::uint64_t seed) {
  const auto C = double_cone({});
  const auto aw = Window::centered(2, 12);
  const auto atlas = build_chain_atlas(C, aw, cone_router(C, 1.0, *C.meta().kappa2));
  if (atlas.missing) return {false, {{"atlas_missing", true}}};
  std::vector<GridFunction> corpus(100);
  for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i] = random_grid_function(Window::centered(2, 8), seed, i);
  const auto rep = form_comparison(C, atlas, aw, corpus, 1.0);
  return {rep.pass(),
          {{"N0", rep.N0},
           {"kappa2", rep.kappa2},
           {"Theta2", rep.theta2},
           {"bound", rep.bound},
           {"max_ratio", rep.max_ratio},
           {"violations", rep.violations},
           {"gaps", rep.gaps}}};
}

Outcome norm_equivalence_check(std::uint64_t seed) {
  const auto k = cone_kernel(1.0, 1.0);
  const auto cube = cube_chain_check(k, CubeChainOptions{});
  if (!cube.found()) return {false, {{"cube_chain_found", false}}};
  const double lower = cube.lower_constant();
  const double upper = k.lambda1.value_or(1.0);
  const auto rep = norm_equivalence(k, smooth_corpus(2, 20, seed), lower, upper, 0.05);
  json ratios = json::array();
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& r : rep.rows) {
    ratios.push_back(r.ratio);
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  return {rep.pass(),
          {{"M0", cube.certified_M0},
           {"Lambda2", cube.certified_Lambda2},
           {"cube_quadrature_error", cube.quadrature_error},
           {"lower", lower},
           {"upper", upper},
           {"min_ratio", lo},
           {"max_ratio", hi},
           {"ratios", ratios}}};
}

Outcome heat_kernel_identities() {
  UniformizationOptions u;
  u.tolerance = 1e-12;
  const auto base = isotropic_stable(1, 1.0);
  const auto w = line(16);
  const std::vector<double> ts = {0.1, 0.5, 1.0};
  double sym = 0.0, scaling = 0.0, mass_increase = 0.0;
  std::vector<HeatKernelTable> tables;
  for (const double rho : {1.0, 2.0}) {
    const auto C = rho == 1.0 ? base : scale_conductivity(base, rho);
    for (const auto b : {Boundary::Killed, Boundary::FullRateKilled}) {
      GeneratorOptions o;
      o.boundary = b;
      const auto table = heat_kernel_table(generator_matrix(C, w, o), ts, w, u);
      for (std::size_t k = 0; k < ts.size(); ++k)
        for (std::size_t i = 0; i < w.size(); ++i)
          for (std::size_t j = 0; j < i; ++j)
            sym = std::max(sym, std::abs(table.columns[i].values[k][j] - table.columns[j].values[k][i]));
      for (const auto& col : table.columns)
        for (std::size_t k = 0; k + 1 < ts.size(); ++k)
          mass_increase = std::max(mass_increase, column_mass(col, k + 1, C.lattice()) - column_mass(col, k, C.lattice()));
      if (b == Boundary::Killed) tables.push_back(table);
    }
  }
  // p_2(t, x, y) = 2 p_1(2 t, 2x, 2y); on matched integer windows the rho = 1
  // kernel at time 2t is needed.
  std::vector<double> ts2;
  for (const double t : ts) ts2.push_back(2.0 * t);
  const auto t1 = heat_kernel_table(generator_matrix(base, w), ts2, w, u);
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t k = 0; k < ts.size(); ++k)
      for (std::size_t j = 0; j < w.size(); ++j)
        scaling = std::max(scaling, std::abs(tables[1].columns[i].values[k][j] - 2.0 * t1.columns[i].values[k][j]));

  const double c = 1.3;
  const auto T = table_field(1, 1.0, 1.0, {{GridPoint(0), GridPoint(1), c}, {GridPoint(1), GridPoint(0), c}});
  const auto two = heat_kernel_table(generator_matrix(T, {GridPoint(0), GridPoint(1)}), {0.1, 0.5, 1.0, 3.0},
                                     {GridPoint(0), GridPoint(1)}, u);
  double closed = 0.0;
  for (std::size_t k = 0; k < two.times.size(); ++k) {
    const double off = 0.5 * (1.0 - std::exp(-2.0 * c * two.times[k]));
    closed = std::max({closed, std::abs(two.columns[0].values[k][1] - off),
                       std::abs(two.columns[0].values[k][0] - (1.0 - off))});
  }
  return {sym <= 1e-8 && scaling <= 1e-8 && mass_increase <= 1e-12 && closed <= 1e-10,
          {{"symmetry", sym}, {"scaling", scaling}, {"mass_increase", mass_increase}, {"two_state", closed}}};
}

Outcome on_diagonal() {
  DiagnosticsOptions o;
  o.window_radius = 8.0;
  o.boundary = Boundary::FullRateKilled;
  o.diagonal_sources = 5;
  const auto d = kernel_diagnostics(isotropic_stable(1, 1.0), {1.0, 2.0, 4.0}, {0.1, 0.3, 1.0}, o);
  json rows = json::array();
  for (const auto& r : d.on_diagonal) rows.push_back({{"rho", r.rho}, {"t", r.t}, {"value", r.value}});
  return {d.on_diagonal_spread < 2.0,
          {{"spread", d.on_diagonal_spread}, {"rows", rows}, {"boundary", d.boundary},
           {"max_error_bound", d.max_error_bound}}};
}

Outcome resolvent() {
  GeneratorOptions o;
  o.boundary = Boundary::FullRateKilled;
  const auto G = generator_matrix(isotropic_stable(1, 1.0), line(32), o);
  std::vector<double> f(G.size(), 0.0), g(G.size(), 0.0);
  for (std::size_t i = 0; i < G.size(); ++i) {
    const double x = static_cast<double>(G.window[i][0]);
    if (std::abs(x) > 8.0) continue;
    f[i] = std::cos(M_PI * x / 16.0);
    g[i] = 1.0 - std::abs(x) / 8.0 + 0.1 * std::sin(x);
  }
  const auto r = resolvent_check(G, f, g, 1.0);
  return {r.relative_residual <= 1e-8,
          {{"lhs", r.lhs}, {"rhs", r.rhs}, {"relative_residual", r.relative_residual}, {"iterations", r.iterations}}};
}

Outcome levy(std::uint64_t seed) {
  const auto C = isotropic_stable(1, 1.0);
  const JumpSampler S(C);
  const auto& lat = C.lattice();
  const std::vector<LevyTestFunction> fs = {levy_big_jumps(lat, 2.0), levy_hit_point(C, GridPoint(3)),
                                            levy_discounted_jumps(lat, 1.0, 8, 4.0),
                                            levy_local_displacement(lat, 2.0, 8), levy_oscillating_forward(lat, 8)};
  bool pass = true;
  json rows = json::array();
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto r = levy_system_check(S, fs[i], GridPoint(0), 1.0, 100000, seed + i);
    const double z = (r.lhs - r.rhs) / r.combined_se;
    const bool ok = std::abs(r.lhs - r.rhs) <= 3.0 * r.combined_se + r.rate_tail_bound;
    pass = pass && ok;
    rows.push_back({{"f", fs[i].name}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"se", r.combined_se}, {"z", z}, {"pass", ok}});
  }
  return {pass, {{"functions", rows}}};
}

FieldFamily isotropic_family() {
  const auto base = isotropic_stable(1, 1.0);
  return [base](double n) { return scale_conductivity(base, n); };
}

Outcome clt(std::uint64_t seed) {
  CltOptions o;
  o.t = 1.0;
  o.paths = 100000;
  o.seed = seed;
  o.reference = Reference::CauchyStandard;
  o.symbol = isotropic_symbol(1, 1.0, 1.0 / M_PI);
  const auto rep = clt_diagnostic(isotropic_family(), {2.0, 4.0, 8.0, 16.0}, o);
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"n", r.n}, {"ks", *r.ks}, {"ks_halfwidth", r.ks_halfwidth}, {"cf", r.cf_distance},
                    {"cf_halfwidth", r.cf_halfwidth}});
  const auto& last = rep.rows.back();
  const bool pass = rep.ks_decreasing.value_or(false) && *last.ks < 0.05 && last.cf_distance < 0.05;
  return {pass, {{"rows", rows}, {"ks_decreasing", rep.ks_decreasing.value_or(false)}}};
}

Outcome tightness(std::uint64_t seed) {
  TightnessOptions o;
  o.etas = {1.0};
  o.deltas = {0.01};
  o.paths = 100000;
  o.seed = seed;
  o.bound = 0.1;
  const auto rep = tightness_diagnostic(isotropic_family(), {8.0, 16.0}, o);
  bool pass = true;
  json rows = json::array();
  for (const auto& r : rep.rows) {
    pass = pass && r.p_hat < 0.1;
    rows.push_back({{"n", r.n}, {"p", r.p_hat}, {"ci", {r.ci.lo, r.ci.hi}}, {"p_sup", r.p_sup},
                    {"ci_sup", {r.ci_sup.lo, r.ci_sup.hi}}});
  }
  return {pass, {{"rows", rows}}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const fs::path& dir, std::uint64_t seed) {
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"validate", R"({"field": {"family": "double_cone", "d": 2, "alpha": 1.0},
                       "validate": {"window": 5, "cone_gamma": 1.0, "N0": 20}})"},
      {"simulate", R"({"field": {"family": "isotropic_stable", "d": 1, "alpha": 1.0},
                       "simulate": {"t_max": 1.0, "paths": 2000, "event_log": true,
                                    "exit": {"R": 4, "gamma": 0.2, "split": {"r": 1, "s": 2}},
                                    "gamma_tilde": {"grid": [0.1, 0.2, 0.4]}}})"},
      {"heatkernel", R"({"field": {"family": "isotropic_stable", "d": 1, "alpha": 1.0},
                         "heatkernel": {"rho": 2, "window": 3, "times": [0.5, 1], "sources": [[0], [0.5]]}})"},
      {"forms", R"({"field": {"family": "double_cone", "d": 2, "alpha": 1.0},
                    "forms": {"mode": "compare", "atlas_radius": 6, "cone_gamma": 1.0, "lambda": 1.0,
                              "corpus": {"count": 5, "radius": 3}}})"},
      {"clt", R"({"field": {"family": "isotropic_stable", "d": 1, "alpha": 1.0},
                  "clt": {"n_list": [2, 4], "paths": 2000, "tightness": {"n_list": [2], "paths": 1000}}})"}};
  bool pass = true;
  json files = json::array(), codes = json::array();
  for (const auto& [command, text] : runs) {
    std::vector<fs::path> outs;
    for (const int threads : {1, 4}) {
      auto cfg = json::parse(text);
      cfg["seed"] = seed;
      cfg["threads"] = threads;
      const fs::path out = dir / (command + "_threads" + std::to_string(threads));
      fs::remove_all(out);
      cli::RunRequest r;
      r.command = command;
      r.config = cfg;
      r.base_dir = dir;
      r.output_dir = out;
      set_thread_count(threads);
      const int code = cli::run(r);
      pass = pass && code == cli::kOk;
      codes.push_back({{"run", command + "_threads" + std::to_string(threads)}, {"exit", code}});
      outs.push_back(out);
    }
    set_thread_count(0);
    for (const auto& e : fs::directory_iterator(outs[0])) {
      const auto name = e.path().filename().string();
      if (name == "manifest.json") continue;
      const bool same = fs::exists(outs[1] / name) && slurp(e.path()) == slurp(outs[1] / name);
      pass = pass && same;
      files.push_back({{"file", command + "/" + name}, {"identical", same}});
    }
  }
  return {pass, {{"files", files}, {"exit_codes", codes}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jumplab acceptance run"};
  std::string out_dir = "acceptance_artifacts";
  std::uint64_t seed = 20240601;
  std::vector<int> only;
  app.add_option("--out", out_dir, "Directory for acceptance.json and determinism artifacts");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const fs::path out(out_dir);
  fs::create_directories(out);
  const std::vector<Criterion> criteria = {
      {1, "builder exactness", 1.0, builder_exactness},
      {2, "isotropic constant", 1.0, isotropic_constant},
      {3, "validators", 30.0, validators},
      {4, "form comparison", 120.0, [&] { return form_comparison_check(seed); }},
      {5, "norm equivalence", 300.0, [&] { return norm_equivalence_check(seed); }},
      {6, "heat-kernel identities", 60.0, heat_kernel_identities},
      {7, "on-diagonal stability", 300.0, on_diagonal},
      {8, "resolvent identity", 60.0, resolvent},
      {9, "Levy system", 300.0, [&] { return levy(seed); }},
      {10, "CLT benchmark", 600.0, [&] { return clt(seed); }},
      {11, "tightness probe", 300.0, [&] { return tightness(seed); }},
      {12, "determinism", 600.0, [&] { return determinism(out / "determinism", seed); }},
  };

  json report = json::object();
  report["seed"] = seed;
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, {{"exception", e.what()}}};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    o.details["pass"] = o.pass;
    report[std::to_string(c.id)] = {{"name", c.name}, {"details", o.details}};
    std::printf("%s %2d %-24s %8.2fs (limit %gs)%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                c.limit_seconds, in_time ? "" : " over time");
    std::fflush(stdout);
  }
  std::ofstream(out / "acceptance.json") << report.dump(2) << "\n";
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed")
            << "; details in " << (out / "acceptance.json").string() << "\n";
  return failures ? 1 : 0;
}
