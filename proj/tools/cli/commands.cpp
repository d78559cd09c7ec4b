#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "config.hpp"
#include "jumplab/chain.hpp"
#include "jumplab/convergence.hpp"
#include "jumplab/field_io.hpp"
#include "jumplab/forms.hpp"
#include "jumplab/heatkernel.hpp"
#include "jumplab/parallel.hpp"
#include "jumplab/validators.hpp"
#include "report.hpp"

#ifndef JUMPLAB_VERSION
#define JUMPLAB_VERSION "0.0.0"
#endif

namespace jumplab::cli {

namespace {

using Clock = std::chrono::steady_clock;

struct Context {
  const json& config;
  Node root;
  Caps caps;
  std::string base_dir;
  std::uint64_t seed;
  ArtifactWriter& out;
  json timings = json::object();
};

struct Outcome {
  bool pass = true;
};

constexpr std::uint64_t kSimulateTag = 0x73696d;

GridPoint grid_point(const ScaledLattice& lat, const Vec& x, const std::string& path) {
  try {
    return lat.at(std::span<const double>(x.data(), static_cast<std::size_t>(lat.dim())));
  } catch (const InvalidArgument& e) {
    throw SpecError(path, e.what());
  }
}

std::vector<std::string> coord_names(const std::string& prefix, int d) {
  std::vector<std::string> v;
  for (int i = 1; i <= d; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

void put_position(CsvTable::Row& r, const ScaledLattice& lat, const GridPoint& p) {
  const Vec x = lat.position(p);
  for (int i = 0; i < lat.dim(); ++i) r.num(x[static_cast<std::size_t>(i)]);
}

ConductivityField load_field(const Context& ctx) {
  return field_from_json(ctx.root.at("field").raw(), "/field", ctx.base_dir);
}

Node section(const Context& ctx, const std::string& name) {
  static const json empty = json::object();
  if (!ctx.root.has(name)) return Node(empty, "/" + name);
  const Node n = ctx.root.at(name);
  if (!n.raw().is_object()) throw SpecError(n.path(), "expected an object");
  return n;
}

// ---- build ----------------------------------------------------------------

Outcome cmd_build(Context& ctx) {
  const auto C = load_field(ctx);
  const Node s = section(ctx, "build");
  s.only({"window"});
  const double R = s.positive("window", 4.0);
  const auto radius = static_cast<std::int64_t>(std::ceil(R * C.rho() - 1e-9));
  const Window w = Window::centered(C.dim(), radius);
  check_cap(w.size() * w.size(), ctx.caps.max_points, "build: window pairs");
  const auto pts = w.points();
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (const double v = C.evaluate(pts[i], pts[j]); v != 0.0) rows[i].emplace_back(j, v);
  });
  auto header = coord_names("x", C.dim());
  for (auto& y : coord_names("y", C.dim())) header.push_back(y);
  header.push_back("value");
  CsvTable t(header);
  std::size_t entries = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (const auto& [j, v] : rows[i]) {
      auto& r = t.row();
      put_position(r, C.lattice(), pts[i]);
      put_position(r, C.lattice(), pts[j]);
      r.num(v);
      ++entries;
    }
  ctx.out.csv("field.csv", t);
  json summary = field_summary(C);
  summary["window"] = w.describe();
  summary["entries"] = entries;
  ctx.out.json("field.json", summary);
  return {};
}

// ---- validate -------------------------------------------------------------

Outcome cmd_validate(Context& ctx) {
  const auto C = load_field(ctx);
  const Node s = section(ctx, "validate");
  s.only({"window", "kappa1", "kappa2", "kappa3", "N0", "density_radii", "density_threshold", "node_cap",
          "cone_gamma"});
  ValidateOptions opt;
  const auto radius = s.integer("window", 8);
  if (radius < 1) throw SpecError("/validate/window", "window radius must be at least 1");
  opt.window = Window::centered(C.dim(), radius);
  check_cap(opt.window.size() * opt.window.size(), ctx.caps.max_points, "validate: window pairs");
  opt.kappa1 = s.maybe_number("kappa1");
  opt.kappa2 = s.maybe_number("kappa2");
  opt.kappa3 = s.maybe_number("kappa3");
  if (s.has("N0")) opt.N0 = static_cast<int>(s.integer("N0"));
  opt.density_radii = s.numbers("density_radii", std::vector<double>{});
  opt.density_threshold = s.number("density_threshold", kA4Threshold);
  opt.node_cap = std::min(s.count("node_cap", ctx.caps.max_nodes), ctx.caps.max_nodes);
  opt.cone_gamma = s.maybe_number("cone_gamma");
  const auto report = validate_field(C, opt);
  json doc = report.to_json();
  doc["field"] = field_summary(C);
  ctx.out.json("validation.json", doc);
  return {report.all_pass()};
}

// ---- simulate -------------------------------------------------------------

struct PathSummary {
  double jumps = 0.0;
  double displacement = 0.0;
  bool absorbed = false;
};

Outcome cmd_simulate(Context& ctx) {
  const auto C = load_field(ctx);
  const Node s = section(ctx, "simulate");
  s.only({"x0", "t_max", "paths", "lambda", "epsilon", "event_log", "exit", "gamma_tilde"});
  const auto& lat = C.lattice();
  const Vec x0v = s.point("x0", C.dim(), Vec{});
  const GridPoint x0 = grid_point(lat, x0v, "/simulate/x0");
  const double t_max = s.positive("t_max", 1.0);
  const std::size_t paths = s.count("paths", 1000);
  check_cap(paths, ctx.caps.max_paths, "simulate: paths");
  SamplerOptions so;
  so.epsilon = s.positive("epsilon", so.epsilon);
  if (s.has("lambda")) so.lambda = s.positive("lambda");
  const bool log_events = s.boolean("event_log", false);
  const JumpSampler S(C, so);

  std::vector<PathSummary> summary(paths);
  std::vector<PathSample> samples(log_events ? paths : 0);
  parallel_for(paths, [&](std::size_t i) {
    PathSample p = sample_path(S, x0, t_max, ctx.seed, path_stream(kSimulateTag, i));
    auto& r = summary[i];
    r.jumps = static_cast<double>(p.events.size());
    r.displacement = lat.distance(x0, p.final_state());
    r.absorbed = p.absorbed;
    if (log_events) samples[i] = std::move(p);
  });

  CsvTable t({"statistic", "value", "ci_low", "ci_high"});
  auto mean_row = [&](const std::string& name, auto get) {
    std::vector<double> xs(paths);
    for (std::size_t i = 0; i < paths; ++i) xs[i] = get(summary[i]);
    const auto m = mean_and_se(xs);
    t.row().text(name).num(m.mean).num(m.mean - 1.96 * m.se).num(m.mean + 1.96 * m.se);
  };
  auto prop_row = [&](const std::string& name, double p, const Interval& ci) {
    t.row().text(name).num(p).num(ci.lo).num(ci.hi);
  };
  t.row().text("paths").num(static_cast<double>(paths)).empty().empty();
  t.row().text("event_rate_at_x0").num(S.event_rate(x0)).empty().empty();
  mean_row("jumps_per_path", [](const PathSummary& p) { return p.jumps; });
  mean_row("displacement_at_t_max", [](const PathSummary& p) { return p.displacement; });
  std::size_t absorbed = 0;
  for (const auto& p : summary) absorbed += p.absorbed ? 1 : 0;
  prop_row("absorbed_fraction", paths ? static_cast<double>(absorbed) / static_cast<double>(paths) : 0.0,
           wilson_interval(absorbed, paths));

  if (s.has("exit")) {
    const Node e = s.at("exit");
    e.only({"R", "gamma", "a", "paths", "split"});
    std::optional<BigJumpSplit> split;
    if (e.has("split")) {
      const Node sp = e.at("split");
      sp.only({"r", "s"});
      split = BigJumpSplit{sp.positive("r"), sp.positive("s")};
    }
    const std::size_t n = e.count("paths", std::max<std::size_t>(paths, 100));
    check_cap(n, ctx.caps.max_paths, "simulate: exit paths");
    if (n < 100) throw SpecError("/simulate/exit/paths", "at least 100 paths are required");
    const auto est = estimate_exit_prob(S, x0, e.positive("R"), e.positive("gamma"), e.positive("a", 1.0), n,
                                        ctx.seed, split);
    prop_row("exit_probability", est.p_hat, est.ci);
    if (est.big_jump_fraction) prop_row("big_jump_fraction", *est.big_jump_fraction, *est.big_jump_ci);
  }
  if (s.has("gamma_tilde")) {
    const Node g = s.at("gamma_tilde");
    g.only({"grid", "paths"});
    const std::size_t n = g.count("paths", std::max<std::size_t>(paths, 100));
    check_cap(n, ctx.caps.max_paths, "simulate: gamma_tilde paths");
    const auto est = estimate_gamma_tilde(S, x0, g.numbers("grid"), n, ctx.seed);
    for (std::size_t i = 0; i < est.grid.size(); ++i)
      prop_row("exit_unit_ball_before_" + format_number(est.grid[i]), est.p_hat[i], est.ci[i]);
    if (est.gamma)
      t.row().text("gamma_tilde").num(*est.gamma).empty().empty();
    else
      t.row().text("gamma_tilde").text("none").empty().empty();
  }
  ctx.out.csv("simulate.csv", t);

  if (log_events) {
    EventLog log(ctx.out.path("events.bin"), std::stoull(ctx.out.hash(), nullptr, 16), C.dim(), C.rho());
    for (const auto& p : samples) {
      log.start(p.start);
      for (const auto& ev : p.events) log.event(ev.time, ev.state);
    }
    log.close();
    ctx.out.record("events.bin");
  }
  return {};
}

// ---- heatkernel -----------------------------------------------------------

json diagnostics_json(const KernelDiagnostics& k) {
  json j;
  j["boundary"] = k.boundary;
  j["window_radius"] = k.window_radius;
  j["on_diagonal"] = json::array();
  for (const auto& r : k.on_diagonal) j["on_diagonal"].push_back({{"rho", r.rho}, {"t", r.t}, {"value", r.value}});
  j["on_diagonal_spread"] = k.on_diagonal_spread;
  j["off_diagonal"] = k.off_diagonal ? json(*k.off_diagonal) : json(nullptr);
  if (k.holder) {
    j["holder"] = {{"beta", k.holder->beta},
                   {"t0", k.holder->t0},
                   {"rho", k.holder->rho},
                   {"deltas", k.holder->deltas},
                   {"differences", k.holder->differences}};
  } else {
    j["holder"] = nullptr;
  }
  j["scaling"] = json::array();
  for (const auto& r : k.scaling)
    j["scaling"].push_back({{"rho", r.rho}, {"t", r.t}, {"violation", r.violation}});
  j["max_scaling_violation"] = k.max_scaling_violation;
  j["max_error_bound"] = k.max_error_bound;
  return j;
}

Outcome cmd_heatkernel(Context& ctx) {
  const auto field = load_field(ctx);
  const Node s = section(ctx, "heatkernel");
  s.only({"rho", "window", "times", "sources", "boundary", "lambda", "tolerance", "diagnostics"});
  ConductivityField C = field;
  if (s.has("rho")) {
    const double rho = s.positive("rho");
    if (rho != field.rho()) {
      if (field.rho() != 1.0) throw SpecError("/heatkernel/rho", "scaling needs a field given on Z^d (rho = 1)");
      C = scale_conductivity(field, rho);
    }
  }
  const auto& lat = C.lattice();
  const double R = s.positive("window", 4.0);
  const auto radius = static_cast<std::int64_t>(std::ceil(R * C.rho() - 1e-9));
  const Window w = Window::centered(C.dim(), radius);
  const auto times = s.numbers("times", std::vector<double>{1.0});
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!(times[i] > 0.0)) throw SpecError("/heatkernel/times/" + std::to_string(i), "times must be positive");
  std::vector<GridPoint> sources;
  if (s.has("sources")) {
    const auto pts = s.points("sources", C.dim());
    for (std::size_t i = 0; i < pts.size(); ++i)
      sources.push_back(grid_point(lat, pts[i], "/heatkernel/sources/" + std::to_string(i)));
  } else {
    sources.push_back(GridPoint{});
  }
  for (std::size_t i = 0; i < sources.size(); ++i)
    if (!w.contains(sources[i]))
      throw SpecError("/heatkernel/sources/" + std::to_string(i), "source lies outside the window");
  check_cap(w.size() * times.size() * sources.size(), ctx.caps.max_points, "heatkernel: output entries");

  GeneratorOptions go;
  go.boundary = Boundary::Killed;
  if (s.has("boundary")) {
    try {
      go.boundary = boundary_from_string(s.string("boundary"));
    } catch (const InvalidArgument& e) {
      throw SpecError("/heatkernel/boundary", e.what());
    }
  }
  if (s.has("lambda")) go.lambda = s.positive("lambda");
  go.max_nonzeros = std::max<std::size_t>(ctx.caps.memory_bytes / 16, 1);
  UniformizationOptions uo;
  uo.tolerance = s.positive("tolerance", uo.tolerance);

  const auto G = generator_matrix(C, w, go);
  const auto table = heat_kernel_table(G, times, sources, uo);

  auto header = std::vector<std::string>{"t"};
  for (auto& x : coord_names("x", C.dim())) header.push_back(x);
  for (auto& y : coord_names("y", C.dim())) header.push_back(y);
  header.push_back("p");
  header.push_back("error_bound");
  CsvTable t(header);
  json columns = json::array();
  for (const auto& col : table.columns) {
    json cj = {{"source", point_json(col.source, lat)}, {"mass", json::array()}, {"steps", col.steps},
               {"error_bound", col.error_bound}};
    for (std::size_t ti = 0; ti < col.times.size(); ++ti) {
      cj["mass"].push_back(column_mass(col, ti, lat));
      for (std::size_t yi = 0; yi < table.window.size(); ++yi) {
        auto& r = t.row();
        r.num(col.times[ti]);
        put_position(r, lat, col.source);
        put_position(r, lat, table.window[yi]);
        r.num(col.values[ti][yi]).num(col.error_bound[ti]);
      }
    }
    columns.push_back(cj);
  }
  ctx.out.csv("heatkernel.csv", t);

  json doc;
  doc["field"] = field_summary(C);
  doc["window"] = w.describe();
  doc["boundary"] = to_string(go.boundary);
  doc["max_rate"] = G.max_rate();
  doc["out_rate_error"] = G.out_rate_error;
  doc["columns"] = columns;
  if (s.has("diagnostics")) {
    const Node d = s.at("diagnostics");
    d.only({"rhos", "times", "window", "boundary", "diagonal_sources", "lambda", "holder_t0", "theta1",
            "tolerance"});
    if (field.rho() != 1.0) throw SpecError("/heatkernel/diagnostics", "diagnostics need a field on Z^d");
    DiagnosticsOptions o;
    o.window_radius = d.positive("window", o.window_radius);
    o.boundary = Boundary::FullRateKilled;
    if (d.has("boundary")) {
      try {
        o.boundary = boundary_from_string(d.string("boundary"));
      } catch (const InvalidArgument& e) {
        throw SpecError("/heatkernel/diagnostics/boundary", e.what());
      }
    }
    o.diagonal_sources = d.count("diagonal_sources", o.diagonal_sources);
    if (d.has("lambda")) o.lambda = d.positive("lambda");
    o.holder_t0 = d.positive("holder_t0", o.holder_t0);
    if (d.has("theta1")) o.theta1 = d.positive("theta1");
    o.uniformization.tolerance = d.positive("tolerance", uo.tolerance);
    const auto diag = kernel_diagnostics(field, d.numbers("rhos", std::vector<double>{1.0, 2.0, 4.0}),
                                         d.numbers("times", std::vector<double>{0.1, 0.3, 1.0}), o);
    doc["diagnostics"] = diagnostics_json(diag);
  }
  ctx.out.json("diagnostics.json", doc);
  return {};
}

// ---- forms ----------------------------------------------------------------

ContinuumOptions continuum_options(const Node& s) {
  ContinuumOptions o;
  if (!s.has("quadrature")) return o;
  const Node q = s.at("quadrature");
  q.only({"epsilons", "x_order", "x_panels", "r_order", "angle_order", "angle_split", "max_evaluations"});
  o.epsilons = q.numbers("epsilons", o.epsilons);
  if (o.epsilons.size() < 2) throw SpecError(q.path() + "/epsilons", "need at least two cutoffs");
  o.x_order = static_cast<int>(q.integer("x_order", o.x_order));
  o.x_panels = static_cast<int>(q.integer("x_panels", o.x_panels));
  o.r_order = static_cast<int>(q.integer("r_order", o.r_order));
  o.angle_order = static_cast<int>(q.integer("angle_order", o.angle_order));
  o.angle_split = static_cast<int>(q.integer("angle_split", o.angle_split));
  o.max_evaluations = q.positive("max_evaluations", o.max_evaluations);
  return o;
}

KernelSpec forms_kernel(const Node& s) {
  const int d = static_cast<int>(s.integer("d", 2));
  const double alpha = s.number("alpha", 1.0);
  if (!(alpha > 0.0 && alpha < 2.0)) throw SpecError(s.path() + "/alpha", "alpha must lie in (0, 2)");
  if (d < 1 || d > 2) throw SpecError(s.path() + "/d", "continuum forms support d = 1, 2");
  return kernel_from_json(s.at("kernel").raw(), d, alpha, s.path() + "/kernel");
}

const std::vector<std::string> kFormsHeader = {"function_id", "form_kind", "value", "error_bound", "ratio", "pass"};

std::vector<GridFunction> grid_corpus(const Context& ctx, const Node& s, int d) {
  const Node c = s.at("corpus");
  c.only({"count", "seed", "radius"});
  const std::size_t count = c.count("count", 10);
  const auto radius = c.integer("radius", 8);
  if (radius < 0) throw SpecError(c.path() + "/radius", "radius must be nonnegative");
  const auto seed = static_cast<std::uint64_t>(c.integer("seed", static_cast<std::int64_t>(ctx.seed)));
  const Window w = Window::centered(d, radius);
  check_cap(count * w.size(), ctx.caps.max_points, "forms: corpus values");
  std::vector<GridFunction> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = random_grid_function(w, seed, i);
  return out;
}

Outcome forms_discrete(Context& ctx, const Node& s) {
  const auto C = load_field(ctx);
  const auto corpus = grid_corpus(ctx, s, C.dim());
  std::optional<double> lambda;
  if (s.has("lambda")) lambda = s.positive("lambda");
  const auto ref = alpha_reference_field(C.dim(), C.alpha(), C.rho());
  std::vector<FormEvaluation> ef(corpus.size()), ea(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    ef[i] = discrete_form(C, corpus[i], lambda);
    ea[i] = discrete_form(ref, corpus[i], lambda);
  });
  CsvTable t(kFormsHeader);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const double ratio = ef[i].value / ea[i].value;
    t.row().integer(static_cast<std::int64_t>(i)).text(to_string(ef[i].kind)).num(ef[i].value)
        .num(ef[i].error_bound).num(ratio).flag(true);
    t.row().integer(static_cast<std::int64_t>(i)).text(to_string(ea[i].kind) + "_alpha").num(ea[i].value)
        .num(ea[i].error_bound).num(ratio).flag(true);
  }
  ctx.out.csv("forms.csv", t);
  return {};
}

Outcome forms_compare(Context& ctx, const Node& s) {
  const auto C = load_field(ctx);
  const auto corpus = grid_corpus(ctx, s, C.dim());
  const double lambda = s.positive("lambda", 4.0);
  const auto radius = s.integer("atlas_radius", 12);
  const Window aw = Window::centered(C.dim(), radius);
  check_cap(aw.size() * aw.size(), ctx.caps.max_points, "forms: atlas pairs");
  ChainRouter router;
  if (s.has("cone_gamma")) {
    const double kappa2 = s.has("kappa2") ? s.positive("kappa2")
                          : C.meta().kappa2 ? *C.meta().kappa2
                                            : throw SpecError("/forms/kappa2", "cone routing needs kappa2");
    router = cone_router(C, s.positive("cone_gamma"), kappa2);
  } else {
    ChainSearch cs;
    cs.N0 = static_cast<int>(s.integer("N0", C.meta().N0.value_or(2)));
    cs.kappa2 = s.number("kappa2", C.meta().kappa2.value_or(0.0));
    cs.node_cap = ctx.caps.max_nodes;
    router = search_router(C, cs);
  }
  const auto atlas = build_chain_atlas(C, aw, router);
  if (atlas.missing) {
    json doc = {{"atlas_window", aw.describe()},
                {"missing", {point_json(atlas.missing->first, C.lattice()),
                             point_json(atlas.missing->second, C.lattice())}}};
    ctx.out.json("comparison.json", doc);
    ctx.out.csv("forms.csv", CsvTable(kFormsHeader));
    return {false};
  }
  const auto rep = form_comparison(C, atlas, aw, corpus, lambda);
  CsvTable t(kFormsHeader);
  json gaps = json::array();
  for (const auto& r : rep.rows) {
    const auto id = static_cast<std::int64_t>(r.id);
    t.row().integer(id).text("discrete_truncated_alpha").num(r.e_alpha).num(0.0).num(r.ratio).flag(r.pass);
    t.row().integer(id).text("discrete_truncated").num(r.e_field).num(0.0).num(r.ratio).flag(r.pass);
    if (r.gap)
      gaps.push_back({{"id", r.id},
                      {"pair", {point_json(r.gap->first, C.lattice()), point_json(r.gap->second, C.lattice())}}});
  }
  ctx.out.csv("forms.csv", t);
  ctx.out.json("comparison.json", {{"atlas_window", aw.describe()},
                                   {"N0", rep.N0},
                                   {"kappa2", rep.kappa2},
                                   {"Theta2", rep.theta2},
                                   {"lambda", rep.lambda},
                                   {"bound", rep.bound},
                                   {"max_ratio", rep.max_ratio},
                                   {"violations", rep.violations},
                                   {"gaps", gaps},
                                   {"pass", rep.pass()}});
  return {rep.pass()};
}

Outcome forms_continuum(Context& ctx, const Node& s) {
  const auto k = forms_kernel(s);
  const Node c = s.at("corpus");
  c.only({"count", "seed"});
  const auto corpus = smooth_corpus(k.d, c.count("count", 10),
                                    static_cast<std::uint64_t>(c.integer("seed", static_cast<std::int64_t>(ctx.seed))));
  const auto opt = continuum_options(s);
  std::optional<double> lower, upper;
  double tol = 0.0;
  if (s.has("bounds")) {
    const Node b = s.at("bounds");
    b.only({"lower", "upper", "tolerance"});
    lower = b.number("lower");
    upper = b.has("upper") ? b.number("upper") : k.lambda1 ? *k.lambda1 : throw SpecError(b.path() + "/upper", "required field missing");
    tol = b.number("tolerance", 0.0);
  }
  const auto iso = isotropic_kernel(k.d, k.alpha, 1.0);
  std::vector<std::vector<FormEvaluation>> ev(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) { ev[i] = continuum_forms({k, iso}, corpus[i], opt); });
  CsvTable t(kFormsHeader);
  bool all = true;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const double ratio = ev[i][0].value / ev[i][1].value;
    std::optional<bool> pass;
    if (lower) pass = ratio >= *lower - tol && ratio <= *upper + tol;
    all = all && pass.value_or(true);
    for (int j = 0; j < 2; ++j) {
      auto& r = t.row();
      r.text(corpus[i].name).text(to_string(ev[i][j].kind) + (j ? "_alpha" : "")).num(ev[i][j].value)
          .num(ev[i][j].error_bound).num(ratio);
      if (pass)
        r.flag(*pass);
      else
        r.empty();
    }
  }
  ctx.out.csv("forms.csv", t);
  return {all};
}

Outcome forms_cube_chain(Context& ctx, const Node& s) {
  const auto k = forms_kernel(s);
  CubeChainOptions o;
  if (s.has("cube")) {
    const Node c = s.at("cube");
    c.only({"n", "radius", "margin", "epsilons", "M0", "Lambda2", "points_per_axis"});
    o.n = c.positive("n", o.n);
    o.radius = c.integer("radius", o.radius);
    o.margin = c.integer("margin", o.margin);
    o.epsilons = c.numbers("epsilons", o.epsilons);
    o.M0 = static_cast<int>(c.integer("M0", o.M0));
    o.Lambda2 = c.positive("Lambda2", o.Lambda2);
    o.points_per_axis = static_cast<int>(c.integer("points_per_axis", o.points_per_axis));
  }
  const auto w = Window::centered(k.d, o.radius);
  check_cap(w.size() * w.size(), ctx.caps.max_points, "forms: cube pairs");
  const auto rep = cube_chain_check(k, o);
  const ScaledLattice lat(k.d, o.n);
  CsvTable t(kFormsHeader);
  auto name = [&](const GridPoint& p) {
    std::string s0;
    for (int i = 0; i < k.d; ++i) s0 += (i ? " " : "") + std::to_string(p[i]);
    return s0;
  };
  for (const auto& c : rep.certificates) {
    double ratio = c.edge_ratio.empty() ? 0.0 : c.edge_ratio.front();
    for (const double r : c.edge_ratio) ratio = std::min(ratio, r);
    t.row().text(name(c.from) + "->" + name(c.to)).text("cube_chain").integer(c.length())
        .num(rep.quadrature_error).num(ratio).flag(ratio >= o.Lambda2);
  }
  ctx.out.csv("forms.csv", t);
  json doc = {{"kernel", k.name},
              {"pairs", rep.pairs},
              {"found", rep.found()},
              {"max_length", rep.max_length},
              {"multiplicity", rep.multiplicity},
              {"certified_M0", rep.certified_M0},
              {"certified_Lambda2", rep.certified_Lambda2},
              {"quadrature_error", rep.quadrature_error},
              {"lower_constant", rep.found() ? json(rep.lower_constant()) : json(nullptr)}};
  if (rep.missing) doc["missing"] = {point_json(rep.missing->first, lat), point_json(rep.missing->second, lat)};
  ctx.out.json("cube_chain.json", doc);
  return {rep.found()};
}

Outcome cmd_forms(Context& ctx) {
  const Node s = section(ctx, "forms");
  s.only({"mode", "lambda", "corpus", "atlas_radius", "cone_gamma", "kappa2", "N0", "d", "alpha", "kernel",
          "quadrature", "bounds", "cube"});
  const auto mode = s.string("mode", "discrete");
  if (mode == "discrete") return forms_discrete(ctx, s);
  if (mode == "compare") return forms_compare(ctx, s);
  if (mode == "continuum") return forms_continuum(ctx, s);
  if (mode == "cube-chain") return forms_cube_chain(ctx, s);
  throw SpecError("/forms/mode", "unknown mode '" + mode + "' (discrete, compare, continuum, cube-chain)");
}

// ---- clt ------------------------------------------------------------------

FieldFamily field_family(const Context& ctx) {
  const json spec = ctx.root.at("field").raw();
  const std::string base_dir = ctx.base_dir;
  if (spec.value("family", "") == "kernel_cells") {
    return [spec, base_dir](double n) {
      json s = spec;
      s["n"] = n;
      return field_from_json(s, "/field", base_dir);
    };
  }
  const auto base = field_from_json(spec, "/field", base_dir);
  if (base.rho() != 1.0) throw SpecError("/field/rho", "the scaled family needs a field given on Z^d (rho = 1)");
  return [base](double n) { return scale_conductivity(base, n); };
}

std::function<double(std::span<const double>)> limit_symbol(const Context& ctx, const Node& s) {
  if (s.has("symbol")) {
    const Node sy = s.at("symbol");
    sy.only({"type", "scale", "gamma", "d", "alpha"});
    const auto type = sy.string("type");
    const double alpha = sy.number("alpha", ctx.root.at("field").number("alpha", 1.0));
    if (type == "isotropic")
      return isotropic_symbol(static_cast<int>(sy.integer("d", ctx.root.at("field").integer("d", 1))), alpha,
                              sy.positive("scale", 1.0));
    if (type == "cone") return cone_symbol(sy.positive("gamma", 1.0), alpha, sy.positive("scale", 1.0));
    throw SpecError(sy.path() + "/type", "unknown symbol type '" + type + "'");
  }
  const auto base = load_field(ctx);
  if (base.family() == "isotropic_stable" && base.rho() == 1.0) {
    // The scaled isotropic family converges to the stable law of its own constant.
    GridPoint e1{};
    e1.k[0] = 1;
    return isotropic_symbol(base.dim(), base.alpha(), base.evaluate(GridPoint{}, e1));
  }
  return nullptr;
}

Outcome cmd_clt(Context& ctx) {
  const Node s = section(ctx, "clt");
  s.only({"n_list", "t", "paths", "reference", "x0", "xi_max", "xi_points", "xi_angles", "symbol", "tightness"});
  const auto family = field_family(ctx);
  const int d = static_cast<int>(ctx.root.at("field").integer("d", 1));
  const auto n_list = s.numbers("n_list", std::vector<double>{2, 4, 8, 16});
  for (std::size_t i = 0; i < n_list.size(); ++i)
    if (!(n_list[i] > 0.0)) throw SpecError("/clt/n_list/" + std::to_string(i), "n must be positive");
  CltOptions o;
  o.t = s.positive("t", 1.0);
  o.x0 = s.point("x0", d, Vec{});
  o.paths = s.count("paths", 10'000);
  check_cap(o.paths * n_list.size(), ctx.caps.max_paths, "clt: paths");
  o.seed = ctx.seed;
  o.xi_max = s.positive("xi_max", o.xi_max);
  o.xi_points = static_cast<int>(s.integer("xi_points", o.xi_points));
  o.xi_angles = static_cast<int>(s.integer("xi_angles", o.xi_angles));
  try {
    o.reference = reference_from_string(s.string("reference", "cauchy_standard"));
  } catch (const InvalidArgument& e) {
    throw SpecError("/clt/reference", e.what());
  }
  o.symbol = limit_symbol(ctx, s);
  if (o.reference == Reference::AlphaStableCF && !o.symbol)
    throw SpecError("/clt/symbol", "alpha_stable_cf needs the symbol of the limit");

  const auto rep = clt_diagnostic(family, n_list, o);
  CsvTable t({"n", "samples", "ks", "ks_ci", "cf_dist", "cf_ci"});
  json rows = json::array(), secs = json::array();
  for (const auto& r : rep.rows) {
    auto& row = t.row().num(r.n).integer(static_cast<std::int64_t>(r.samples));
    if (r.ks)
      row.num(*r.ks).num(r.ks_halfwidth);
    else
      row.empty().empty();
    row.num(r.cf_distance).num(r.cf_halfwidth);
    rows.push_back({{"n", r.n},
                    {"samples", r.samples},
                    {"ks", r.ks ? json(*r.ks) : json(nullptr)},
                    {"ks_halfwidth", r.ks_halfwidth},
                    {"cf_distance", r.cf_distance},
                    {"cf_halfwidth", r.cf_halfwidth}});
    secs.push_back({{"n", r.n}, {"seconds", r.seconds}});
  }
  ctx.timings["clt_rows"] = secs;
  ctx.out.csv("clt.csv", t);
  json doc = {{"reference", rep.reference},
              {"t", rep.t},
              {"rows", rows},
              {"ks_decreasing", rep.ks_decreasing ? json(*rep.ks_decreasing) : json(nullptr)},
              {"cf_decreasing", rep.cf_decreasing},
              {"verdict", rep.verdict}};
  bool pass = rep.ks_decreasing.value_or(rep.cf_decreasing);

  if (s.has("tightness")) {
    const Node tn = s.at("tightness");
    tn.only({"n_list", "t0", "exit_radius", "etas", "deltas", "paths", "bound"});
    TightnessOptions to;
    to.x0 = o.x0;
    to.seed = ctx.seed;
    to.t0 = tn.positive("t0", to.t0);
    to.exit_radius = tn.positive("exit_radius", to.exit_radius);
    to.etas = tn.numbers("etas", to.etas);
    to.deltas = tn.numbers("deltas", to.deltas);
    to.paths = tn.count("paths", o.paths);
    to.bound = tn.positive("bound", to.bound);
    const auto tl = tn.numbers("n_list", n_list);
    check_cap(to.paths * tl.size(), ctx.caps.max_paths, "clt: tightness paths");
    const auto tr = tightness_diagnostic(family, tl, to);
    CsvTable tt({"n", "eta", "delta", "p_hat", "ci_low", "ci_high", "p_sup", "ci_sup_low", "ci_sup_high"});
    for (const auto& r : tr.rows)
      tt.row().num(r.n).num(r.eta).num(r.delta).num(r.p_hat).num(r.ci.lo).num(r.ci.hi).num(r.p_sup)
          .num(r.ci_sup.lo).num(r.ci_sup.hi);
    ctx.out.csv("tightness.csv", tt);
    json ef = json::array();
    for (const auto& [n, f] : tr.exit_fraction) ef.push_back({{"n", n}, {"exit_fraction", f}});
    doc["tightness"] = {{"exit_fraction", ef},
                        {"max_at_largest_n", tr.max_at_largest_n},
                        {"bound", to.bound},
                        {"pass", tr.pass}};
    pass = pass && tr.pass;
  }
  ctx.out.json("clt.json", doc);
  return {pass};
}

std::string compiler_id() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

}  // namespace

json canonical_config(const json& config) {
  json c = config;
  if (c.is_object()) {
    c.erase("output_dir");
    c.erase("threads");
  }
  return c;
}

int run(const RunRequest& req) {
  const auto t0 = Clock::now();
  if (!req.config.is_object()) throw SpecError("/", "config must be a JSON object");
  const Node root(req.config, "");
  root.only({"field", "seed", "output_dir", "threads", "caps", "build", "validate", "simulate", "heatkernel",
             "forms", "clt"});
  const json canon = canonical_config(req.config);
  const std::string hash = config_hash(canon);
  const auto seed = static_cast<std::uint64_t>(root.integer("seed", 1));
  const Caps caps = caps_from(req.config);
  const bool needs_field = !(req.command == "forms" && req.config.contains("forms") &&
                             req.config["forms"].is_object() &&
                             (req.config["forms"].value("mode", "") == "continuum" ||
                              req.config["forms"].value("mode", "") == "cube-chain"));
  if (needs_field) (void)root.at("field");

  ArtifactWriter out(req.output_dir, hash);
  out.text("config.json", canon.dump(2) + "\n");
  Context ctx{req.config, root, caps, req.base_dir.string(), seed, out};
  Outcome outcome;
  if (!req.manifest_only) {
    if (req.command == "build") outcome = cmd_build(ctx);
    else if (req.command == "validate") outcome = cmd_validate(ctx);
    else if (req.command == "simulate") outcome = cmd_simulate(ctx);
    else if (req.command == "heatkernel") outcome = cmd_heatkernel(ctx);
    else if (req.command == "forms") outcome = cmd_forms(ctx);
    else if (req.command == "clt") outcome = cmd_clt(ctx);
    else throw SpecError("/", "unknown subcommand '" + req.command + "'");
  } else if (needs_field) {
    (void)load_field(ctx);
  }

  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
  json manifest = {{"command", req.command},
                   {"config_hash", hash},
                   {"jumplab_version", JUMPLAB_VERSION},
                   {"compiler", compiler_id()},
                   {"seed", seed},
                   {"threads", thread_count()},
                   {"wall_seconds", wall},
                   {"dry_run", req.manifest_only},
                   {"checks_pass", outcome.pass},
                   {"outputs", out.written()},
                   {"timings", ctx.timings}};
  std::ofstream mf(out.path("manifest.json"), std::ios::binary | std::ios::trunc);
  if (!(mf << manifest.dump(2) << "\n")) throw IoError("cannot write " + out.path("manifest.json").string());
  return outcome.pass ? kOk : kCheckFailed;
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ResourceLimit& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kResource;
  } catch (const SpecError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    return kConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::bad_alloc&) {
    std::cerr << "resource limit: out of memory\n";
    return kResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace jumplab::cli
