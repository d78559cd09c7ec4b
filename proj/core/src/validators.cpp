#include "jumplab/validators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "jumplab/errors.hpp"
#include "jumplab/parallel.hpp"

namespace jumplab {

using nlohmann::json;

namespace {

constexpr double kRelSlack = 1e-12;

struct EdgeHash {
  std::size_t operator()(const std::pair<GridPoint, GridPoint>& e) const noexcept {
    return GridPointHash{}(e.first) * 0x9E3779B97F4A7C15ULL ^ GridPointHash{}(e.second);
  }
};

double pair_power(const ConductivityField& C, const GridPoint& x, const GridPoint& y) {
  return std::pow(C.lattice().distance(x, y), C.dim() + C.alpha());
}

json edge_json(const std::pair<GridPoint, GridPoint>& e, const ScaledLattice& lat) {
  return json{{"from", point_json(e.first, lat)}, {"to", point_json(e.second, lat)}};
}

}  // namespace

json point_json(const GridPoint& p, const ScaledLattice& lat) {
  json a = json::array();
  const auto v = lat.position(p);
  for (int i = 0; i < lat.dim(); ++i) a.push_back(v[i]);
  return a;
}

bool ValidationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckEntry& c) { return c.pass; });
}

const CheckEntry* ValidationReport::find(const std::string& id) const {
  for (const auto& c : checks)
    if (c.id == id) return &c;
  return nullptr;
}

json ValidationReport::to_json() const {
  json j;
  j["window"] = window;
  j["scope_note"] = scope_note;
  j["all_pass"] = all_pass();
  j["checks"] = json::array();
  for (const auto& c : checks)
    j["checks"].push_back(json{{"id", c.id}, {"pass", c.pass}, {"witness", c.witness}, {"constants", c.constants}});
  return j;
}

ValidationReport check_bounds_A1_A2(const ConductivityField& C, const Window& window,
                                    std::optional<double> kappa1) {
  const auto pts = window.points();
  const std::size_t n = pts.size();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  // Per row: first offending column for symmetry / diagonal / bound.
  std::vector<std::size_t> sym(n, kNone), diag(n, kNone), bound(n, kNone);
  const double exponent = C.dim() + C.alpha();
  parallel_for(n, [&](std::size_t i) {
    const auto& x = pts[i];
    if (C.evaluate(x, x) != 0.0) diag[i] = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double cxy = C.evaluate(x, pts[j]);
      if (sym[i] == kNone && j > i) {
        const double cyx = C.evaluate(pts[j], x);
        if (std::abs(cxy - cyx) > kRelSlack * std::max(std::abs(cxy), std::abs(cyx))) sym[i] = j;
      }
      if (kappa1 && bound[i] == kNone) {
        const double b = *kappa1 * std::pow(C.lattice().distance(x, pts[j]), -exponent);
        if (cxy > b * (1.0 + kRelSlack)) bound[i] = j;
      }
      if (sym[i] != kNone && (!kappa1 || bound[i] != kNone)) break;
    }
  });
  ValidationReport rep;
  rep.window = window.describe();
  const auto& lat = C.lattice();
  auto first = [&](const std::vector<std::size_t>& v) -> std::optional<std::pair<std::size_t, std::size_t>> {
    for (std::size_t i = 0; i < n; ++i)
      if (v[i] != kNone) return std::make_pair(i, v[i]);
    return std::nullopt;
  };
  CheckEntry a1{"A1", true, json::object(), json::object()};
  if (auto w = first(diag)) {
    a1.pass = false;
    a1.witness = json{{"kind", "nonzero diagonal"},
                      {"x", point_json(pts[w->first], lat)},
                      {"C_xx", C.evaluate(pts[w->first], pts[w->first])}};
  } else if (auto s = first(sym)) {
    a1.pass = false;
    const auto& x = pts[s->first];
    const auto& y = pts[s->second];
    a1.witness = json{{"kind", "asymmetric pair"},
                      {"x", point_json(x, lat)},
                      {"y", point_json(y, lat)},
                      {"C_xy", C.evaluate(x, y)},
                      {"C_yx", C.evaluate(y, x)}};
  } else {
    a1.witness = json{{"pairs_checked", n * (n - 1) / 2}};
  }
  rep.checks.push_back(a1);
  if (kappa1) {
    CheckEntry a2{"A2", true, json::object(), json{{"kappa1", *kappa1}}};
    if (auto w = first(bound)) {
      const auto& x = pts[w->first];
      const auto& y = pts[w->second];
      a2.pass = false;
      a2.witness = json{{"x", point_json(x, lat)},
                        {"y", point_json(y, lat)},
                        {"C_xy", C.evaluate(x, y)},
                        {"bound", *kappa1 * std::pow(lat.distance(x, y), -exponent)}};
    } else {
      a2.witness = json{{"pairs_checked", n * (n - 1)}};
    }
    rep.checks.push_back(a2);
  }
  return rep;
}

double ChainCertificate::min_edge_bound() const {
  double m = std::numeric_limits<double>::infinity();
  for (double e : edge_bounds) m = std::min(m, e);
  return m;
}

std::optional<ChainCertificate> certify_chain(const ConductivityField& C, std::vector<GridPoint> points,
                                              double kappa2) {
  if (points.size() < 2) throw InvalidArgument("a chain needs at least two points");
  ChainCertificate cert;
  cert.x = points.front();
  cert.y = points.back();
  if (cert.x == cert.y) throw InvalidArgument("chain endpoints must differ");
  const double dxy = C.lattice().distance(cert.x, cert.y);
  const double scale = pair_power(C, cert.x, cert.y);
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double b = C.evaluate(points[i], points[i + 1]) * scale;
    if (!(b >= kappa2 * (1.0 - kRelSlack)) || b == 0.0) return std::nullopt;
    cert.edge_bounds.push_back(b);
    cert.theta2 = std::max(cert.theta2, C.lattice().distance(points[i], points[i + 1]) / dxy);
  }
  cert.points = std::move(points);
  return cert;
}

std::optional<ChainCertificate> find_chain_A3(const ConductivityField& C, const GridPoint& x,
                                              const GridPoint& y, const ChainSearch& search) {
  if (x == y) throw InvalidArgument("find_chain_A3 requires x != y");
  if (search.N0 < 1) throw InvalidArgument("N0 must be >= 1");
  const int d = C.dim();
  const double alpha = C.alpha();
  double factor;
  if (search.radius_factor) {
    factor = *search.radius_factor;
  } else {
    if (!C.meta().kappa1 || !(search.kappa2 > 0.0))
      throw ConfigError("default chain search radius needs kappa1 and a positive kappa2");
    factor = std::pow(*C.meta().kappa1 / search.kappa2, 1.0 / (d + alpha)) * search.N0;
  }
  const auto& lat = C.lattice();
  const double dxy = lat.distance(x, y);
  const double thr = search.kappa2 * std::pow(dxy, -(d + alpha)) * (1.0 - kRelSlack);
  auto ok = [&](const GridPoint& u, const GridPoint& v) {
    const double c = C.evaluate(u, v);
    return c > 0.0 && c >= thr;
  };
  const auto cand = ball_points(x, factor * dxy, lat, search.node_cap);
  const std::size_t m = cand.size();
  std::vector<int> parent(m, -1);
  std::vector<char> seen(m, 0);
  const auto xi = static_cast<int>(std::lower_bound(cand.begin(), cand.end(), x) - cand.begin());
  seen[xi] = 1;
  std::vector<int> frontier{xi};
  auto build = [&](int last) {
    std::vector<GridPoint> pts{y};
    for (int v = last; v != -1; v = parent[v]) pts.push_back(cand[v]);
    std::reverse(pts.begin(), pts.end());
    return certify_chain(C, std::move(pts), search.kappa2);
  };
  for (int depth = 1; depth <= search.N0; ++depth) {
    for (int u : frontier)
      if (ok(cand[u], y)) return build(u);
    if (depth == search.N0) break;
    std::vector<int> next;
    for (int u : frontier) {
      for (std::size_t v = 0; v < m; ++v) {
        if (seen[v] || cand[v] == y) continue;
        if (!ok(cand[u], cand[v])) continue;
        seen[v] = 1;
        parent[v] = u;
        next.push_back(static_cast<int>(v));
      }
    }
    if (next.empty()) break;
    frontier = std::move(next);
  }
  return std::nullopt;
}

std::vector<GridPoint> example_cone_chain(const GridPoint& x, const GridPoint& y, double gamma) {
  return {x, cone_chain_midpoint(x, y, gamma), y};
}

MultiplicityResult check_multiplicity(const std::vector<ChainCertificate>& certificates, int N0) {
  std::unordered_map<std::pair<GridPoint, GridPoint>, int, EdgeHash> count;
  for (const auto& c : certificates) {
    std::vector<std::pair<GridPoint, GridPoint>> edges;
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i) edges.emplace_back(c.points[i], c.points[i + 1]);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (const auto& e : edges) ++count[e];
  }
  MultiplicityResult r;
  for (const auto& [e, k] : count) {
    if (k > r.max_count || (k == r.max_count && r.worst_edge && e < *r.worst_edge)) {
      r.max_count = k;
      r.worst_edge = e;
    }
  }
  r.pass = r.max_count <= N0;
  return r;
}

ChainAtlas build_chain_atlas(const ConductivityField& /*C*/, const Window& window, const ChainRouter& router,
                             bool keep_certificates) {
  const auto pts = window.points();
  const std::size_t n = pts.size();
  struct Row {
    std::optional<std::size_t> missing;
    int max_length = 0;
    double theta2 = 0.0;
    double min_edge = std::numeric_limits<double>::infinity();
    std::vector<std::pair<GridPoint, GridPoint>> edges;
    std::vector<ChainCertificate> certs;
  };
  std::vector<Row> rows(n);
  std::atomic<std::size_t> first_missing{std::numeric_limits<std::size_t>::max()};
  parallel_for(n, [&](std::size_t i) {
    if (i > first_missing.load()) return;
    Row& row = rows[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      auto cert = router(pts[i], pts[j]);
      if (!cert) {
        row.missing = j;
        std::size_t cur = first_missing.load();
        while (i < cur && !first_missing.compare_exchange_weak(cur, i)) {}
        return;
      }
      row.max_length = std::max(row.max_length, cert->length());
      row.theta2 = std::max(row.theta2, cert->theta2);
      row.min_edge = std::min(row.min_edge, cert->min_edge_bound());
      std::vector<std::pair<GridPoint, GridPoint>> e;
      for (std::size_t k = 0; k + 1 < cert->points.size(); ++k) e.emplace_back(cert->points[k], cert->points[k + 1]);
      std::sort(e.begin(), e.end());
      e.erase(std::unique(e.begin(), e.end()), e.end());
      row.edges.insert(row.edges.end(), e.begin(), e.end());
      if (keep_certificates) row.certs.push_back(std::move(*cert));
    }
  });
  ChainAtlas atlas;
  atlas.pairs = n * (n - 1);
  atlas.min_edge_bound = std::numeric_limits<double>::infinity();
  std::unordered_map<std::pair<GridPoint, GridPoint>, int, EdgeHash> count;
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = rows[i];
    if (row.missing) {
      atlas.missing = std::make_pair(pts[i], pts[*row.missing]);
      break;
    }
    atlas.max_length = std::max(atlas.max_length, row.max_length);
    atlas.theta2 = std::max(atlas.theta2, row.theta2);
    atlas.min_edge_bound = std::min(atlas.min_edge_bound, row.min_edge);
    for (const auto& e : row.edges) ++count[e];
    if (keep_certificates)
      for (auto& c : row.certs) atlas.certificates.push_back(std::move(c));
  }
  for (const auto& [e, k] : count) {
    if (k > atlas.multiplicity.max_count ||
        (k == atlas.multiplicity.max_count && atlas.multiplicity.worst_edge && e < *atlas.multiplicity.worst_edge)) {
      atlas.multiplicity.max_count = k;
      atlas.multiplicity.worst_edge = e;
    }
  }
  return atlas;
}

ChainRouter cone_router(const ConductivityField& C, double gamma, double kappa2) {
  return [&C, gamma, kappa2](const GridPoint& x, const GridPoint& y) {
    return certify_chain(C, example_cone_chain(x, y, gamma), kappa2);
  };
}

ChainRouter search_router(const ConductivityField& C, const ChainSearch& search) {
  return [&C, search](const GridPoint& x, const GridPoint& y) { return find_chain_A3(C, x, y, search); };
}

DensityResult density_check_A4(const ConductivityField& C, const GridPoint& x, double r, double kappa3) {
  const auto& lat = C.lattice();
  if (r < lat.spacing()) throw InvalidArgument("density radius must be at least the grid spacing");
  const auto pts = ball_points(x, r, lat);
  DensityResult res;
  res.total = pts.size();
  const double e = C.dim() + C.alpha();
  for (const auto& y : pts) {
    if (y == x) continue;
    const double c = C.evaluate(x, y);
    if (c > 0.0 && c >= kappa3 * std::pow(lat.distance(x, y), -e) * (1.0 - kRelSlack)) ++res.good;
  }
  res.fraction = static_cast<double>(res.good) / static_cast<double>(res.total);
  return res;
}

NecessaryConditionConstants necessary_condition_constants(double kappa1, double kappa2, int N0, int d, double alpha) {
  if (!(kappa1 > 0.0 && kappa2 > 0.0) || N0 < 1) throw InvalidArgument("necessary-condition constants need kappa1, kappa2 > 0, N0 >= 1");
  NecessaryConditionConstants L;
  L.c1 = std::max(1.0, N0 * std::pow(kappa1 / kappa2, 1.0 / (d + alpha)));
  const ScaledLattice unit(d, 1.0);
  const double c1d = std::pow(L.c1, d);
  auto c2_at = [&](double r) {
    const double inner = static_cast<double>(ball_count(r / L.c1, unit));
    const double outer = static_cast<double>(ball_count(r, unit));
    // ceil(|B(r/c1)| / N0) >= c2 / (c1^d N0) |B(r)|
    return std::ceil(inner / N0) * c1d * N0 / outer;
  };
  L.Theta1 = std::max(1.0, std::pow(2.0 * c1d * N0, 1.0 / d));
  for (int it = 0; it < 3; ++it) {
    L.c2 = std::min(1.0, c2_at(L.Theta1));
    L.Theta1 = std::max(L.Theta1, std::pow(L.c2 / (2.0 * c1d * N0), -1.0 / d));
  }
  L.c3 = L.c2 / (4.0 * c1d * N0);
  L.gamma = L.c3;
  L.kappa3 = kappa2 * std::pow(L.c2 / (2.0 * N0), (d + alpha) / d);
  return L;
}

ValidationReport validate_field(const ConductivityField& C, const ValidateOptions& opt) {
  const auto kappa1 = opt.kappa1 ? opt.kappa1 : C.meta().kappa1;
  ValidationReport rep = check_bounds_A1_A2(C, opt.window, kappa1);
  const auto& lat = C.lattice();

  // (A3): kappa2 -> 0+ (plain positivity) when no constant is known.
  const double kappa2 = opt.kappa2 ? *opt.kappa2 : C.meta().kappa2.value_or(0.0);
  const int N0 = opt.N0 ? *opt.N0 : C.meta().N0.value_or(4);
  ChainAtlas atlas;
  json constants{{"kappa2", kappa2}, {"N0", N0}};
  if (opt.cone_gamma) {
    constants["routing"] = "explicit cone chain";
    constants["gamma"] = *opt.cone_gamma;
    atlas = build_chain_atlas(C, opt.window, cone_router(C, *opt.cone_gamma, kappa2));
  } else {
    ChainSearch s;
    s.N0 = N0;
    s.kappa2 = kappa2;
    s.node_cap = opt.node_cap;
    if (!kappa1 || !(kappa2 > 0.0)) s.radius_factor = 4.0 * N0;
    constants["routing"] = "breadth-first search";
    atlas = build_chain_atlas(C, opt.window, search_router(C, s));
  }
  CheckEntry a3{"A3", true, json::object(), constants};
  if (atlas.missing) {
    a3.pass = false;
    a3.witness = json{{"kind", "no chain"},
                      {"x", point_json(atlas.missing->first, lat)},
                      {"y", point_json(atlas.missing->second, lat)}};
  } else {
    a3.pass = atlas.max_length <= N0;
    a3.witness = json{{"pairs", atlas.pairs},
                      {"max_length", atlas.max_length},
                      {"certified_kappa2", atlas.min_edge_bound},
                      {"theta2", atlas.theta2},
                      {"certified_N0", atlas.certified_N0()}};
  }
  rep.checks.push_back(a3);
  if (!atlas.missing) {
    CheckEntry mult{"A3-multiplicity", atlas.multiplicity.max_count <= N0, json::object(), json{{"N0", N0}}};
    mult.witness["max_count"] = atlas.multiplicity.max_count;
    if (atlas.multiplicity.worst_edge) mult.witness["edge"] = edge_json(*atlas.multiplicity.worst_edge, lat);
    rep.checks.push_back(mult);
  }

  std::optional<double> kappa3 = opt.kappa3 ? opt.kappa3 : C.meta().kappa3;
  if (!kappa3 && kappa1 && kappa2 > 0.0)
    kappa3 = necessary_condition_constants(*kappa1, kappa2, N0, C.dim(), C.alpha()).kappa3;
  // Without any kappa3 the weakest threshold C > 0 is used, so a failure is conclusive.
  const bool lenient = !kappa3;
  if (lenient) kappa3 = std::numeric_limits<double>::min();
  if (!opt.density_radii.empty()) {
    CheckEntry a4{"A4", true, json::object(),
                  json{{"kappa3", lenient ? json("0+") : json(*kappa3)}, {"threshold", opt.density_threshold}}};
    json rows = json::array();
    for (double r : opt.density_radii) {
      const auto res = density_check_A4(C, GridPoint{}, r, *kappa3);
      rows.push_back(json{{"r", r}, {"fraction", res.fraction}, {"good", res.good}, {"total", res.total}});
      if (res.fraction < opt.density_threshold && a4.pass) {
        a4.pass = false;
        a4.witness["counterexample"] = json{{"x", point_json(GridPoint{}, lat)}, {"r", r}, {"fraction", res.fraction}};
      }
    }
    a4.witness["radii"] = rows;
    rep.checks.push_back(a4);
  }
  return rep;
}

}  // namespace jumplab
