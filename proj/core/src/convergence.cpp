#include "jumplab/convergence.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <complex>

#include "jumplab/chain.hpp"
#include "jumplab/errors.hpp"
#include "jumplab/parallel.hpp"
#include "jumplab/quadrature.hpp"

namespace jumplab {

namespace {

constexpr std::uint64_t kCltTag = 0x434c54;
constexpr std::uint64_t kTightTag = 0x54494748;

std::uint64_t scale_tag(std::uint64_t tag, double n) { return stream_key(tag, std::bit_cast<std::uint64_t>(n)); }

double dist(const Vec& a, const Vec& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

ExtensionFunction::ExtensionFunction(GridFunction base, ScaledLattice lattice)
    : base_(std::move(base)), lattice_(lattice) {}

void ExtensionFunction::corners(std::span<const double> x, double* vals, double* frac) const {
  const int d = lattice_.dim();
  if (static_cast<int>(x.size()) < d) throw InvalidArgument("query has too few coordinates");
  for (int i = 0; i < d; ++i)
    if (!std::isfinite(x[i])) throw InvalidArgument("query must be finite");
  const GridPoint a = round_to_grid(x.subspan(0, d), lattice_.rho());
  for (int i = 0; i < d; ++i) frac[i] = x[i] * lattice_.rho() - static_cast<double>(a.k[i]);
  for (int b = 0; b < (1 << d); ++b) {
    GridPoint v = a;
    for (int i = 0; i < d; ++i)
      if (b & (1 << i)) ++v.k[i];
    auto it = base_.find(v);
    vals[b] = it == base_.end() ? std::nan("") : it->second;
  }
}

double ExtensionFunction::value(std::span<const double> x) const {
  const int d = lattice_.dim();
  double vals[1 << kMaxDim], frac[kMaxDim];
  corners(x, vals, frac);
  double s = 0.0;
  for (int b = 0; b < (1 << d); ++b) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) w *= (b & (1 << i)) ? frac[i] : 1.0 - frac[i];
    if (w == 0.0) continue;
    if (std::isnan(vals[b])) throw DomainError("extension queried outside the defined region");
    s += w * vals[b];
  }
  return s;
}

Vec ExtensionFunction::gradient(std::span<const double> x) const {
  const int d = lattice_.dim();
  double vals[1 << kMaxDim], frac[kMaxDim];
  corners(x, vals, frac);
  for (int b = 0; b < (1 << d); ++b)
    if (std::isnan(vals[b])) throw DomainError("extension gradient queried outside the defined region");
  Vec g{};
  for (int i = 0; i < d; ++i) {
    double s = 0.0;
    for (int b = 0; b < (1 << d); ++b) {
      double w = (b & (1 << i)) ? 1.0 : -1.0;
      for (int j = 0; j < d; ++j)
        if (j != i) w *= (b & (1 << j)) ? frac[j] : 1.0 - frac[j];
      s += w * vals[b];
    }
    g[i] = s * lattice_.rho();
  }
  return g;
}

double ExtensionFunction::oscillation(std::span<const double> x) const {
  const int d = lattice_.dim();
  double vals[1 << kMaxDim], frac[kMaxDim];
  corners(x, vals, frac);
  double lo = vals[0], hi = vals[0];
  for (int b = 0; b < (1 << d); ++b) {
    if (std::isnan(vals[b])) throw DomainError("extension queried outside the defined region");
    lo = std::min(lo, vals[b]);
    hi = std::max(hi, vals[b]);
  }
  return hi - lo;
}

ExtensionFunction extend_to_continuum(const GridFunction& f, double n, int d) {
  return ExtensionFunction(f, ScaledLattice(d, n));
}

std::string to_string(Reference r) { return r == Reference::CauchyStandard ? "cauchy_standard" : "alpha_stable_cf"; }

Reference reference_from_string(const std::string& s) {
  if (s == "cauchy_standard") return Reference::CauchyStandard;
  if (s == "alpha_stable_cf") return Reference::AlphaStableCF;
  throw ConfigError("unknown reference '" + s + "'");
}

double stable_symbol_constant(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw InvalidArgument("alpha must lie in (0, 2)");
  return M_PI / (2.0 * std::tgamma(1.0 + alpha) * std::sin(M_PI * alpha / 2.0));
}

namespace {

// int over theta in arcs of |<xi, theta>|^alpha, arcs split at the kinks.
double angular_moment(const std::vector<std::pair<double, double>>& arcs, double x0, double x1, double alpha) {
  const auto& rule = gauss_legendre(32);
  const double phi = std::atan2(x1, x0);
  const double r = std::hypot(x0, x1);
  if (r == 0.0) return 0.0;
  double total = 0.0;
  for (auto [a, b] : arcs) {
    std::vector<double> cuts = {a, b};
    for (int k = -3; k <= 3; ++k) {
      const double z = phi + M_PI / 2 + k * M_PI;  // zeros of cos(theta - phi)
      if (z > a && z < b) cuts.push_back(z);
    }
    std::sort(cuts.begin(), cuts.end());
    // Each piece is halved and each half mapped by end + h u^3, which damps
    // the |s|^alpha behaviour at the zeros.
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double h = 0.5 * (cuts[c + 1] - cuts[c]);
      for (const auto& [end, dir] : {std::pair{cuts[c], 1.0}, std::pair{cuts[c + 1], -1.0}}) {
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
          const double u = 0.5 * (1.0 + rule.nodes[i]);
          const double t = end + dir * h * u * u * u;
          total += 0.5 * rule.weights[i] * 3.0 * h * u * u * std::pow(std::abs(r * std::cos(t - phi)), alpha);
        }
      }
    }
  }
  return total;
}

}  // namespace

std::function<double(std::span<const double>)> isotropic_symbol(int d, double alpha, double scale) {
  const double K = stable_symbol_constant(alpha) * scale;
  if (d == 1)
    return [K, alpha](std::span<const double> xi) { return 2.0 * K * std::pow(std::abs(xi[0]), alpha); };
  if (d == 2) {
    const std::vector<std::pair<double, double>> arcs = {{-M_PI, M_PI}};
    return [K, alpha, arcs](std::span<const double> xi) { return K * angular_moment(arcs, xi[0], xi[1], alpha); };
  }
  throw InvalidArgument("isotropic symbol supports d = 1, 2");
}

std::function<double(std::span<const double>)> cone_symbol(double gamma, double alpha, double scale) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  const double K = stable_symbol_constant(alpha) * scale;
  const double a = std::atan(gamma);
  const std::vector<std::pair<double, double>> arcs = {{-a, a}, {M_PI - a, M_PI + a}};
  return [K, alpha, arcs](std::span<const double> xi) { return K * angular_moment(arcs, xi[0], xi[1], alpha); };
}

std::vector<double> sample_marginal(const ConductivityField& C, const Vec& x0, double t, std::size_t paths,
                                    std::uint64_t seed, std::uint64_t tag) {
  const int d = C.dim();
  const JumpSampler S(C);
  const GridPoint start = round_to_grid(std::span<const double>(x0.data(), d), C.rho());
  std::vector<double> out(paths * static_cast<std::size_t>(d));
  parallel_for(paths, [&](std::size_t i) {
    RandomStream rng(seed, path_stream(tag, i));
    const GridPoint end = run_path(S, start, t, rng, nullptr);
    const Vec p = C.lattice().position(end);
    for (int a = 0; a < d; ++a) out[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] = p[a] - x0[a];
  });
  return out;
}

ConvergenceReport clt_diagnostic(const FieldFamily& family, const std::vector<double>& n_list,
                                 const CltOptions& opt) {
  if (n_list.empty()) throw ConfigError("clt needs at least one scale");
  if (!(opt.t > 0.0) || opt.paths == 0) throw ConfigError("clt needs t > 0 and paths > 0");
  ConvergenceReport rep;
  rep.reference = to_string(opt.reference);
  rep.t = opt.t;
  for (double n : n_list) {
    const auto start = std::chrono::steady_clock::now();
    const auto C = family(n);
    const int d = C.dim();
    std::function<double(std::span<const double>)> psi = opt.symbol;
    if (opt.reference == Reference::CauchyStandard) {
      if (d != 1 || C.alpha() != 1.0)
        throw ConfigError("the standard Cauchy reference needs d = 1 and alpha = 1");
      psi = [](std::span<const double> xi) { return std::abs(xi[0]); };
    } else if (!psi) {
      throw ConfigError("alpha_stable_cf reference needs a symbol");
    }
    const auto X = sample_marginal(C, opt.x0, opt.t, opt.paths, opt.seed, scale_tag(kCltTag, n));
    ConvergenceRow row;
    row.n = n;
    row.samples = opt.paths;
    if (opt.reference == Reference::CauchyStandard) {
      const double t = opt.t;
      row.ks = ks_distance(X, [t](double x) { return 0.5 + std::atan(x / t) / M_PI; });
      row.ks_halfwidth = dkw_halfwidth(opt.paths);
    }
    // Characteristic-function distance on a grid of |xi| <= xi_max.
    std::vector<std::array<double, kMaxDim>> grid;
    const int np = std::max(2, opt.xi_points);
    if (d == 1) {
      for (int j = 0; j < np; ++j) grid.push_back({opt.xi_max * j / (np - 1), 0.0, 0.0});
    } else {
      for (int j = 1; j < np; ++j)
        for (int a = 0; a < opt.xi_angles; ++a) {
          const double r = opt.xi_max * j / (np - 1), th = M_PI * a / opt.xi_angles;
          std::array<double, kMaxDim> xi{};
          xi[0] = r * std::cos(th);
          xi[1] = r * std::sin(th);
          grid.push_back(xi);
        }
    }
    std::vector<double> dists(grid.size());
    parallel_for(grid.size(), [&](std::size_t g) {
      const auto& xi = grid[g];
      double re = 0.0, im = 0.0;
      for (std::size_t i = 0; i < opt.paths; ++i) {
        double ph = 0.0;
        for (int a = 0; a < d; ++a) ph += xi[a] * X[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)];
        re += std::cos(ph);
        im += std::sin(ph);
      }
      re /= static_cast<double>(opt.paths);
      im /= static_cast<double>(opt.paths);
      const double target = std::exp(-opt.t * psi(std::span<const double>(xi.data(), d)));
      dists[g] = std::hypot(re - target, im);
    });
    row.cf_distance = *std::max_element(dists.begin(), dists.end());
    row.cf_halfwidth = 1.959963984540054 / std::sqrt(static_cast<double>(opt.paths));
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep.rows.push_back(row);
  }
  bool ks_dec = true, cf_dec = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto &a = rep.rows[i - 1], &b = rep.rows[i];
    if (b.ks && a.ks && *b.ks > *a.ks + b.ks_halfwidth) ks_dec = false;
    if (b.cf_distance > a.cf_distance + b.cf_halfwidth) cf_dec = false;
  }
  if (rep.rows.front().ks) rep.ks_decreasing = ks_dec;
  rep.cf_decreasing = cf_dec;
  rep.verdict = (rep.ks_decreasing.value_or(true) && cf_dec) ? "decreasing" : "not decreasing";
  return rep;
}

TightnessReport tightness_diagnostic(const FieldFamily& family, const std::vector<double>& n_list,
                                     const TightnessOptions& opt) {
  if (n_list.empty() || opt.etas.empty() || opt.deltas.empty()) throw ConfigError("tightness needs n, eta and delta lists");
  if (!(opt.t0 > 0.0) || opt.paths == 0 || !(opt.exit_radius > 0.0))
    throw ConfigError("tightness needs t0 > 0, paths > 0 and a positive exit radius");
  for (double dl : opt.deltas)
    if (!(dl >= 0.0)) throw ConfigError("delta values must be nonnegative");
  TightnessReport rep;
  const double dmax = *std::max_element(opt.deltas.begin(), opt.deltas.end());
  const std::size_t nd = opt.deltas.size();
  for (double n : n_list) {
    const auto C = family(n);
    const int d = C.dim();
    const auto& lat = C.lattice();
    const JumpSampler S(C);
    const GridPoint start = round_to_grid(std::span<const double>(opt.x0.data(), d), C.rho());
    // Per path: endpoint and sup displacement per delta, and whether sigma < t0.
    std::vector<double> endpoint(opt.paths * nd), sup(opt.paths * nd);
    std::vector<char> exited(opt.paths, 0);
    parallel_for(opt.paths, [&](std::size_t i) {
      RandomStream rng(opt.seed, path_stream(scale_tag(kTightTag, n), i));
      bool have_sigma = false;
      double sigma = 0.0;
      Vec ys{};
      std::vector<Vec> end(nd);
      std::vector<double> sp(nd, 0.0);
      auto set_sigma = [&](double s, const GridPoint& p) {
        have_sigma = true;
        sigma = s;
        ys = lat.position(p);
        for (auto& e : end) e = ys;
      };
      const GridPoint last = run_path(S, start, opt.t0 + dmax, rng,
                                      [&](double t, const GridPoint& from, const GridPoint& to) {
                                        if (!have_sigma) {
                                          if (t > opt.t0) {
                                            set_sigma(opt.t0, from);
                                          } else {
                                            if (dist(lat.position(to), opt.x0, d) > opt.exit_radius) {
                                              set_sigma(t, to);
                                              exited[i] = 1;
                                            }
                                            return true;
                                          }
                                        }
                                        if (t > sigma + dmax) return false;
                                        const Vec p = lat.position(to);
                                        for (std::size_t k = 0; k < nd; ++k)
                                          if (t <= sigma + opt.deltas[k]) {
                                            end[k] = p;
                                            sp[k] = std::max(sp[k], dist(p, ys, d));
                                          }
                                        return true;
                                      });
      if (!have_sigma) set_sigma(opt.t0, last);
      for (std::size_t k = 0; k < nd; ++k) {
        endpoint[i * nd + k] = dist(end[k], ys, d);
        sup[i * nd + k] = sp[k];
      }
    });
    std::size_t ex = 0;
    for (char e : exited) ex += static_cast<std::size_t>(e);
    rep.exit_fraction.emplace_back(n, static_cast<double>(ex) / static_cast<double>(opt.paths));
    for (double eta : opt.etas)
      for (std::size_t k = 0; k < nd; ++k) {
        std::size_t a = 0, b = 0;
        for (std::size_t i = 0; i < opt.paths; ++i) {
          if (endpoint[i * nd + k] > eta) ++a;
          if (sup[i * nd + k] > eta) ++b;
        }
        TightnessRow row;
        row.n = n;
        row.eta = eta;
        row.delta = opt.deltas[k];
        row.p_hat = static_cast<double>(a) / static_cast<double>(opt.paths);
        row.ci = wilson_interval(a, opt.paths);
        row.p_sup = static_cast<double>(b) / static_cast<double>(opt.paths);
        row.ci_sup = wilson_interval(b, opt.paths);
        rep.rows.push_back(row);
      }
  }
  const double nmax = *std::max_element(n_list.begin(), n_list.end());
  for (const auto& r : rep.rows)
    if (r.n == nmax) rep.max_at_largest_n = std::max(rep.max_at_largest_n, r.p_hat);
  rep.pass = rep.max_at_largest_n < opt.bound;
  return rep;
}

}  // namespace jumplab
