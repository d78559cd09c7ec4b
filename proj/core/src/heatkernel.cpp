#include "jumplab/heatkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/IterativeLinearSolvers>

#include "jumplab/errors.hpp"
#include "jumplab/parallel.hpp"

namespace jumplab {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Entry {
  std::size_t j;
  double q;
};

// Poisson(m) weights for k = 0..K with K the first index past the mean whose
// right tail is certified below tol. Returns the tail bound through *tail.
std::vector<double> poisson_weights(double m, double tol, double* tail) {
  std::vector<double> w;
  if (m <= 0.0) {
    w.push_back(1.0);
    *tail = 0.0;
    return w;
  }
  const double lm = std::log(m);
  for (std::size_t k = 0;; ++k) {
    const double kd = static_cast<double>(k);
    w.push_back(std::exp(-m + kd * lm - std::lgamma(kd + 1.0)));
    if (kd + 2.0 > m) {
      const double next = std::exp(-m + (kd + 1.0) * lm - std::lgamma(kd + 2.0));
      const double bound = next / (1.0 - m / (kd + 2.0));
      if (bound <= tol) {
        *tail = bound;
        return w;
      }
    }
  }
}

std::size_t poisson_terms(double m, double tol) {
  // Mean plus a generous Gaussian margin; used only for budget decisions.
  return static_cast<std::size_t>(m + 10.0 * std::sqrt(m + 1.0) - std::log(tol) + 10.0);
}

void apply_P(const SpMat& G, double Lambda, const Eigen::VectorXd& v, Eigen::VectorXd& out) {
  out = v + (G * v) / Lambda;
}

// One uniformization pass evaluating exp(t G) v at several times.
std::vector<Eigen::VectorXd> uniformize(const GeneratorMatrix& G, const Eigen::VectorXd& v,
                                        const std::vector<double>& times, double tol_prob,
                                        std::vector<double>& errors) {
  const double Lambda = G.max_rate();
  std::vector<Eigen::VectorXd> out(times.size(), Eigen::VectorXd::Zero(v.size()));
  errors.assign(times.size(), 0.0);
  if (Lambda <= 0.0) {
    for (auto& o : out) o = v;
    return out;
  }
  std::vector<std::vector<double>> weights(times.size());
  std::size_t K = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    double tail = 0.0;
    weights[i] = poisson_weights(Lambda * times[i], tol_prob, &tail);
    K = std::max(K, weights[i].size());
    errors[i] = tail + static_cast<double>(weights[i].size()) * std::numeric_limits<double>::epsilon();
  }
  Eigen::VectorXd cur = v, next(v.size());
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (k < weights[i].size() && weights[i][k] > 0.0) out[i] += weights[i][k] * cur;
    if (k + 1 < K) {
      apply_P(G.rates, Lambda, cur, next);
      cur.swap(next);
    }
  }
  return out;
}

Eigen::VectorXd semigroup(const GeneratorMatrix& G, double t, const Eigen::VectorXd& v, double tol_prob,
                          const UniformizationOptions& opt, double* error, std::size_t* steps) {
  if (!(t >= 0.0)) throw InvalidArgument("time must be nonnegative");
  const double m = G.max_rate() * t;
  std::size_t passes = 1;
  if (poisson_terms(m, tol_prob) > opt.term_budget)
    passes = static_cast<std::size_t>(std::ceil(static_cast<double>(poisson_terms(m, tol_prob)) /
                                                static_cast<double>(opt.term_budget))) + 1;
  const double h = t / static_cast<double>(passes);
  const double per = tol_prob / static_cast<double>(passes);
  Eigen::VectorXd cur = v;
  double err = 0.0;
  for (std::size_t s = 0; s < passes; ++s) {
    std::vector<double> e;
    cur = uniformize(G, cur, {h}, per, e)[0];
    err += e[0];
  }
  if (error) *error = err;
  if (steps) *steps = passes;
  return cur;
}

double prob_tolerance(const GeneratorMatrix& G, double tol) {
  return std::max(tol * G.lattice.point_measure(), 1e-300);
}

}  // namespace

std::string to_string(Boundary b) { return b == Boundary::Killed ? "killed" : "full_rate_killed"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "killed") return Boundary::Killed;
  if (s == "full_rate_killed") return Boundary::FullRateKilled;
  throw ConfigError("unknown boundary '" + s + "' (expected killed or full_rate_killed)");
}

std::optional<std::size_t> GeneratorMatrix::find(const GridPoint& p) const {
  auto it = index.find(p);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

double GeneratorMatrix::max_rate() const {
  double m = 0.0;
  for (int i = 0; i < rates.outerSize(); ++i)
    for (SpMat::InnerIterator it(rates, i); it; ++it)
      if (it.col() == i) m = std::max(m, -it.value());
  return m;
}

GeneratorMatrix generator_matrix(const ConductivityField& C, const Window& window, GeneratorOptions opt) {
  if (window.dim != C.dim()) throw InvalidArgument("window dimension does not match the field");
  return generator_matrix(C, window.points(), opt);
}

GeneratorMatrix generator_matrix(const ConductivityField& C, const std::vector<GridPoint>& pts,
                                 GeneratorOptions opt) {
  if (pts.empty()) throw InvalidArgument("generator window is empty");
  GeneratorMatrix G;
  G.lattice = C.lattice();
  G.boundary = opt.boundary;
  G.lambda = opt.lambda;
  G.window = pts;
  std::sort(G.window.begin(), G.window.end());
  G.window.erase(std::unique(G.window.begin(), G.window.end()), G.window.end());
  const std::size_t n = G.window.size();
  for (std::size_t i = 0; i < n; ++i) G.index.emplace(G.window[i], i);

  const auto& model = C.model();
  const int d = C.dim();
  const double mu = C.lattice().point_measure();
  const bool has_neighbors = static_cast<bool>(model.neighbors(G.window.front()));
  const auto support = model.support_radius();
  if (!has_neighbors && !support) {
    const double nnz = static_cast<double>(n) * static_cast<double>(n);
    if (nnz > static_cast<double>(opt.max_nonzeros))
      throw ResourceLimit("generator on " + std::to_string(n) + " points exceeds the nonzero budget");
  }
  auto keep = [&](const GridPoint& x, const GridPoint& y) {
    return !opt.lambda || C.lattice().distance(x, y) <= *opt.lambda * (1.0 + 1e-12);
  };

  std::vector<std::vector<Entry>> rows(n);
  if (has_neighbors) {
    parallel_for(n, [&](std::size_t i) {
      const auto& x = G.window[i];
      for (const auto nb = model.neighbors(x); const auto& [y, w] : *nb) {
        auto j = G.find(y);
        if (!j || *j == i || !keep(x, y)) continue;
        rows[i].push_back({*j, w * C.multiplier() * mu});
      }
    });
  } else if (support) {
    parallel_for(n, [&](std::size_t i) {
      const auto& x = G.window[i];
      for_each_offset(d, *support, [&](const Index& h) {
        if (norm2(h, d) == 0) return;
        const GridPoint y = x + GridPoint(h);
        auto j = G.find(y);
        if (!j || !keep(x, y)) return;
        const double c = C.evaluate(x, y);
        if (c > 0.0) rows[i].push_back({*j, c * mu});
      });
    });
  } else if (C.stationary()) {
    // Stationary field: one evaluation per offset class.
    std::unordered_map<GridPoint, double, GridPointHash> cache;
    Index lo = G.window.front().k, hi = lo;
    for (const auto& p : G.window)
      for (int a = 0; a < d; ++a) lo[a] = std::min(lo[a], p.k[a]), hi[a] = std::max(hi[a], p.k[a]);
    std::int64_t span = 0;
    for (int a = 0; a < d; ++a) span = std::max(span, hi[a] - lo[a]);
    std::vector<std::pair<GridPoint, double>> offsets;
    for_each_offset(d, span, [&](const Index& h) {
      if (norm2(h, d) == 0) return;
      offsets.emplace_back(GridPoint(h), 0.0);
    });
    parallel_for(offsets.size(), [&](std::size_t k) {
      offsets[k].second = C.evaluate(GridPoint{}, offsets[k].first);
    });
    for (auto& [h, v] : offsets) cache.emplace(h, v);
    parallel_for(n, [&](std::size_t i) {
      const auto& x = G.window[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const auto& y = G.window[j];
        if (!keep(x, y)) continue;
        const double c = cache.at(y - x);
        if (c > 0.0) rows[i].push_back({j, c * mu});
      }
    });
  } else {
    parallel_for(n, [&](std::size_t i) {
      const auto& x = G.window[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const auto& y = G.window[j];
        if (!keep(x, y)) continue;
        // Evaluate in canonical order so q(x,y) and q(y,x) are bit-identical.
        const double c = i < j ? C.evaluate(x, y) : C.evaluate(y, x);
        if (c > 0.0) rows[i].push_back({j, c * mu});
      }
    });
  }

  G.out_rate.assign(n, 0.0);
  if (opt.boundary == Boundary::FullRateKilled) {
    auto full_rate = [&](const GridPoint& x, double* tail) -> double {
      *tail = 0.0;
      if (!opt.lambda) {
        const RateSum r = total_rate(C, x, opt.tail);
        *tail = r.tail_bound;
        return r.value;
      }
      double s = 0.0;
      if (has_neighbors) {
        for (const auto nb = model.neighbors(x); const auto& [y, w] : *nb)
          if (keep(x, y)) s += w * C.multiplier();
        return s;
      }
      const double r = *opt.lambda * C.rho();
      const auto R = static_cast<std::int64_t>(std::floor(r * (1.0 + 1e-12)));
      const auto r2 = static_cast<std::int64_t>(std::floor(r * r * (1.0 + 1e-12)));
      for_each_offset(d, R, [&](const Index& h) {
        const auto q = norm2(h, d);
        if (q > 0 && q <= r2) s += C.evaluate(x, x + GridPoint(h));
      });
      return s;
    };
    std::vector<double> cx(n), tails(n);
    if (C.stationary() && !has_neighbors) {
      double t = 0.0;
      const double v = full_rate(GridPoint{}, &t);
      std::fill(cx.begin(), cx.end(), v);
      std::fill(tails.begin(), tails.end(), t);
    } else {
      parallel_for(n, [&](std::size_t i) { cx[i] = full_rate(G.window[i], &tails[i]); });
    }
    for (std::size_t i = 0; i < n; ++i) {
      double in = 0.0;
      for (const auto& e : rows[i]) in += e.q;
      G.out_rate[i] = std::max(0.0, cx[i] * mu - in);
      G.out_rate_error = std::max(G.out_rate_error, tails[i] * mu);
    }
  }

  std::size_t nnz = n;
  for (const auto& r : rows) nnz += r.size();
  G.rates.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  G.rates.reserve(static_cast<Eigen::Index>(nnz));
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.j < b.j; });
    double s = 0.0;
    for (const auto& e : r) s += e.q;
    const double diag = -(s + G.out_rate[i]);
    const auto row = static_cast<Eigen::Index>(i);
    G.rates.startVec(row);
    bool placed = false;
    for (const auto& e : r) {
      if (!placed && e.j > i) {
        G.rates.insertBack(row, row) = diag;
        placed = true;
      }
      G.rates.insertBack(row, static_cast<Eigen::Index>(e.j)) = e.q;
    }
    if (!placed) G.rates.insertBack(row, row) = diag;
    std::vector<Entry>().swap(r);
  }
  G.rates.finalize();
  return G;
}

std::vector<double> apply_semigroup(const GeneratorMatrix& G, double t, const std::vector<double>& v,
                                    double* error_bound, UniformizationOptions opt) {
  if (v.size() != G.size()) throw InvalidArgument("vector size does not match the generator window");
  const Eigen::VectorXd in = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  double err = 0.0;
  const Eigen::VectorXd out = semigroup(G, t, in, opt.tolerance, opt, &err, nullptr);
  if (error_bound) *error_bound = err;
  return {out.data(), out.data() + out.size()};
}

HeatKernelColumn heat_kernel(const GeneratorMatrix& G, const std::vector<double>& times, const GridPoint& source,
                             UniformizationOptions opt) {
  const auto src = G.find(source);
  if (!src) throw InvalidArgument("heat-kernel source lies outside the window");
  for (double t : times)
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("heat-kernel times must be finite and nonnegative");
  HeatKernelColumn col;
  col.source = source;
  col.times = times;
  col.values.resize(times.size());
  col.error_bound.assign(times.size(), 0.0);
  col.steps.assign(times.size(), 1);

  const double rho_d = 1.0 / G.lattice.point_measure();
  const double tol = prob_tolerance(G, opt.tolerance);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(G.size()));
  e[static_cast<Eigen::Index>(*src)] = 1.0;

  std::vector<std::size_t> direct;
  std::vector<double> direct_times;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (poisson_terms(G.max_rate() * times[i], tol) <= opt.term_budget) {
      direct.push_back(i);
      direct_times.push_back(times[i]);
    }
  }
  std::vector<double> errs;
  const auto vals = uniformize(G, e, direct_times, tol, errs);
  for (std::size_t k = 0; k < direct.size(); ++k) {
    const auto i = direct[k];
    col.values[i].assign(vals[k].data(), vals[k].data() + vals[k].size());
    col.error_bound[i] = errs[k] * rho_d;
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!col.values[i].empty() || G.size() == 0) continue;
    double err = 0.0;
    const auto v = semigroup(G, times[i], e, tol, opt, &err, &col.steps[i]);
    col.values[i].assign(v.data(), v.data() + v.size());
    col.error_bound[i] = err * rho_d;
  }
  for (auto& v : col.values)
    for (auto& p : v) p *= rho_d;
  return col;
}

HeatKernelTable heat_kernel_table(const GeneratorMatrix& G, const std::vector<double>& times,
                                  const std::vector<GridPoint>& sources, UniformizationOptions opt) {
  HeatKernelTable T;
  T.window = G.window;
  T.times = times;
  T.rho = G.lattice.rho();
  T.columns.resize(sources.size());
  parallel_for(sources.size(), [&](std::size_t i) { T.columns[i] = heat_kernel(G, times, sources[i], opt); });
  return T;
}

double column_mass(const HeatKernelColumn& col, std::size_t time_index, const ScaledLattice& lat) {
  double s = 0.0;
  for (double p : col.values.at(time_index)) s += p;
  return s * lat.point_measure();
}

ResolventResult resolvent_check(const GeneratorMatrix& G, const std::vector<double>& f, const std::vector<double>& g,
                                double lambda, double cg_tolerance) {
  const std::size_t n = G.size();
  if (f.size() != n || g.size() != n) throw InvalidArgument("f and g must be given on the generator window");
  if (!(lambda > 0.0)) throw InvalidArgument("resolvent parameter must be positive");
  const double mu = G.lattice.point_measure();
  const auto N = static_cast<Eigen::Index>(n);
  const Eigen::VectorXd F = Eigen::Map<const Eigen::VectorXd>(f.data(), N);
  const Eigen::VectorXd Gv = Eigen::Map<const Eigen::VectorXd>(g.data(), N);

  ResolventResult out;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(N);
  if (F.squaredNorm() > 0.0) {
    Eigen::SparseMatrix<double> A = -Eigen::SparseMatrix<double>(G.rates);
    for (Eigen::Index i = 0; i < N; ++i) A.coeffRef(i, i) += lambda;
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(cg_tolerance);
    cg.setMaxIterations(std::max<Eigen::Index>(1000, 20 * N));
    cg.compute(A);
    u = cg.solve(F);
    out.iterations = static_cast<std::size_t>(cg.iterations());
    out.solver_residual = (A * u - F).norm() / F.norm();
    if (cg.info() != Eigen::Success && out.solver_residual > 1e3 * cg_tolerance)
      throw NumericError("conjugate gradients did not converge (relative residual " +
                         std::to_string(out.solver_residual) + ")");
  }

  double pair = 0.0;
  for (Eigen::Index i = 0; i < N; ++i)
    for (SpMat::InnerIterator it(G.rates, i); it; ++it) {
      const auto j = it.col();
      if (j == i) continue;
      pair += (u[i] - u[j]) * (Gv[i] - Gv[j]) * it.value();
    }
  double out_term = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) out_term += u[i] * Gv[i] * G.out_rate[static_cast<std::size_t>(i)];
  out.lhs = mu * (0.5 * pair + out_term);
  out.rhs = mu * (F.dot(Gv) - lambda * u.dot(Gv));
  out.residual = out.lhs - out.rhs;
  const double scale = std::abs(out.lhs) + std::abs(out.rhs);
  out.relative_residual = scale > 0.0 ? std::abs(out.residual) / scale : 0.0;
  return out;
}

KernelDiagnostics kernel_diagnostics(const ConductivityField& C, const std::vector<double>& rhos,
                                     const std::vector<double>& times, DiagnosticsOptions opt) {
  if (C.rho() != 1.0) throw ConfigError("kernel diagnostics expect the base field on Z^d (rho = 1)");
  if (rhos.empty() || times.empty()) throw ConfigError("kernel diagnostics need rho and time grids");
  if (!(opt.window_radius > 0.0)) throw ConfigError("window radius must be positive");
  for (double r : rhos)
    if (!(r > 0.0)) throw ConfigError("rho values must be positive");
  for (double t : times)
    if (!(t > 0.0)) throw ConfigError("diagnostic times must be positive");

  const int d = C.dim();
  const double alpha = C.alpha();
  const double ta = static_cast<double>(d) / alpha;
  KernelDiagnostics out;
  out.boundary = to_string(opt.boundary);
  out.window_radius = opt.window_radius;
  GeneratorOptions gopt;
  gopt.boundary = opt.boundary;

  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
  const double rho_max = *std::max_element(rhos.begin(), rhos.end());
  for (double rho : rhos) {
    const auto Cr = scale_conductivity(C, rho);
    const auto R = static_cast<std::int64_t>(std::ceil(opt.window_radius * rho - 1e-9));
    const Window W = Window::centered(d, R);
    const auto G = generator_matrix(Cr, W, gopt);

    const std::size_t ns = std::max<std::size_t>(1, opt.diagonal_sources);
    std::vector<GridPoint> sources;
    for (std::size_t s = 0; s < ns; ++s) {
      GridPoint p;
      p.k[0] = ns == 1 ? 0
                       : static_cast<std::int64_t>(std::llround(static_cast<double>(s) * static_cast<double>(R / 2) /
                                                                static_cast<double>(ns - 1)));
      if (sources.empty() || !(sources.back() == p)) sources.push_back(p);
    }
    const auto table = heat_kernel_table(G, times, sources, opt.uniformization);
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      double best = 0.0;
      for (const auto& col : table.columns) {
        best = std::max(best, col.values[ti][*G.find(col.source)] * std::pow(times[ti], ta));
        out.max_error_bound = std::max(out.max_error_bound, col.error_bound[ti]);
      }
      out.on_diagonal.push_back({rho, times[ti], best});
      vmin = std::min(vmin, best);
      vmax = std::max(vmax, best);
    }

    // Scaling identity on the matched integer window at rho = 1.
    {
      const auto G1 = generator_matrix(C, W, gopt);
      std::vector<double> scaled_times;
      for (double t : times) scaled_times.push_back(std::pow(rho, alpha) * t);
      const auto base = heat_kernel(G1, scaled_times, GridPoint{}, opt.uniformization);
      const auto& here = table.columns.front();
      const double rd = std::pow(rho, d);
      for (std::size_t ti = 0; ti < times.size(); ++ti) {
        double v = 0.0;
        for (std::size_t y = 0; y < G.size(); ++y)
          v = std::max(v, std::abs(here.values[ti][y] - rd * base.values[ti][y]));
        out.scaling.push_back({rho, times[ti], v});
        out.max_scaling_violation = std::max(out.max_scaling_violation, v);
      }
    }

    if (opt.lambda) {
      GeneratorOptions lopt = gopt;
      lopt.lambda = opt.lambda;
      const auto GL = generator_matrix(Cr, W, lopt);
      std::vector<double> small;
      for (double t : times)
        if (t <= 1.0) small.push_back(t);
      if (!small.empty()) {
        const auto col = heat_kernel(GL, small, GridPoint{}, opt.uniformization);
        double best = out.off_diagonal.value_or(0.0);
        for (std::size_t ti = 0; ti < small.size(); ++ti)
          for (std::size_t y = 0; y < GL.size(); ++y) {
            const double r = GL.lattice.distance(GridPoint{}, GL.window[y]);
            best = std::max(best, col.values[ti][y] * std::pow(small[ti], ta) * std::exp(r));
          }
        out.off_diagonal = best;
      }
    }

    if (rho == rho_max) {
      const auto col = heat_kernel(G, {opt.holder_t0}, GridPoint{}, opt.uniformization);
      const auto& p = col.values[0];
      const double theta1 = opt.theta1.value_or(C.meta().Theta1.value_or(1.0));
      const auto kmin = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(2.0 * theta1 - 1e-9)));
      const auto kmax = static_cast<std::int64_t>(std::floor(opt.window_radius * rho / 4.0 + 1e-9));
      const std::vector<std::int64_t> bases = {0, R / 8, R / 4};
      HolderEstimate h;
      h.t0 = opt.holder_t0;
      h.rho = rho;
      auto value_at = [&](std::int64_t k) {
        GridPoint q;
        q.k[0] = k;
        return p[*G.find(q)];
      };
      for (std::int64_t k = kmin; k <= kmax; k *= 2) {
        double diff = 0.0;
        for (auto b : bases)
          if (b + k <= R) diff = std::max(diff, std::abs(value_at(b) - value_at(b + k)));
        if (diff > 0.0) {
          h.deltas.push_back(static_cast<double>(k) / rho);
          h.differences.push_back(diff);
        }
      }
      if (h.deltas.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(h.deltas.size());
        for (std::size_t i = 0; i < h.deltas.size(); ++i) {
          const double x = std::log(h.deltas[i]), y = std::log(h.differences[i]);
          sx += x, sy += y, sxx += x * x, sxy += x * y;
        }
        h.beta = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        out.holder = h;
      }
    }
  }
  out.on_diagonal_spread = vmin > 0.0 ? vmax / vmin : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace jumplab
