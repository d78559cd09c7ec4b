#include <algorithm>
#include <cmath>

#include "jumplab/errors.hpp"
#include "jumplab/forms.hpp"
#include "jumplab/parallel.hpp"
#include "jumplab/quadrature.hpp"
#include "jumplab/rng.hpp"

namespace jumplab {

namespace {

constexpr std::uint64_t kCorpusTag = 0x534d4f4f;

double wrap(double a) {
  while (a > M_PI) a -= 2 * M_PI;
  while (a <= -M_PI) a += 2 * M_PI;
  return a;
}

// Composite tensor Gauss over a box with `panels[i]` pieces per axis.
double box_integral(const std::function<double(std::span<const double>)>& f, int d, const double* lo,
                    const double* hi, const int* panels, int order) {
  const auto& rule = gauss_legendre(order);
  std::vector<std::vector<std::pair<double, double>>> axes(d);
  for (int i = 0; i < d; ++i) {
    const double w = (hi[i] - lo[i]) / panels[i];
    for (int p = 0; p < panels[i]; ++p)
      for (int q = 0; q < order; ++q)
        axes[i].emplace_back(lo[i] + w * (p + 0.5 * (1.0 + rule.nodes[q])), 0.5 * w * rule.weights[q]);
  }
  double x[kMaxDim] = {0, 0, 0};
  double total = 0.0;
  if (d == 1) {
    for (const auto& [a, wa] : axes[0]) {
      x[0] = a;
      total += wa * f(std::span<const double>(x, 1));
    }
  } else if (d == 2) {
    for (const auto& [a, wa] : axes[0]) {
      x[0] = a;
      double row = 0.0;
      for (const auto& [b, wb] : axes[1]) {
        x[1] = b;
        row += wb * f(std::span<const double>(x, 2));
      }
      total += wa * row;
    }
  } else {
    throw InvalidArgument("box_integral supports d <= 2");
  }
  return total;
}

double bump(double s2) { return s2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s2)) : 0.0; }

// Richardson extrapolation of V(eps) = V0 + a eps^p + b eps^{p+2}.
std::pair<double, double> extrapolate(const std::vector<double>& eps, const std::vector<double>& v, double p) {
  const std::size_t m = eps.size();
  if (m == 1) return {v[0], 0.0};
  auto two = [&](std::size_t i, std::size_t j) {
    const double a = std::pow(eps[i], p), b = std::pow(eps[j], p);
    return (v[j] * a - v[i] * b) / (a - b);
  };
  if (m == 2) return {two(0, 1), std::abs(two(0, 1) - v[1])};
  const std::size_t i = m - 3, j = m - 2, k = m - 1;
  double A[3][4];
  const std::size_t idx[3] = {i, j, k};
  for (int r = 0; r < 3; ++r) {
    const double e = eps[idx[r]];
    A[r][0] = 1.0;
    A[r][1] = std::pow(e, p);
    A[r][2] = std::pow(e, p + 2.0);
    A[r][3] = v[idx[r]];
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    for (int q = 0; q < 4; ++q) std::swap(A[c][q], A[piv][q]);
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double fct = A[r][c] / A[c][c];
      for (int q = c; q < 4; ++q) A[r][q] -= fct * A[c][q];
    }
  }
  const double v0 = A[0][3] / A[0][0];
  return {v0, std::abs(v0 - two(j, k))};
}

}  // namespace

SmoothFunction dilate(const SmoothFunction& f, double s) {
  if (!(s > 0.0)) throw InvalidArgument("dilation factor must be positive");
  SmoothFunction g = f;
  g.name = f.name + "/dilated";
  const int d = f.d;
  g.value = [f, s, d](std::span<const double> x) {
    double y[kMaxDim] = {0, 0, 0};
    for (int i = 0; i < d; ++i) y[i] = x[i] / s;
    return f.value(std::span<const double>(y, d));
  };
  if (f.gradient)
    g.gradient = [f, s, d](std::span<const double> x, std::span<double> out) {
      double y[kMaxDim] = {0, 0, 0};
      for (int i = 0; i < d; ++i) y[i] = x[i] / s;
      f.gradient(std::span<const double>(y, d), out);
      for (int i = 0; i < d; ++i) out[i] /= s;
    };
  for (int i = 0; i < d; ++i) {
    g.lo[i] = f.lo[i] * s;
    g.hi[i] = f.hi[i] * s;
  }
  return g;
}

std::vector<SmoothFunction> smooth_corpus(int d, std::size_t count, std::uint64_t seed) {
  if (d < 1 || d > kMaxDim) throw InvalidArgument("corpus dimension out of range");
  std::vector<SmoothFunction> out;
  for (std::size_t idx = 0; idx < count; ++idx) {
    RandomStream rng(seed, stream_key(kCorpusTag, idx));
    auto U = [&](double a, double b) { return a + (b - a) * rng.uniform01(); };
    SmoothFunction f;
    f.d = d;
    const int kind = static_cast<int>(idx % 3);
    if (kind == 0) {
      Vec c{}, a{};
      for (int i = 0; i < d; ++i) c[i] = U(-0.5, 0.5), a[i] = U(0.6, 1.4);
      f.name = "hat_" + std::to_string(idx);
      f.value = [c, a, d](std::span<const double> x) {
        double v = 1.0;
        for (int i = 0; i < d; ++i) v *= std::max(0.0, 1.0 - std::abs(x[i] - c[i]) / a[i]);
        return v;
      };
      f.gradient = [c, a, d](std::span<const double> x, std::span<double> g) {
        double t[kMaxDim];
        for (int i = 0; i < d; ++i) t[i] = std::max(0.0, 1.0 - std::abs(x[i] - c[i]) / a[i]);
        for (int i = 0; i < d; ++i) {
          double v = t[i] > 0.0 ? (x[i] > c[i] ? -1.0 : 1.0) / a[i] : 0.0;
          for (int j = 0; j < d; ++j)
            if (j != i) v *= t[j];
          g[i] = v;
        }
      };
      for (int i = 0; i < d; ++i) f.lo[i] = c[i] - a[i], f.hi[i] = c[i] + a[i];
    } else {
      Vec c{}, m{};
      const double R = U(0.8, 1.4);
      for (int i = 0; i < d; ++i) c[i] = U(-0.4, 0.4), m[i] = U(-0.5, 0.5);
      const double sigma = U(0.3, 0.8);
      // Envelope factor A(x) and its gradient; kind 1: Gaussian, kind 2: trig polynomial.
      Vec k1{}, k2{};
      const double a0 = U(0.5, 1.0), a1 = U(-1.0, 1.0), a2 = U(-1.0, 1.0), p1 = U(0.0, 2 * M_PI),
                   p2 = U(0.0, 2 * M_PI);
      for (int i = 0; i < d; ++i) k1[i] = U(-3.0, 3.0), k2[i] = U(-3.0, 3.0);
      auto factor = [=](std::span<const double> x, double* grad) {
        if (kind == 1) {
          double s = 0.0;
          for (int i = 0; i < d; ++i) s += (x[i] - m[i]) * (x[i] - m[i]);
          const double v = std::exp(-s / (2 * sigma * sigma));
          if (grad)
            for (int i = 0; i < d; ++i) grad[i] = -v * (x[i] - m[i]) / (sigma * sigma);
          return v;
        }
        double t1 = p1, t2 = p2;
        for (int i = 0; i < d; ++i) t1 += k1[i] * x[i], t2 += k2[i] * x[i];
        if (grad)
          for (int i = 0; i < d; ++i) grad[i] = -a1 * std::sin(t1) * k1[i] - a2 * std::sin(t2) * k2[i];
        return a0 + a1 * std::cos(t1) + a2 * std::cos(t2);
      };
      f.name = (kind == 1 ? "bump_gauss_" : "trig_bump_") + std::to_string(idx);
      f.value = [=](std::span<const double> x) {
        double s2 = 0.0;
        for (int i = 0; i < d; ++i) s2 += (x[i] - c[i]) * (x[i] - c[i]);
        s2 /= R * R;
        if (s2 >= 1.0) return 0.0;
        return bump(s2) * factor(x, nullptr);
      };
      f.gradient = [=](std::span<const double> x, std::span<double> g) {
        double s2 = 0.0;
        for (int i = 0; i < d; ++i) s2 += (x[i] - c[i]) * (x[i] - c[i]);
        s2 /= R * R;
        if (s2 >= 1.0) {
          for (int i = 0; i < d; ++i) g[i] = 0.0;
          return;
        }
        const double b = bump(s2);
        double ga[kMaxDim];
        const double a = factor(x, ga);
        const double q = 1.0 - s2;
        for (int i = 0; i < d; ++i) g[i] = b * (-2.0 * (x[i] - c[i]) / (R * R * q * q)) * a + b * ga[i];
      };
      for (int i = 0; i < d; ++i) f.lo[i] = c[i] - R, f.hi[i] = c[i] + R;
    }
    out.push_back(std::move(f));
  }
  return out;
}

GridFunction restrict_to_grid(const SmoothFunction& f, const ScaledLattice& lat) {
  if (lat.dim() != f.d) throw InvalidArgument("lattice dimension does not match the function");
  const int d = f.d;
  Index lo{}, hi{};
  for (int i = 0; i < d; ++i) {
    lo[i] = static_cast<std::int64_t>(std::ceil(f.lo[i] * lat.rho()));
    hi[i] = static_cast<std::int64_t>(std::floor(f.hi[i] * lat.rho()));
  }
  Window w;
  w.lo = lo;
  w.hi = hi;
  w.dim = d;
  GridFunction g;
  for (const auto& p : w.points()) {
    const Vec x = lat.position(p);
    const double v = f.value(std::span<const double>(x.data(), d));
    if (v != 0.0) g.emplace(p, v);
  }
  return g;
}

std::vector<FormEvaluation> continuum_forms(const std::vector<KernelSpec>& kernels, const SmoothFunction& f,
                                            const ContinuumOptions& opt) {
  const int d = f.d;
  if (d < 1 || d > 2) throw InvalidArgument("continuum forms support d = 1 and d = 2");
  if (kernels.empty()) return {};
  for (const auto& k : kernels) {
    if (k.d != d) throw InvalidArgument("kernel dimension does not match the function");
    if (!k.stationary()) throw InvalidArgument("continuum forms need a translation-invariant kernel");
  }
  std::vector<double> eps = opt.epsilons;
  if (eps.empty()) throw InvalidArgument("epsilon schedule is empty");
  for (double e : eps)
    if (!(e > 0.0)) throw InvalidArgument("epsilon values must be positive");
  std::sort(eps.begin(), eps.end(), std::greater<>());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());

  double width[kMaxDim] = {0, 0, 0};
  double Rmax2 = 0.0;
  for (int i = 0; i < d; ++i) {
    width[i] = f.hi[i] - f.lo[i];
    if (!(width[i] > 0.0)) throw InvalidArgument("test function support box is empty");
    Rmax2 += width[i] * width[i];
  }
  const double Rmax = std::sqrt(Rmax2);

  int base_panels[kMaxDim] = {opt.x_panels, opt.x_panels, opt.x_panels};
  const double norm2 = box_integral(
      [&](std::span<const double> x) {
        const double v = f.value(x);
        return v * v;
      },
      d, f.lo.data(), f.hi.data(), base_panels, opt.x_order);

  auto S = [&](const double* h) {
    double lo[kMaxDim], hi[kMaxDim];
    int panels[kMaxDim];
    for (int i = 0; i < d; ++i) {
      lo[i] = std::min(f.lo[i], f.lo[i] - h[i]);
      hi[i] = std::max(f.hi[i], f.hi[i] - h[i]);
      panels[i] = static_cast<int>(std::ceil(opt.x_panels * (hi[i] - lo[i]) / width[i] - 1e-9));
    }
    return box_integral(
        [&](std::span<const double> x) {
          double y[kMaxDim] = {0, 0, 0};
          for (int i = 0; i < d; ++i) y[i] = x[i] + h[i];
          const double v = f.value(std::span<const double>(y, d)) - f.value(x);
          return v * v;
        },
        d, lo, hi, panels, opt.x_order);
  };

  // Directions with quadrature weights.
  std::vector<std::pair<double, double>> dirs;  // (angle or sign, weight)
  if (d == 1) {
    dirs = {{1.0, 1.0}, {-1.0, 1.0}};
  } else {
    std::vector<double> cuts = {-M_PI, -M_PI / 2, 0.0, M_PI / 2, M_PI};
    for (const auto& k : kernels)
      for (double b : k.angular_breaks) {
        const double w = wrap(b);
        if (w > -M_PI && w < M_PI) cuts.push_back(w);
      }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }),
               cuts.end());
    const auto& rule = gauss_legendre(opt.angle_order);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double hp = (cuts[c + 1] - cuts[c]) / opt.angle_split;
      for (int p = 0; p < opt.angle_split; ++p)
        for (int q = 0; q < opt.angle_order; ++q)
          dirs.emplace_back(cuts[c] + hp * (p + 0.5 * (1.0 + rule.nodes[q])), 0.5 * hp * rule.weights[q]);
    }
  }

  // Radial panels: every epsilon is a panel edge; then doubling up to Rmax.
  std::vector<double> edges;
  for (double e : eps)
    if (e < Rmax) edges.push_back(e);
  if (!edges.empty()) {
    double r = edges.front();
    while (r * 2.0 < Rmax) {
      r *= 2.0;
      edges.push_back(r);
    }
    edges.push_back(Rmax);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const std::size_t npanels = edges.empty() ? 0 : edges.size() - 1;

  double x_points = 1.0;
  for (int i = 0; i < d; ++i) x_points *= 2.0 * opt.x_panels * opt.x_order;
  const double evals = static_cast<double>(dirs.size()) * static_cast<double>(npanels * opt.r_order) * x_points * 2;
  if (evals > opt.max_evaluations) throw ResourceLimit("continuum form quadrature exceeds the evaluation budget");

  const std::size_t nk = kernels.size();
  const auto& rrule = gauss_legendre(opt.r_order);
  const auto& trule = gauss_legendre(2 * opt.r_order);
  // per direction: [kernel][panel] contributions and [kernel] tail
  std::vector<std::vector<double>> panel_sum(dirs.size(), std::vector<double>(nk * npanels, 0.0));
  std::vector<std::vector<double>> tail_sum(dirs.size(), std::vector<double>(nk, 0.0));
  parallel_for(dirs.size(), [&](std::size_t di) {
    const auto [ang, wdir] = dirs[di];
    double u[kMaxDim] = {0, 0, 0};
    if (d == 1) u[0] = ang;
    else u[0] = std::cos(ang), u[1] = std::sin(ang);
    for (std::size_t p = 0; p < npanels; ++p) {
      const double a = edges[p], b = edges[p + 1];
      for (int j = 0; j < opt.r_order; ++j) {
        const double r = a + 0.5 * (b - a) * (1.0 + rrule.nodes[j]);
        const double w = 0.5 * (b - a) * rrule.weights[j] * std::pow(r, d - 1) * wdir;
        double h[kMaxDim] = {0, 0, 0};
        for (int i = 0; i < d; ++i) h[i] = r * u[i];
        const double s = S(h);
        for (std::size_t k = 0; k < nk; ++k)
          panel_sum[di][k * npanels + p] += w * kernels[k].profile(std::span<const double>(h, d)) * s;
      }
    }
    for (std::size_t k = 0; k < nk; ++k) {
      const double al = kernels[k].alpha;
      const double R0 = std::max(Rmax, eps.front());
      double t = 0.0;
      for (int j = 0; j < 2 * opt.r_order; ++j) {
        const double v = 0.5 * (1.0 + trule.nodes[j]);
        const double r = R0 * std::pow(v, -1.0 / al);
        const double jac = R0 / al * std::pow(v, -1.0 / al - 1.0);
        double h[kMaxDim] = {0, 0, 0};
        for (int i = 0; i < d; ++i) h[i] = r * u[i];
        t += 0.5 * trule.weights[j] * kernels[k].profile(std::span<const double>(h, d)) * std::pow(r, d - 1) * jac;
      }
      tail_sum[di][k] = wdir * 2.0 * norm2 * t;
    }
  });

  std::vector<FormEvaluation> out(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    std::vector<double> v(eps.size(), 0.0);
    for (std::size_t e = 0; e < eps.size(); ++e) {
      double s = 0.0;
      for (std::size_t di = 0; di < dirs.size(); ++di) {
        for (std::size_t p = 0; p < npanels; ++p)
          if (edges[p] >= eps[e] * (1.0 - 1e-12)) s += panel_sum[di][k * npanels + p];
        s += tail_sum[di][k];
      }
      v[e] = 0.5 * s;
    }
    const auto [v0, err] = extrapolate(eps, v, 2.0 - kernels[k].alpha);
    out[k].value = std::max(0.0, v0);
    out[k].error_bound = err;
    out[k].kind = FormKind::Continuum;
    out[k].cutoff = eps.back();
    out[k].descriptor = kernels[k].name;
  }
  return out;
}

FormEvaluation continuum_form(const KernelSpec& k, const SmoothFunction& f, const ContinuumOptions& opt) {
  return continuum_forms({k}, f, opt).front();
}

FormEvaluation sobolev_alpha(const SmoothFunction& f, double alpha, const ContinuumOptions& opt) {
  auto e = continuum_form(isotropic_kernel(f.d, alpha, 1.0), f, opt);
  e.kind = FormKind::SobolevAlpha;
  return e;
}

bool NormEquivalenceReport::pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const NormEquivalenceRow& r) { return r.pass; });
}

NormEquivalenceReport norm_equivalence(const KernelSpec& k, const std::vector<SmoothFunction>& corpus, double lower,
                                       double upper, double tolerance, const ContinuumOptions& opt) {
  NormEquivalenceReport rep;
  rep.lower = lower;
  rep.upper = upper;
  rep.tolerance = tolerance;
  const auto iso = isotropic_kernel(k.d, k.alpha, 1.0);
  for (const auto& f : corpus) {
    const auto ev = continuum_forms({k, iso}, f, opt);
    NormEquivalenceRow row;
    row.name = f.name;
    row.e_kernel = ev[0].value;
    row.e_alpha = ev[1].value;
    row.ratio = row.e_alpha > 0.0 ? row.e_kernel / row.e_alpha : 0.0;
    row.error_bound = row.e_alpha > 0.0 ? (ev[0].error_bound + row.ratio * ev[1].error_bound) / row.e_alpha : 0.0;
    row.pass = row.ratio >= lower - tolerance && row.ratio <= upper + tolerance;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace jumplab
