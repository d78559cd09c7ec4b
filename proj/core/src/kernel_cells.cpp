#include <algorithm>
#include <cmath>
#include <list>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "jumplab/conductivity.hpp"
#include "jumplab/errors.hpp"
#include "jumplab/expr.hpp"
#include "jumplab/quadrature.hpp"

namespace jumplab {

namespace {

double euclid(std::span<const double> h) {
  double s = 0.0;
  for (double v : h) s += v * v;
  return std::sqrt(s);
}

KernelSpec from_profile(int d, double alpha, std::string name,
                        std::function<double(std::span<const double>)> profile) {
  KernelSpec k;
  k.d = d;
  k.alpha = alpha;
  k.name = std::move(name);
  k.profile = profile;
  k.k = [profile, d](std::span<const double> x, std::span<const double> y) {
    double h[kMaxDim] = {0, 0, 0};
    for (int i = 0; i < d; ++i) h[i] = y[i] - x[i];
    return profile(std::span<const double>(h, d));
  };
  return k;
}

double wrap_angle(double a) {
  while (a > M_PI) a -= 2 * M_PI;
  while (a <= -M_PI) a += 2 * M_PI;
  return a;
}

// Ray {r (cos t, sin t) : r > 0} against the box [lo, hi]; returns [r_in, r_out].
std::pair<double, double> ray_box(double t, const double* lo, const double* hi) {
  const double dir[2] = {std::cos(t), std::sin(t)};
  double r0 = 0.0, r1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 2; ++i) {
    if (std::abs(dir[i]) < 1e-300) continue;
    double a = lo[i] / dir[i], b = hi[i] / dir[i];
    if (a > b) std::swap(a, b);
    r0 = std::max(r0, a);
    r1 = std::min(r1, b);
  }
  return {r0, std::max(r0, r1)};
}

// Integral of f over the box [lo, hi] (2-d, origin outside) in polar
// coordinates, with the angular range split at corner angles and `breaks`.
double polar_box(const std::function<double(double, double)>& f, const double* lo, const double* hi,
                 const std::vector<double>& breaks, int order, int split) {
  const double cx = 0.5 * (lo[0] + hi[0]), cy = 0.5 * (lo[1] + hi[1]);
  const double phi = std::atan2(cy, cx);
  std::vector<double> cuts;
  const double corners[4][2] = {{lo[0], lo[1]}, {lo[0], hi[1]}, {hi[0], lo[1]}, {hi[0], hi[1]}};
  for (const auto& c : corners) cuts.push_back(wrap_angle(std::atan2(c[1], c[0]) - phi));
  const double tlo = *std::min_element(cuts.begin(), cuts.end());
  const double thi = *std::max_element(cuts.begin(), cuts.end());
  for (double b : breaks) {
    const double rel = wrap_angle(b - phi);
    if (rel > tlo && rel < thi) cuts.push_back(rel);
  }
  std::sort(cuts.begin(), cuts.end());
  const auto& rule = gauss_legendre(order);
  double total = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c], b = cuts[c + 1];
    if (b - a < 1e-15) continue;
    const double hp = (b - a) / split;
    for (int p = 0; p < split; ++p) {
      const double pa = a + p * hp;
      for (int i = 0; i < order; ++i) {
        const double rel = pa + 0.5 * hp * (1.0 + rule.nodes[i]);
        const double t = rel + phi;
        const auto [r0, r1] = ray_box(t, lo, hi);
        if (r1 <= r0) continue;
        const double ct = std::cos(t), st = std::sin(t);
        const double hr = (r1 - r0) / split;
        double inner = 0.0;
        for (int q = 0; q < split; ++q) {
          const double ra = r0 + q * hr;
          for (int j = 0; j < order; ++j) {
            const double r = ra + 0.5 * hr * (1.0 + rule.nodes[j]);
            inner += rule.weights[j] * 0.5 * hr * f(r * ct, r * st) * r;
          }
        }
        total += rule.weights[i] * 0.5 * hp * inner;
      }
    }
  }
  return total;
}

double tensor_box(const std::function<double(std::span<const double>)>& f, std::span<const double> lo,
                  std::span<const double> hi, int order, int split) {
  const std::size_t d = lo.size();
  std::vector<int> idx(d, 0);
  std::vector<double> a(d), b(d);
  double total = 0.0;
  while (true) {
    for (std::size_t i = 0; i < d; ++i) {
      const double w = (hi[i] - lo[i]) / split;
      a[i] = lo[i] + idx[i] * w;
      b[i] = a[i] + w;
    }
    total += integrate_box(f, a, b, order);
    std::size_t i = d;
    bool done = true;
    while (i > 0) {
      --i;
      if (++idx[i] < split) {
        done = false;
        break;
      }
      idx[i] = 0;
    }
    if (done) break;
  }
  return total;
}

void check_sample(double v) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw ContractViolation("kernel returned a negative or non-finite sample");
}

// One evaluation of the cell-pair integral at a given refinement level.
double cell_integral_level(const KernelSpec& k, double n, const GridPoint& x, const GridPoint& y,
                           int order, int split) {
  const int d = k.d;
  if (k.stationary()) {
    double c[kMaxDim] = {0, 0, 0};
    for (int i = 0; i < d; ++i) c[i] = static_cast<double>(y.k[i] - x.k[i]) / n;
    // Convolution of the two cells: weight prod_i (1/n - |u_i - c_i|)_+ on [c-1/n, c+1/n],
    // times n^{2d}; split at the kinks u_i = c_i. The weight has unit mass, so
    // only the deviation from the central value is integrated.
    const double v0 = k.profile(std::span<const double>(c, static_cast<std::size_t>(d)));
    check_sample(v0);
    auto weighted = [&](std::span<const double> u) {
      const double raw = k.profile(u);
      check_sample(raw);
      const double v = raw - v0;
      double w = 1.0;
      for (int i = 0; i < d; ++i) w *= n * (1.0 / n - std::abs(u[i] - c[i])) * n;
      return v * w;
    };
    double total = 0.0;
    for (int q = 0; q < (1 << d); ++q) {
      double lo[kMaxDim], hi[kMaxDim];
      for (int i = 0; i < d; ++i) {
        if (q & (1 << i)) {
          lo[i] = c[i];
          hi[i] = c[i] + 1.0 / n;
        } else {
          lo[i] = c[i] - 1.0 / n;
          hi[i] = c[i];
        }
      }
      if (d == 2 && !k.angular_breaks.empty()) {
        total += polar_box(
            [&](double u0, double u1) {
              const double u[2] = {u0, u1};
              return weighted(std::span<const double>(u, 2));
            },
            lo, hi, k.angular_breaks, order, split);
      } else {
        total += tensor_box(weighted, std::span<const double>(lo, d), std::span<const double>(hi, d), order,
                            split);
      }
    }
    return v0 + total;
  }
  const int D = 2 * d;
  double lo[2 * kMaxDim], hi[2 * kMaxDim];
  for (int i = 0; i < d; ++i) {
    lo[i] = (static_cast<double>(x.k[i]) - 0.5) / n;
    hi[i] = (static_cast<double>(x.k[i]) + 0.5) / n;
    lo[d + i] = (static_cast<double>(y.k[i]) - 0.5) / n;
    hi[d + i] = (static_cast<double>(y.k[i]) + 0.5) / n;
  }
  const double scale = std::pow(n, 2 * d);
  double cx[kMaxDim], cy[kMaxDim];
  for (int i = 0; i < d; ++i) {
    cx[i] = static_cast<double>(x.k[i]) / n;
    cy[i] = static_cast<double>(y.k[i]) / n;
  }
  const double v0 = k.k(std::span<const double>(cx, static_cast<std::size_t>(d)),
                        std::span<const double>(cy, static_cast<std::size_t>(d)));
  check_sample(v0);
  auto integrand = [&](std::span<const double> z) {
    const double v = k.k(z.subspan(0, d), z.subspan(d, d));
    check_sample(v);
    return (v - v0) * scale;
  };
  return v0 + tensor_box(integrand, std::span<const double>(lo, D), std::span<const double>(hi, D),
                    d == 3 ? std::min(order, 4) : order, split);
}

std::string pair_text(const GridPoint& x, const GridPoint& y, int d) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < d; ++i) os << (i ? "," : "") << x.k[i];
  os << ")-(";
  for (int i = 0; i < d; ++i) os << (i ? "," : "") << y.k[i];
  os << ")";
  return os.str();
}

struct IndexHash {
  std::size_t operator()(const Index& h) const noexcept { return GridPointHash{}(GridPoint(h)); }
};

struct PairKeyHash {
  std::size_t operator()(const std::pair<GridPoint, GridPoint>& p) const noexcept {
    return GridPointHash{}(p.first) * 1000003u ^ GridPointHash{}(p.second);
  }
};

class KernelCellsModel final : public ConductivityModel {
 public:
  KernelCellsModel(KernelSpec k, double n, QuadratureConfig q) : k_(std::move(k)), n_(n), q_(q) {
    max_entries_ = std::max<std::size_t>(1024, q_.cache_bytes / 128);
  }

  double value(const GridPoint& x, const GridPoint& y) const override {
    const int d = k_.d;
    auto h = (y - x).k;
    if (sup_norm(h, d) <= 1) return 0.0;
    if (k_.stationary()) {
      // Even profile: canonical sign keeps C(x,y) and C(y,x) bit-identical.
      Index neg{};
      for (int i = 0; i < d; ++i) neg[i] = -h[i];
      if (neg < h) h = neg;
      {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = stationary_cache_.find(h);
        if (it != stationary_cache_.end()) return it->second;
      }
      const double v = cell_pair_average(k_, n_, GridPoint{}, GridPoint(h), q_).value;
      std::lock_guard<std::mutex> lock(mu_);
      if (stationary_cache_.size() >= max_entries_) stationary_cache_.clear();
      stationary_cache_.emplace(h, v);
      return v;
    }
    const auto key = x < y ? std::make_pair(x, y) : std::make_pair(y, x);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = lru_index_.find(key);
      if (it != lru_index_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second);
        return it->second->second;
      }
    }
    const double v = cell_pair_average(k_, n_, key.first, key.second, q_).value;
    std::lock_guard<std::mutex> lock(mu_);
    if (lru_index_.find(key) == lru_index_.end()) {
      lru_.emplace_front(key, v);
      lru_index_[key] = lru_.begin();
      if (lru_.size() > max_entries_) {
        lru_index_.erase(lru_.back().first);
        lru_.pop_back();
      }
    }
    return v;
  }
  bool stationary() const override { return k_.stationary(); }

 private:
  using Entry = std::pair<std::pair<GridPoint, GridPoint>, double>;
  KernelSpec k_;
  double n_;
  QuadratureConfig q_;
  std::size_t max_entries_;
  mutable std::mutex mu_;
  mutable std::unordered_map<Index, double, IndexHash> stationary_cache_;
  mutable std::list<Entry> lru_;
  mutable std::unordered_map<std::pair<GridPoint, GridPoint>, std::list<Entry>::iterator, PairKeyHash>
      lru_index_;
};

}  // namespace

KernelSpec isotropic_kernel(int d, double alpha, double scale) {
  auto k = from_profile(d, alpha, "isotropic", [alpha, d, scale](std::span<const double> h) {
    return scale * std::pow(euclid(h), -d - alpha);
  });
  k.kappa4 = scale;
  k.kappa5 = scale;
  k.lambda1 = scale;
  return k;
}

KernelSpec cone_kernel(double gamma, double alpha) {
  if (!(gamma > 0.0)) throw ConfigError("cone kernel: gamma must be positive");
  auto k = from_profile(2, alpha, "cone", [gamma, alpha](std::span<const double> h) {
    if (std::abs(h[1]) > gamma * std::abs(h[0])) return 0.0;
    return std::pow(h[0] * h[0] + h[1] * h[1], -0.5 * (2.0 + alpha));
  });
  const double t = std::atan(gamma);
  k.angular_breaks = {-M_PI + t, -t, t, M_PI - t};
  k.kappa5 = 1.0;
  k.lambda1 = 1.0;
  return k;
}

KernelSpec axes_kernel(double alpha, double halfwidth) {
  // With halfwidth 0 the kernel lives on two Lebesgue-null lines and is the
  // zero function almost everywhere.
  auto k = from_profile(2, alpha, "axes", [alpha, halfwidth](std::span<const double> h) {
    if (halfwidth <= 0.0) return 0.0;
    if (std::abs(h[0]) > halfwidth && std::abs(h[1]) > halfwidth) return 0.0;
    return std::pow(h[0] * h[0] + h[1] * h[1], -0.5 * (2.0 + alpha));
  });
  k.kappa5 = 1.0;
  k.lambda1 = 1.0;
  return k;
}

KernelSpec expr_kernel(int d, double alpha, const std::string& expression, std::vector<double> breaks) {
  if (d < 1 || d > kMaxDim) throw ConfigError("expr kernel: dimension must be 1..3");
  const Expression e(expression);
  KernelSpec k;
  k.d = d;
  k.alpha = alpha;
  k.name = "expr";
  k.angular_breaks = std::move(breaks);
  k.k = [e, d, alpha](std::span<const double> x, std::span<const double> y) {
    ExprArgs a;
    a.d = d;
    a.alpha = alpha;
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
      a.x[i] = x[i];
      a.y[i] = y[i];
      a.h[i] = y[i] - x[i];
      r2 += a.h[i] * a.h[i];
    }
    a.r = std::sqrt(r2);
    return e.eval(a);
  };
  if (e.stationary()) {
    k.profile = [e, d, alpha](std::span<const double> h) {
      ExprArgs a;
      a.d = d;
      a.alpha = alpha;
      double r2 = 0.0;
      for (int i = 0; i < d; ++i) {
        a.h[i] = h[i];
        a.y[i] = h[i];
        r2 += h[i] * h[i];
      }
      a.r = std::sqrt(r2);
      return e.eval(a);
    };
  }
  return k;
}

CellIntegral cell_pair_average(const KernelSpec& k, double n, const GridPoint& x, const GridPoint& y,
                               const QuadratureConfig& q) {
  if (sup_norm((y - x).k, k.d) <= 1) return {};
  // The 2d-dimensional non-stationary rule grows as 2^{2d} per level, so it
  // gets a single refinement.
  const int levels = (k.stationary() || k.d == 1) ? q.max_refinements : 0;
  double coarse = cell_integral_level(k, n, x, y, q.order, 1);
  int split = 2;
  for (int level = 0; level <= levels; ++level, split *= 2) {
    const double fine = cell_integral_level(k, n, x, y, q.order, split);
    const double err = std::abs(fine - coarse);
    if (err <= q.tolerance * std::abs(fine) || err <= 1e-300) return {fine, err};
    coarse = fine;
  }
  throw NumericError("kernel-cell quadrature did not reach tolerance for pair " + pair_text(x, y, k.d));
}

ConductivityField build_from_kernel(const KernelSpec& k, double n, QuadratureConfig q) {
  if (!(n > 0.0)) throw InvalidArgument("build_from_kernel: n must be positive");
  if (!k.k) throw InvalidArgument("build_from_kernel: kernel function missing");
  if (q.order < 1) throw InvalidArgument("quadrature order must be positive");
  ConductivityMeta meta;
  const double factor = std::pow(4.0 * k.d, 0.5 * (k.d + k.alpha));
  const auto upper = k.kappa5 ? k.kappa5 : k.lambda1;
  if (upper) meta.kappa1 = *upper * factor;
  if (k.kappa4) meta.kappa4 = *k.kappa4;
  if (k.kappa5) meta.kappa5 = *k.kappa5;
  if (k.lambda1) meta.Lambda1 = *k.lambda1;
  return ConductivityField(std::make_shared<KernelCellsModel>(k, n, q), ScaledLattice(k.d, n), k.alpha, meta,
                           1.0, "kernel_cells:" + k.name);
}

}  // namespace jumplab
