#include <algorithm>
#include <cmath>

#include "jumplab/chain.hpp"
#include "jumplab/errors.hpp"
#include "jumplab/parallel.hpp"

namespace jumplab {

namespace {

double position_distance(const ScaledLattice& lat, const GridPoint& a, const GridPoint& b) {
  double s = 0.0;
  for (int i = 0; i < lat.dim(); ++i) {
    const double t = (static_cast<double>(b.k[i]) - static_cast<double>(a.k[i])) / lat.rho();
    s += t * t;
  }
  return std::sqrt(s);
}

std::int64_t step_sup(const GridPoint& a, const GridPoint& b, int d) {
  std::int64_t m = 0;
  for (int i = 0; i < d; ++i) {
    const double t = std::abs(static_cast<double>(b.k[i]) - static_cast<double>(a.k[i]));
    if (t > 4e18) return INT64_MAX;
    m = std::max(m, b.k[i] > a.k[i] ? b.k[i] - a.k[i] : a.k[i] - b.k[i]);
  }
  return m;
}

constexpr std::uint64_t kExitTag = 0x45584954;
constexpr std::uint64_t kBigJumpTag = 0x42494a50;
constexpr std::uint64_t kLevyTag = 0x4c455659;

}  // namespace

GridPoint run_path(const JumpSampler& S, const GridPoint& x0, double t_max, RandomStream& rng,
                   const JumpVisitor& visit, bool* absorbed) {
  if (absorbed) *absorbed = false;
  GridPoint x = x0;
  double t = 0.0;
  for (;;) {
    const double rate = S.event_rate(x);
    if (!(rate > 0.0)) {
      if (absorbed) *absorbed = true;
      return x;
    }
    t += rng.exponential(rate);
    if (t > t_max) return x;
    const auto y = S.draw(x, rng);
    if (!y || *y == x) continue;
    const GridPoint from = x;
    x = *y;
    if (visit && !visit(t, from, x)) return x;
  }
}

std::uint64_t path_stream(std::uint64_t tag, std::uint64_t index) { return stream_key(tag, index); }

GridPoint PathSample::state_at(double t) const {
  auto it = std::upper_bound(events.begin(), events.end(), t,
                             [](double v, const PathEvent& e) { return v < e.time; });
  if (it == events.begin()) return start;
  return std::prev(it)->state;
}

GridPoint PathSample::final_state() const { return events.empty() ? start : events.back().state; }

PathSample sample_path(const JumpSampler& S, const GridPoint& x0, double t_max, std::uint64_t seed,
                       std::uint64_t stream) {
  PathSample p;
  p.start = x0;
  p.horizon = t_max;
  p.seed = seed;
  p.stream = stream;
  p.truncation_lambda = S.options().lambda;
  RandomStream rng(seed, stream);
  run_path(
      S, x0, t_max, rng,
      [&](double t, const GridPoint&, const GridPoint& to) {
        p.events.push_back({t, to});
        return true;
      },
      &p.absorbed);
  return p;
}

PathSample sample_path(const ConductivityField& C, const GridPoint& x0, double t_max,
                       std::optional<double> lambda, std::uint64_t seed) {
  SamplerOptions opt;
  opt.lambda = lambda;
  const JumpSampler S(C, opt);
  return sample_path(S, x0, t_max, seed, 0);
}

bool BallDomain::contains(const ScaledLattice& lat, const GridPoint& p) const {
  double s = 0.0;
  for (int i = 0; i < lat.dim(); ++i) {
    const double t = static_cast<double>(p.k[i]) / lat.rho() - center[i];
    s += t * t;
  }
  return std::sqrt(s) <= radius * (1.0 + 1e-12);
}

ExitHit exit_and_hit(const PathSample& path, const ScaledLattice& lat, const BallDomain& domain,
                     const std::function<bool(const GridPoint&)>& target) {
  ExitHit r;
  r.tau_censored = true;
  r.sigma_censored = true;
  r.tau = path.horizon;
  r.sigma = path.horizon;
  if (!domain.contains(lat, path.start)) {
    r.tau = 0.0;
    r.tau_censored = false;
  }
  if (target && target(path.start)) {
    r.sigma = 0.0;
    r.sigma_censored = false;
  }
  for (const auto& e : path.events) {
    if (r.tau_censored && !domain.contains(lat, e.state)) {
      r.tau = e.time;
      r.tau_censored = false;
    }
    if (target && r.sigma_censored && target(e.state)) {
      r.sigma = e.time;
      r.sigma_censored = false;
    }
    if (!r.tau_censored && (!target || !r.sigma_censored)) break;
  }
  return r;
}

ExitEstimate estimate_exit_prob(const JumpSampler& S, const GridPoint& x, double R, double gamma, double a,
                                std::size_t paths, std::uint64_t seed, std::optional<BigJumpSplit> split) {
  if (!(R > 0.0) || !(gamma > 0.0) || !(a > 0.0) || paths == 0)
    throw InvalidArgument("exit probability needs R, gamma, a > 0 and at least one path");
  const auto& lat = S.field().lattice();
  const double alpha = S.field().alpha();
  BallDomain dom{lat.position(x), a * R};
  const double horizon = gamma * std::pow(R, alpha);
  std::vector<char> hit(paths, 0);
  parallel_for(paths, [&](std::size_t i) {
    RandomStream rng(seed, path_stream(kExitTag, i));
    bool exited = !dom.contains(lat, x);
    if (!exited)
      run_path(S, x, horizon, rng, [&](double, const GridPoint&, const GridPoint& to) {
        if (!dom.contains(lat, to)) {
          exited = true;
          return false;
        }
        return true;
      });
    hit[i] = exited ? 1 : 0;
  });
  ExitEstimate out;
  out.paths = paths;
  for (char h : hit) out.successes += static_cast<std::size_t>(h);
  out.p_hat = static_cast<double>(out.successes) / static_cast<double>(paths);
  out.ci = wilson_interval(out.successes, paths);

  if (split) {
    if (!(split->r > 0.0) || !(split->s >= split->r)) throw InvalidArgument("big-jump split needs 0 < r <= s");
    const BallDomain inner{lat.position(x), split->r};
    const BallDomain outer{lat.position(x), split->s};
    // Horizon long enough that censoring is rare; censored paths are reported.
    const double cap = 1e3 * std::pow(split->r, alpha) + 1e3;
    std::vector<signed char> big(paths, -1);
    parallel_for(paths, [&](std::size_t i) {
      RandomStream rng(seed, path_stream(kBigJumpTag, i));
      signed char res = -1;
      run_path(S, x, cap, rng, [&](double, const GridPoint&, const GridPoint& to) {
        if (!inner.contains(lat, to)) {
          res = outer.contains(lat, to) ? 0 : 1;
          return false;
        }
        return true;
      });
      big[i] = res;
    });
    std::size_t n = 0, k = 0;
    for (auto b : big) {
      if (b < 0) {
        ++out.big_jump_censored;
        continue;
      }
      ++n;
      k += static_cast<std::size_t>(b);
    }
    if (n > 0) {
      out.big_jump_fraction = static_cast<double>(k) / static_cast<double>(n);
      out.big_jump_ci = wilson_interval(k, n);
    }
  }
  return out;
}

LevyResult levy_system_check(const JumpSampler& S, const LevyTestFunction& f, const GridPoint& x0, double T,
                             std::size_t paths, std::uint64_t seed) {
  if (S.options().lambda) throw InvalidArgument("the Levy-system check needs an untruncated sampler");
  if (!(T > 0.0) || paths == 0) throw InvalidArgument("Levy-system check needs T > 0 and paths > 0");
  if (!f.g || !f.time_weight || !f.time_integral) throw InvalidArgument("incomplete Levy test function");
  const auto& C = S.field();
  const int d = C.dim();
  const double mu = C.lattice().point_measure();
  const bool use_far = static_cast<bool>(f.far_value) && !f.rate_sum;
  std::optional<RateSum> stationary_cx;
  if (use_far && C.stationary()) stationary_cx = total_rate(C, GridPoint{});

  // Sum over y of g(x,y) C(x,y) rho^{-d}, plus a bound on its bias.
  struct Rate {
    double value;
    double bias;
  };
  auto rate_of = [&](const GridPoint& x) -> Rate {
    if (f.rate_sum) return {f.rate_sum(x), 0.0};
    double near = 0.0, near_c = 0.0;
    if (auto nb = C.model().neighbors(x)) {
      for (const auto& [y, w] : *nb) {
        const double c = w * C.multiplier();
        if (step_sup(x, y, d) <= f.near_radius) {
          near += f.g(x, y) * c;
          near_c += c;
        }
      }
    } else {
      for_each_offset(d, f.near_radius, [&](const Index& h) {
        if (norm2(h, d) == 0) return;
        const GridPoint y = x + GridPoint(h);
        const double c = C.evaluate(x, y);
        if (c == 0.0) return;
        near += f.g(x, y) * c;
        near_c += c;
      });
    }
    double bias = 0.0;
    if (use_far) {
      const double fv = f.far_value(x);
      if (fv != 0.0) {
        const RateSum cx = stationary_cx ? *stationary_cx : total_rate(C, x);
        near += fv * std::max(0.0, cx.value - near_c);
        bias = std::abs(fv) * cx.tail_bound * mu;
      }
    }
    return {near * mu, bias};
  };

  std::vector<double> lhs(paths), rhs(paths), bias(paths);
  parallel_for(paths, [&](std::size_t i) {
    RandomStream rng(seed, path_stream(kLevyTag, i));
    double l = 0.0, r = 0.0, b = 0.0, last = 0.0;
    auto hold = [&](const GridPoint& x, double t0, double t1) {
      if (t1 <= t0) return;
      const double w = f.time_integral(t0, t1);
      if (w == 0.0) return;
      const Rate q = rate_of(x);
      r += w * q.value;
      b += std::abs(w) * q.bias;
    };
    const GridPoint end = run_path(S, x0, T, rng, [&](double t, const GridPoint& from, const GridPoint& to) {
      hold(from, last, t);
      last = t;
      l += f.time_weight(t) * f.g(from, to);
      return true;
    });
    hold(end, last, T);
    lhs[i] = l;
    rhs[i] = r;
    bias[i] = b;
  });

  LevyResult out;
  out.paths = paths;
  std::vector<double> diff(paths);
  for (std::size_t i = 0; i < paths; ++i) {
    diff[i] = lhs[i] - rhs[i];
    out.rate_tail_bound = std::max(out.rate_tail_bound, bias[i]);
  }
  const auto L = mean_and_se(lhs), Rr = mean_and_se(rhs), D = mean_and_se(diff);
  out.lhs = L.mean;
  out.rhs = Rr.mean;
  out.lhs_se = L.se;
  out.rhs_se = Rr.se;
  out.combined_se = D.se;
  return out;
}

LevyTestFunction levy_zero() {
  LevyTestFunction f;
  f.name = "zero";
  f.time_weight = [](double) { return 1.0; };
  f.time_integral = [](double a, double b) { return b - a; };
  f.g = [](const GridPoint&, const GridPoint&) { return 0.0; };
  f.rate_sum = [](const GridPoint&) { return 0.0; };
  f.bound = 0.0;
  return f;
}

LevyTestFunction levy_big_jumps(const ScaledLattice& lat, double lambda0) {
  LevyTestFunction f;
  f.name = "big_jumps";
  f.time_weight = [](double) { return 1.0; };
  f.time_integral = [](double a, double b) { return b - a; };
  f.g = [lat, lambda0](const GridPoint& x, const GridPoint& y) {
    return position_distance(lat, x, y) > lambda0 ? 1.0 : 0.0;
  };
  f.near_radius = static_cast<std::int64_t>(std::ceil(lambda0 * lat.rho()));
  f.far_value = [](const GridPoint&) { return 1.0; };
  return f;
}

LevyTestFunction levy_hit_point(const ConductivityField& C, const GridPoint& y0) {
  LevyTestFunction f;
  f.name = "hit_point";
  f.time_weight = [](double) { return 1.0; };
  f.time_integral = [](double a, double b) { return b - a; };
  f.g = [y0](const GridPoint&, const GridPoint& y) { return y == y0 ? 1.0 : 0.0; };
  f.rate_sum = [C, y0](const GridPoint& x) { return x == y0 ? 0.0 : C.jump_rate(x, y0); };
  return f;
}

LevyTestFunction levy_discounted_jumps(const ScaledLattice& lat, double rate, std::int64_t near_radius,
                                       double cap) {
  if (!(cap > 0.0)) throw InvalidArgument("cap must be positive");
  LevyTestFunction f;
  f.name = "discounted_jumps";
  f.time_weight = [rate](double s) { return std::exp(-rate * s); };
  f.time_integral = [rate](double a, double b) {
    if (rate == 0.0) return b - a;
    return (std::exp(-rate * a) - std::exp(-rate * b)) / rate;
  };
  f.g = [lat, cap](const GridPoint& x, const GridPoint& y) {
    return std::min(position_distance(lat, x, y), cap) / cap;
  };
  f.near_radius = std::max<std::int64_t>(near_radius, static_cast<std::int64_t>(std::ceil(cap * lat.rho())));
  f.far_value = [](const GridPoint&) { return 1.0; };
  return f;
}

LevyTestFunction levy_local_displacement(const ScaledLattice& lat, double window, std::int64_t near_radius) {
  LevyTestFunction f;
  f.name = "local_displacement";
  f.time_weight = [](double) { return 1.0; };
  f.time_integral = [](double a, double b) { return b - a; };
  auto inside = [lat, window](const GridPoint& x) {
    return position_distance(lat, GridPoint{}, x) <= window ? 1.0 : 0.0;
  };
  f.g = [lat, inside](const GridPoint& x, const GridPoint& y) {
    const double r = position_distance(lat, x, y);
    return inside(x) * std::min(r * r, 1.0);
  };
  f.near_radius = std::max<std::int64_t>(near_radius, static_cast<std::int64_t>(std::ceil(lat.rho())));
  f.far_value = inside;
  return f;
}

LevyTestFunction levy_oscillating_forward(const ScaledLattice& lat, std::int64_t near_radius) {
  LevyTestFunction f;
  f.name = "oscillating_forward";
  f.time_weight = [](double s) { return std::cos(s) * std::cos(s); };
  f.time_integral = [](double a, double b) {
    return 0.5 * (b - a) + 0.25 * (std::sin(2 * b) - std::sin(2 * a));
  };
  const int d = lat.dim();
  f.g = [lat, near_radius, d](const GridPoint& x, const GridPoint& y) {
    if (y.k[0] <= x.k[0] || step_sup(x, y, d) > near_radius) return 0.0;
    return std::min(position_distance(lat, x, y), 2.0) / 2.0;
  };
  f.near_radius = near_radius;
  return f;
}

GammaTildeEstimate estimate_gamma_tilde(const JumpSampler& S, const GridPoint& x, std::vector<double> grid,
                                        std::size_t paths, std::uint64_t seed) {
  std::sort(grid.begin(), grid.end());
  GammaTildeEstimate out;
  out.grid = grid;
  for (double g : grid) {
    const auto e = estimate_exit_prob(S, x, 1.0, g, 1.0, paths, seed);
    out.p_hat.push_back(e.p_hat);
    out.ci.push_back(e.ci);
    if (e.p_hat <= 0.5) out.gamma = g;
  }
  return out;
}

}  // namespace jumplab
