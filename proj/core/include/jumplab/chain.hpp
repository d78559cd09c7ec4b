#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jumplab/conductivity.hpp"
#include "jumplab/rng.hpp"
#include "jumplab/stats.hpp"

namespace jumplab {

struct JumpDistribution {
  GridPoint source;
  std::vector<std::pair<GridPoint, double>> support;  // (target, probability)
  double total_rate = 0.0;                            // C_x
  double tail_mass_bound = 0.0;
};

// P(x -> y) = C(x,y) / C_x over the enumerated support; the unsampled tail
// mass is certified through kappa1 to be at most epsilon when the radius cap
// allows it.
JumpDistribution step_distribution(const ConductivityField& C, const GridPoint& x, TailPolicy tail = {},
                                   double epsilon = 1e-6);

struct SamplerOptions {
  double epsilon = 1e-6;              // far-region mass relative to the near region
  std::size_t max_table = 1u << 20;   // alias-table entry cap
  std::optional<double> lambda;       // drop jumps longer than lambda (positions)
};

// Exact jump sampler for the continuous-time chain. Events fire at rate
// event_rate(x); each event proposes a target that is accepted with the
// thinning ratio, a rejection being a null event (no jump). The accepted
// jumps then have rates exactly C(x,y) rho^{-d}.
class JumpSampler {
 public:
  explicit JumpSampler(const ConductivityField& C, SamplerOptions opt = {});
  ~JumpSampler();
  JumpSampler(JumpSampler&&) noexcept;

  double event_rate(const GridPoint& x) const;
  // Target of one event from x, or nullopt for a null event.
  std::optional<GridPoint> draw(const GridPoint& x, RandomStream& rng) const;

  const ConductivityField& field() const;
  std::int64_t near_radius() const;
  double far_rate() const;
  const SamplerOptions& options() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

struct PathEvent {
  double time = 0.0;
  GridPoint state;
};

struct PathSample {
  GridPoint start;
  std::vector<PathEvent> events;  // strictly increasing times, states differ consecutively
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::optional<double> truncation_lambda;
  bool absorbed = false;

  GridPoint state_at(double t) const;
  GridPoint final_state() const;
};

// Visitor called once per jump: (time, from, to). Returning false stops.
using JumpVisitor = std::function<bool(double, const GridPoint&, const GridPoint&)>;

// Core simulation loop on one stream. Returns the final state; sets
// *absorbed when a zero-rate state is reached.
GridPoint run_path(const JumpSampler& S, const GridPoint& x0, double t_max, RandomStream& rng,
                   const JumpVisitor& visit, bool* absorbed = nullptr);

// Stream id of path `index` under a master seed and an experiment tag.
std::uint64_t path_stream(std::uint64_t tag, std::uint64_t index);

PathSample sample_path(const JumpSampler& S, const GridPoint& x0, double t_max, std::uint64_t seed,
                       std::uint64_t stream = 0);
PathSample sample_path(const ConductivityField& C, const GridPoint& x0, double t_max,
                       std::optional<double> lambda, std::uint64_t seed);

// Closed Euclidean ball in positions.
struct BallDomain {
  Vec center{};
  double radius = 0.0;
  bool contains(const ScaledLattice& lat, const GridPoint& p) const;
};

struct ExitHit {
  double tau = 0.0;
  bool tau_censored = false;
  double sigma = 0.0;
  bool sigma_censored = false;
};

ExitHit exit_and_hit(const PathSample& path, const ScaledLattice& lat, const BallDomain& domain,
                     const std::function<bool(const GridPoint&)>& target = nullptr);

struct BigJumpSplit {
  double r = 0.0;
  double s = 0.0;
};

struct ExitEstimate {
  double p_hat = 0.0;
  Interval ci;
  std::size_t successes = 0;
  std::size_t paths = 0;
  // Fraction of paths whose first exit from B(x,r) lands outside B(x,s).
  std::optional<double> big_jump_fraction;
  std::optional<Interval> big_jump_ci;
  std::size_t big_jump_censored = 0;
};

// P^x(tau(B(x, a R)) < gamma R^alpha) with a Wilson 95% interval.
ExitEstimate estimate_exit_prob(const JumpSampler& S, const GridPoint& x, double R, double gamma, double a,
                                std::size_t paths, std::uint64_t seed,
                                std::optional<BigJumpSplit> split = std::nullopt);

// f(s, from, to) = time_weight(s) * g(from, to), bounded with g(x, x) = 0.
struct LevyTestFunction {
  std::string name;
  std::function<double(double)> time_weight;
  std::function<double(double, double)> time_integral;  // integral of time_weight over [a, b]
  std::function<double(const GridPoint&, const GridPoint&)> g;
  // g is evaluated explicitly for |to - from|_inf <= near_radius (integer
  // steps) and equals far_value(from) beyond it (empty: zero).
  std::int64_t near_radius = 0;
  std::function<double(const GridPoint&)> far_value;
  // Optional direct evaluation of sum_y g(x,y) C(x,y) rho^{-d}.
  std::function<double(const GridPoint&)> rate_sum;
  double bound = 1.0;  // sup |f|
};

struct LevyResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double combined_se = 0.0;  // standard error of the per-path difference
  std::size_t paths = 0;
  double rate_tail_bound = 0.0;  // bound on the rhs bias from a truncated C_x
};

LevyResult levy_system_check(const JumpSampler& S, const LevyTestFunction& f, const GridPoint& x0, double T,
                             std::size_t paths, std::uint64_t seed);

// Canned test functions.
LevyTestFunction levy_zero();
LevyTestFunction levy_big_jumps(const ScaledLattice& lat, double lambda0);
LevyTestFunction levy_hit_point(const ConductivityField& C, const GridPoint& y0);
LevyTestFunction levy_discounted_jumps(const ScaledLattice& lat, double rate, std::int64_t near_radius,
                                       double cap);
LevyTestFunction levy_local_displacement(const ScaledLattice& lat, double window, std::int64_t near_radius);
LevyTestFunction levy_oscillating_forward(const ScaledLattice& lat, std::int64_t near_radius);

struct GammaTildeEstimate {
  std::vector<double> grid;
  std::vector<double> p_hat;
  std::vector<Interval> ci;
  std::optional<double> gamma;  // largest grid value with p_hat <= 1/2
};

// Working choice of the time fraction gamma(1, 1/2): exit probability of the
// unit ball before gamma, scanned over a grid.
GammaTildeEstimate estimate_gamma_tilde(const JumpSampler& S, const GridPoint& x, std::vector<double> grid,
                                        std::size_t paths, std::uint64_t seed);

}  // namespace jumplab
