#include <algorithm>
#include <cmath>
#include <mutex>
#include <unordered_map>

#include "jumplab/chain.hpp"
#include "jumplab/errors.hpp"

namespace jumplab {

namespace {

// Walker alias table.
struct AliasTable {
  std::vector<double> prob;
  std::vector<std::uint32_t> alias;

  void build(const std::vector<double>& w) {
    const std::size_t n = w.size();
    prob.assign(n, 0.0);
    alias.assign(n, 0);
    if (n == 0) return;
    double total = 0.0;
    for (double v : w) total += v;
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = w[i] * static_cast<double>(n) / total;
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const auto s = small.back();
      small.pop_back();
      const auto l = large.back();
      prob[s] = scaled[s];
      alias[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (auto i : large) prob[i] = 1.0, alias[i] = i;
    for (auto i : small) prob[i] = 1.0, alias[i] = i;
  }

  std::size_t draw(RandomStream& rng) const {
    const auto i = static_cast<std::size_t>(rng.below(prob.size()));
    return rng.uniform01() < prob[i] ? i : alias[i];
  }
};

constexpr std::int64_t kMaxFarStep = std::int64_t{1} << 60;
constexpr std::int64_t kCoordLimit = std::int64_t{1} << 62;

double shell_size(int d, double m) { return std::pow(2 * m + 1, d) - std::pow(2 * m - 1, d); }

std::int64_t saturating_add(std::int64_t a, std::int64_t b) {
  const std::int64_t s = a + b;  // |a|, |b| <= 2^62 so no overflow
  return std::clamp(s, -kCoordLimit, kCoordLimit);
}

struct Row {
  std::vector<GridPoint> targets;
  AliasTable alias;
  double rate = 0.0;
};

}  // namespace

struct JumpSampler::Impl {
  enum class Mode { Stationary, Envelope, Neighbors };

  ConductivityField C;
  SamplerOptions opt;
  Mode mode = Mode::Stationary;
  int d = 1;
  double mu = 1.0;
  double alpha = 1.0;

  std::vector<Index> offsets;
  std::vector<double> envelope;  // proposal weights in C units (envelope mode)
  AliasTable table;
  double near_rate = 0.0;
  std::int64_t M = 0;

  bool has_far = false;
  double far_B = 0.0;
  double far_rate = 0.0;

  mutable std::mutex rows_mu;
  mutable std::unordered_map<GridPoint, std::shared_ptr<const Row>, GridPointHash> rows;

  explicit Impl(const ConductivityField& field, SamplerOptions o) : C(field), opt(o) {
    d = C.dim();
    mu = C.lattice().point_measure();
    alpha = C.alpha();
    const auto& model = C.model();
    if (opt.lambda && !(*opt.lambda > 0.0)) throw InvalidArgument("truncation lambda must be positive");
    if (model.neighbors(GridPoint{})) {
      mode = Mode::Neighbors;
      return;
    }
    mode = C.stationary() ? Mode::Stationary : Mode::Envelope;
    const auto A = C.a2_integer_constant();
    if (mode == Mode::Envelope && !A)
      throw ConfigError("sampling a non-stationary infinite-range field needs kappa1");
    auto weight = [&](const Index& h) {
      return mode == Mode::Stationary ? C.evaluate(GridPoint{}, GridPoint(h))
                                      : *A * std::pow(static_cast<double>(norm2(h, d)), -0.5 * (d + alpha));
    };

    std::vector<Index> cand;
    if (opt.lambda) {
      const double r = *opt.lambda * C.rho();
      const auto R = static_cast<std::int64_t>(std::floor(r * (1.0 + 1e-12)));
      if (std::pow(2.0 * static_cast<double>(R) + 1.0, d) > 4.0 * static_cast<double>(opt.max_table) * 8)
        throw ResourceLimit("truncation ball exceeds the sampler table cap");
      const auto r2 = static_cast<std::int64_t>(std::floor(r * r * (1.0 + 1e-12)));
      for_each_offset(d, R, [&](const Index& h) {
        const auto n2 = norm2(h, d);
        if (n2 > 0 && n2 <= r2) cand.push_back(h);
      });
      M = R;
    } else if (auto R0 = model.support_radius()) {
      for_each_offset(d, *R0, [&](const Index& h) {
        if (norm2(h, d) > 0) cand.push_back(h);
      });
      M = *R0;
    } else {
      if (!A) throw ConfigError("sampling an infinite-range field needs kappa1 for the far-jump envelope");
      far_B = *A * 2.0 * d * std::pow(3.0, d - 1);
      double S = 0.0;
      for_each_offset(d, 4, [&](const Index& h) {
        if (norm2(h, d) > 0) S += weight(h);
      });
      if (!(S > 0.0)) S = far_B;
      double Mreal = std::ceil(std::pow(far_B / (alpha * opt.epsilon * S), 1.0 / alpha));
      const double Mcap = std::floor((std::pow(static_cast<double>(opt.max_table), 1.0 / d) - 1.0) / 2.0);
      Mreal = std::clamp(Mreal, 4.0, std::max(4.0, Mcap));
      M = static_cast<std::int64_t>(Mreal);
      for_each_offset(d, M, [&](const Index& h) {
        if (norm2(h, d) > 0) cand.push_back(h);
      });
      has_far = true;
      far_rate = far_B * std::pow(static_cast<double>(M), -alpha) / alpha * mu;
    }
    std::vector<double> w;
    w.reserve(cand.size());
    for (const auto& h : cand) {
      const double v = weight(h);
      if (!(v >= 0.0) || !std::isfinite(v)) throw ContractViolation("conductivity returned a negative or non-finite value");
      if (v == 0.0) continue;
      offsets.push_back(h);
      w.push_back(v);
    }
    double s = 0.0;
    for (double v : w) s += v;
    near_rate = s * mu;
    if (mode == Mode::Envelope) envelope = w;
    table.build(w);
  }

  std::shared_ptr<const Row> row(const GridPoint& x) const {
    {
      std::lock_guard<std::mutex> lock(rows_mu);
      auto it = rows.find(x);
      if (it != rows.end()) return it->second;
    }
    auto r = std::make_shared<Row>();
    std::vector<double> w;
    for (const auto nb = C.model().neighbors(x); const auto& [y, c] : *nb) {
      if (opt.lambda && C.lattice().distance(x, y) > *opt.lambda * (1.0 + 1e-12)) continue;
      r->targets.push_back(y);
      w.push_back(c * C.multiplier());
    }
    double s = 0.0;
    for (double v : w) s += v;
    r->rate = s * mu;
    r->alias.build(w);
    std::lock_guard<std::mutex> lock(rows_mu);
    return rows.emplace(x, std::move(r)).first->second;
  }

  double far_density(std::int64_t m) const {
    const double md = static_cast<double>(m);
    const double mass = std::pow(md, -alpha) * std::expm1(-alpha * std::log1p(-1.0 / md)) / alpha;
    return far_B * mass / shell_size(d, md);
  }

  std::optional<GridPoint> draw_far(const GridPoint& x, RandomStream& rng) const {
    const double X = static_cast<double>(M) * std::pow(rng.uniform_open01(), -1.0 / alpha);
    const std::int64_t m = X >= static_cast<double>(kMaxFarStep)
                               ? kMaxFarStep
                               : std::max<std::int64_t>(M + 1, static_cast<std::int64_t>(std::ceil(X)));
    // Uniform point of the sup-norm shell |h|_inf = m: face i has coordinates
    // before i strictly inside, coordinate i = +-m, coordinates after i free.
    const double md = static_cast<double>(m);
    double counts[kMaxDim];
    double total = 0.0;
    for (int i = 0; i < d; ++i) {
      counts[i] = std::pow(2 * md - 1, i) * std::pow(2 * md + 1, d - 1 - i);
      total += counts[i];
    }
    double u = rng.uniform01() * total;
    int face = d - 1;
    for (int i = 0; i < d; ++i) {
      if (u < counts[i]) {
        face = i;
        break;
      }
      u -= counts[i];
    }
    Index h{};
    for (int i = 0; i < d; ++i) {
      if (i < face) h[i] = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(2 * m - 1))) - (m - 1);
      else if (i == face) h[i] = (rng.next_u32() & 1u) ? m : -m;
      else h[i] = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(2 * m + 1))) - m;
    }
    GridPoint y;
    for (int i = 0; i < d; ++i) y.k[i] = saturating_add(x.k[i], h[i]);
    const double c = C.evaluate(x, y);
    const double D = far_density(m);
    const double ratio = c / D;
    if (ratio > 1.0 + 1e-9) throw ContractViolation("conductivity exceeds its kappa1 envelope in the far region");
    if (rng.uniform01() < ratio) return y;
    return std::nullopt;
  }
};

JumpSampler::JumpSampler(const ConductivityField& C, SamplerOptions opt)
    : impl_(std::make_unique<Impl>(C, opt)) {}
JumpSampler::~JumpSampler() = default;
JumpSampler::JumpSampler(JumpSampler&&) noexcept = default;

const ConductivityField& JumpSampler::field() const { return impl_->C; }
std::int64_t JumpSampler::near_radius() const { return impl_->M; }
double JumpSampler::far_rate() const { return impl_->far_rate; }
const SamplerOptions& JumpSampler::options() const { return impl_->opt; }

double JumpSampler::event_rate(const GridPoint& x) const {
  if (impl_->mode == Impl::Mode::Neighbors) return impl_->row(x)->rate;
  return impl_->near_rate + impl_->far_rate;
}

std::optional<GridPoint> JumpSampler::draw(const GridPoint& x, RandomStream& rng) const {
  const Impl& s = *impl_;
  if (s.mode == Impl::Mode::Neighbors) {
    const auto r = s.row(x);
    if (r->targets.empty()) return std::nullopt;
    return r->targets[r->alias.draw(rng)];
  }
  if (s.has_far) {
    const double u = rng.uniform01() * (s.near_rate + s.far_rate);
    if (u >= s.near_rate) return s.draw_far(x, rng);
  }
  if (s.offsets.empty()) return std::nullopt;
  const std::size_t i = s.table.draw(rng);
  const auto& h = s.offsets[i];
  GridPoint y;
  for (int k = 0; k < s.d; ++k) y.k[k] = saturating_add(x.k[k], h[k]);
  if (s.mode == Impl::Mode::Stationary) return y;
  const double ratio = s.C.evaluate(x, y) / s.envelope[i];
  if (ratio > 1.0 + 1e-9) throw ContractViolation("conductivity exceeds its kappa1 envelope");
  if (rng.uniform01() < ratio) return y;
  return std::nullopt;
}

JumpDistribution step_distribution(const ConductivityField& C, const GridPoint& x, TailPolicy tail,
                                   double epsilon) {
  JumpDistribution out;
  out.source = x;
  const auto& model = C.model();
  const int d = C.dim();
  const RateSum cx = total_rate(C, x, tail);
  out.total_rate = cx.value;
  if (!(cx.value > 0.0)) throw AbsorbingState("state has zero total rate");
  if (auto nb = model.neighbors(x)) {
    for (const auto& [y, w] : *nb) out.support.emplace_back(y, w * C.multiplier() / cx.value);
    return out;
  }
  std::int64_t R;
  if (auto R0 = model.support_radius()) {
    R = *R0;
  } else {
    const auto A = C.a2_integer_constant();
    if (!A) throw ConfigError("kappa1 is required to bound the unsampled jump mass");
    R = 1;
    while (*A * lattice_tail_bound(d, C.alpha(), R) > epsilon * cx.value &&
           std::pow(2.0 * static_cast<double>(2 * R) + 1.0, d) <= static_cast<double>(tail.max_points))
      R *= 2;
    out.tail_mass_bound = *A * lattice_tail_bound(d, C.alpha(), R) / cx.value;
  }
  for_each_offset(d, R, [&](const Index& h) {
    if (norm2(h, d) == 0) return;
    const GridPoint y = x + GridPoint(h);
    const double c = C.evaluate(x, y);
    if (c > 0.0) out.support.emplace_back(y, c / cx.value);
  });
  return out;
}

}  // namespace jumplab
