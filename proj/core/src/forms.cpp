#include "jumplab/forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jumplab/errors.hpp"
#include "jumplab/parallel.hpp"
#include "jumplab/rng.hpp"

namespace jumplab {

namespace {

constexpr std::uint64_t kGridFunctionTag = 0x47524944;

// C_x restricted to |x - y| <= lambda (or the full row sum), with tail bound.
RateSum row_sum(const ConductivityField& C, const GridPoint& x, std::optional<double> lambda, TailPolicy tail) {
  if (!lambda) return total_rate(C, x, tail);
  RateSum out;
  out.exact = true;
  const auto& lat = C.lattice();
  if (auto nb = C.model().neighbors(x)) {
    for (const auto& [y, w] : *nb)
      if (lat.distance(x, y) <= *lambda * (1.0 + 1e-12)) out.value += w * C.multiplier();
    return out;
  }
  const int d = C.dim();
  const double r = *lambda * C.rho();
  const auto R = static_cast<std::int64_t>(std::floor(r * (1.0 + 1e-12)));
  const auto r2 = static_cast<std::int64_t>(std::floor(r * r * (1.0 + 1e-12)));
  for_each_offset(d, R, [&](const Index& h) {
    const auto q = norm2(h, d);
    if (q > 0 && q <= r2) out.value += C.evaluate(x, x + GridPoint(h));
  });
  return out;
}

}  // namespace

std::string to_string(FormKind k) {
  switch (k) {
    case FormKind::Discrete: return "discrete";
    case FormKind::DiscreteTruncated: return "discrete_truncated";
    case FormKind::Continuum: return "continuum";
    case FormKind::SobolevAlpha: return "sobolev_alpha";
  }
  return "unknown";
}

FormEvaluation discrete_bilinear(const ConductivityField& C, const GridFunction& f, const GridFunction& g,
                                 std::optional<double> lambda, TailPolicy tail) {
  if (lambda && !(*lambda > 0.0)) throw InvalidArgument("truncation lambda must be positive");
  FormEvaluation out;
  out.kind = lambda ? FormKind::DiscreteTruncated : FormKind::Discrete;
  out.cutoff = lambda;
  out.descriptor = C.family();

  std::vector<GridPoint> S;
  for (const auto& [p, v] : f)
    if (v != 0.0) S.push_back(p);
  for (const auto& [p, v] : g)
    if (v != 0.0) S.push_back(p);
  std::sort(S.begin(), S.end());
  S.erase(std::unique(S.begin(), S.end()), S.end());
  if (S.empty()) return out;

  auto at = [](const GridFunction& h, const GridPoint& p) {
    auto it = h.find(p);
    return it == h.end() ? 0.0 : it->second;
  };
  const auto& lat = C.lattice();
  auto keep = [&](const GridPoint& x, const GridPoint& y) {
    return !lambda || lat.distance(x, y) <= *lambda * (1.0 + 1e-12);
  };
  std::optional<RateSum> stationary_row;
  if (C.stationary() && !C.model().neighbors(S.front())) stationary_row = row_sum(C, GridPoint{}, lambda, tail);

  const std::size_t n = S.size();
  std::vector<double> inner(n, 0.0), outer(n, 0.0), bias(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    const auto& x = S[i];
    const double fx = at(f, x), gx = at(g, x);
    double pair = 0.0, in_c = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto& y = S[j];
      if (!keep(x, y)) continue;
      const double c = C.evaluate(x, y);
      if (c == 0.0) continue;
      in_c += c;
      pair += (fx - at(f, y)) * (gx - at(g, y)) * c;
    }
    inner[i] = 0.5 * pair;
    if (fx * gx != 0.0) {
      const RateSum rs = stationary_row ? *stationary_row : row_sum(C, x, lambda, tail);
      outer[i] = fx * gx * std::max(0.0, rs.value - in_c);
      bias[i] = std::abs(fx * gx) * rs.tail_bound;
    }
  });
  const double scale = lat.point_measure() * lat.point_measure();
  double v = 0.0, e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v += inner[i] + outer[i];
    e += bias[i];
  }
  out.value = v * scale;
  out.error_bound = e * scale;
  return out;
}

FormEvaluation discrete_form(const ConductivityField& C, const GridFunction& f, std::optional<double> lambda,
                             TailPolicy tail) {
  return discrete_bilinear(C, f, f, lambda, tail);
}

ConductivityField alpha_reference_field(int d, double alpha, double rho) {
  return isotropic_stable(d, alpha, rho, 1.0);
}

GridFunction random_grid_function(const Window& window, std::uint64_t seed, std::uint64_t index) {
  RandomStream rng(seed, stream_key(kGridFunctionTag, index));
  GridFunction f;
  for (const auto& p : window.points()) f.emplace(p, 2.0 * rng.uniform01() - 1.0);
  return f;
}

ComparisonReport form_comparison(const ConductivityField& C, const ChainAtlas& atlas, const Window& atlas_window,
                                 const std::vector<GridFunction>& corpus, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("comparison lambda must be positive");
  if (atlas_window.dim != C.dim()) throw InvalidArgument("atlas window dimension does not match the field");
  ComparisonReport rep;
  rep.N0 = atlas.certified_N0();
  rep.kappa2 = atlas.min_edge_bound;
  rep.theta2 = atlas.theta2;
  rep.lambda = lambda;
  rep.bound = rep.kappa2 > 0.0 ? std::pow(static_cast<double>(rep.N0), 3) / rep.kappa2
                               : std::numeric_limits<double>::infinity();
  const int d = C.dim();
  const auto ref = alpha_reference_field(d, C.alpha(), C.rho());
  const auto reach = static_cast<std::int64_t>(std::floor(lambda * C.rho() * (1.0 + 1e-12)));

  rep.rows.resize(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    const auto& f = corpus[i];
    ComparisonRow row;
    row.id = i;
    if (atlas.missing) {
      row.covered = false;
      row.gap = atlas.missing;
    } else {
      for (const auto& [x, v] : f) {
        if (v == 0.0) continue;
        for (int a = 0; a < d && row.covered; ++a) {
          for (std::int64_t s : {-reach, reach}) {
            GridPoint y = x;
            y.k[a] += s;
            if (!atlas_window.contains(y)) {
              row.covered = false;
              row.gap = std::make_pair(x, y);
              break;
            }
          }
        }
        if (!row.covered) break;
      }
    }
    if (row.covered) {
      row.e_alpha = discrete_form(ref, f, lambda).value;
      row.e_field = discrete_form(C, f, lambda * rep.theta2).value;
      if (row.e_alpha == 0.0) row.ratio = 0.0;
      else if (row.e_field == 0.0) row.ratio = std::numeric_limits<double>::infinity();
      else row.ratio = row.e_alpha / row.e_field;
      row.pass = row.ratio <= rep.bound * (1.0 + 1e-12);
    } else {
      row.pass = false;
    }
    rep.rows[i] = row;
  });
  for (const auto& r : rep.rows) {
    if (!r.covered) {
      ++rep.gaps;
      continue;
    }
    rep.max_ratio = std::max(rep.max_ratio, r.ratio);
    if (!r.pass) ++rep.violations;
  }
  return rep;
}

}  // namespace jumplab
