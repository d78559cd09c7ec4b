#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "jumplab/errors.hpp"
#include "jumplab/forms.hpp"
#include "jumplab/parallel.hpp"

namespace jumplab {

namespace {

// Midpoint rule with m points per axis per cube for
// int_P int_Q kern(x, y) 1{|x - y| >= eps} dx dy, cubes of side 1/n.
double midpoint_pair(const KernelSpec& k, bool reference, const GridPoint& P, const GridPoint& Q, double n, int m,
                     double eps) {
  const int d = k.d;
  const double step = 1.0 / (m * n);
  const double cell = std::pow(step, 2 * d);
  auto weight = [&](const double* h) {
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += h[i] * h[i];
    if (r2 < eps * eps) return 0.0;
    if (reference) return std::pow(r2, -0.5 * (d + k.alpha));
    return k.profile(std::span<const double>(h, d));
  };
  if (reference || k.stationary()) {
    // Sum over node differences with multiplicity prod_i (m - |delta_i|).
    double total = 0.0;
    int delta[kMaxDim] = {0, 0, 0};
    for (int i = 0; i < d; ++i) delta[i] = -(m - 1);
    while (true) {
      double h[kMaxDim] = {0, 0, 0};
      double mult = 1.0;
      for (int i = 0; i < d; ++i) {
        h[i] = static_cast<double>(Q.k[i] - P.k[i]) / n + delta[i] * step;
        mult *= m - std::abs(delta[i]);
      }
      total += mult * weight(h);
      int i = d - 1;
      while (i >= 0 && ++delta[i] > m - 1) delta[i--] = -(m - 1);
      if (i < 0) break;
    }
    return total * cell;
  }
  double total = 0.0;
  const int pts = static_cast<int>(std::pow(m, d));
  for (int a = 0; a < pts; ++a) {
    double x[kMaxDim] = {0, 0, 0};
    for (int i = 0, q = a; i < d; ++i, q /= m) x[i] = static_cast<double>(P.k[i]) / n + (q % m + 0.5) * step;
    for (int b = 0; b < pts; ++b) {
      double y[kMaxDim] = {0, 0, 0};
      double h[kMaxDim] = {0, 0, 0};
      for (int i = 0, q = b; i < d; ++i, q /= m) {
        y[i] = static_cast<double>(Q.k[i]) / n + (q % m + 0.5) * step;
        h[i] = y[i] - x[i];
      }
      double r2 = 0.0;
      for (int i = 0; i < d; ++i) r2 += h[i] * h[i];
      if (r2 < eps * eps) continue;
      total += k.k(std::span<const double>(x, d), std::span<const double>(y, d));
    }
  }
  return total * cell;
}

std::vector<GridPoint> box_points(int d, std::int64_t lo, std::int64_t hi) {
  Window w;
  w.dim = d;
  for (int i = 0; i < d; ++i) w.lo[i] = lo, w.hi[i] = hi;
  return w.points();
}

}  // namespace

double CubeChainReport::lower_constant() const {
  if (certified_M0 <= 0) return 0.0;
  return certified_Lambda2 / std::pow(static_cast<double>(certified_M0), 3);
}

CubeChainReport cube_chain_check(const KernelSpec& k, const CubeChainOptions& opt) {
  const int d = k.d;
  if (d < 1 || d > kMaxDim) throw InvalidArgument("kernel dimension out of range");
  if (!(opt.n > 0.0) || opt.radius < 1 || opt.margin < 0 || opt.M0 < 1 || opt.points_per_axis < 1)
    throw InvalidArgument("invalid cube-chain options");
  if (opt.epsilons.empty()) throw InvalidArgument("cube-chain check needs at least one epsilon");
  const std::size_t ne = opt.epsilons.size();
  const int m = opt.points_per_axis;

  const auto window = box_points(d, -opt.radius, opt.radius - 1);
  const auto cand = box_points(d, -opt.radius - opt.margin, opt.radius - 1 + opt.margin);
  const std::size_t N = cand.size();
  std::map<GridPoint, std::size_t> cand_index;
  for (std::size_t i = 0; i < N; ++i) cand_index.emplace(cand[i], i);

  // Edge integrals, by offset for stationary kernels, by candidate pair otherwise.
  const std::int64_t L = 2 * (opt.radius + opt.margin);
  const std::size_t side = static_cast<std::size_t>(2 * L + 1);
  std::size_t noff = 1;
  for (int i = 0; i < d; ++i) noff *= side;
  auto offset_index = [&](const GridPoint& P, const GridPoint& Q) {
    std::size_t idx = 0, mul = 1;
    for (int i = 0; i < d; ++i) {
      idx += static_cast<std::size_t>(Q.k[i] - P.k[i] + L) * mul;
      mul *= side;
    }
    return idx;
  };
  auto offset_point = [&](std::size_t idx) {
    GridPoint o;
    for (int i = 0; i < d; ++i) {
      o.k[i] = static_cast<std::int64_t>(idx % side) - L;
      idx /= side;
    }
    return o;
  };

  std::vector<double> ref(noff * ne, 0.0);
  parallel_for(noff, [&](std::size_t o) {
    const GridPoint off = offset_point(o);
    for (std::size_t e = 0; e < ne; ++e)
      ref[o * ne + e] = midpoint_pair(k, true, GridPoint{}, off, opt.n, m, opt.epsilons[e]);
  });
  std::vector<double> edge;
  const bool stationary = k.stationary();
  if (stationary) {
    edge.assign(noff * ne, 0.0);
    parallel_for(noff, [&](std::size_t o) {
      const GridPoint off = offset_point(o);
      for (std::size_t e = 0; e < ne; ++e)
        edge[o * ne + e] = midpoint_pair(k, false, GridPoint{}, off, opt.n, m, opt.epsilons[e]);
    });
  } else {
    edge.assign(N * N * ne, 0.0);
    parallel_for(N, [&](std::size_t a) {
      for (std::size_t b = 0; b < N; ++b)
        for (std::size_t e = 0; e < ne; ++e)
          edge[(a * N + b) * ne + e] = midpoint_pair(k, false, cand[a], cand[b], opt.n, m, opt.epsilons[e]);
    });
  }
  auto edge_at = [&](std::size_t a, std::size_t b, std::size_t e) {
    return stationary ? edge[offset_index(cand[a], cand[b]) * ne + e] : edge[(a * N + b) * ne + e];
  };

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& O : window)
    for (const auto& Q : window)
      if (!(O == Q)) pairs.emplace_back(cand_index.at(O), cand_index.at(Q));

  std::vector<std::optional<CubeChainCertificate>> found(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t pi) {
    const auto [o, q] = pairs[pi];
    std::vector<double> thr(ne), refv(ne);
    for (std::size_t e = 0; e < ne; ++e) {
      refv[e] = ref[offset_index(cand[o], cand[q]) * ne + e];
      thr[e] = opt.Lambda2 * refv[e];
    }
    auto ok = [&](std::size_t a, std::size_t b) {
      for (std::size_t e = 0; e < ne; ++e) {
        const double v = edge_at(a, b, e);
        if (!(v > 0.0) || v < thr[e]) return false;
      }
      return true;
    };
    std::vector<std::ptrdiff_t> parent(N, -1);
    std::vector<char> seen(N, 0);
    seen[o] = 1;
    std::vector<std::size_t> frontier = {o};
    bool hit = false;
    for (int depth = 0; depth < opt.M0 && !hit && !frontier.empty(); ++depth) {
      std::vector<std::size_t> next;
      for (auto u : frontier) {
        for (std::size_t v = 0; v < N && !hit; ++v) {
          if (seen[v] || !ok(u, v)) continue;
          seen[v] = 1;
          parent[v] = static_cast<std::ptrdiff_t>(u);
          if (v == q) hit = true;
          next.push_back(v);
        }
        if (hit) break;
      }
      frontier.swap(next);
    }
    if (!hit) return;
    CubeChainCertificate c;
    c.from = cand[o];
    c.to = cand[q];
    std::vector<std::size_t> seq;
    for (std::ptrdiff_t v = static_cast<std::ptrdiff_t>(q); v >= 0; v = parent[static_cast<std::size_t>(v)]) {
      seq.push_back(static_cast<std::size_t>(v));
      if (static_cast<std::size_t>(v) == o) break;
    }
    std::reverse(seq.begin(), seq.end());
    for (auto v : seq) c.cubes.push_back(cand[v]);
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      double r = std::numeric_limits<double>::infinity();
      for (std::size_t e = 0; e < ne; ++e) r = std::min(r, edge_at(seq[i], seq[i + 1], e) / refv[e]);
      c.edge_ratio.push_back(r);
    }
    found[pi] = std::move(c);
  });

  CubeChainReport rep;
  rep.pairs = pairs.size();
  rep.certified_Lambda2 = std::numeric_limits<double>::infinity();
  std::map<std::pair<GridPoint, GridPoint>, int> usage;
  std::set<std::pair<std::size_t, std::size_t>> used_edges;
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    if (!found[pi]) {
      if (!rep.missing) rep.missing = std::make_pair(cand[pairs[pi].first], cand[pairs[pi].second]);
      continue;
    }
    const auto& c = *found[pi];
    rep.max_length = std::max(rep.max_length, c.length());
    for (std::size_t i = 0; i + 1 < c.cubes.size(); ++i) {
      rep.multiplicity = std::max(rep.multiplicity, ++usage[{c.cubes[i], c.cubes[i + 1]}]);
      rep.certified_Lambda2 = std::min(rep.certified_Lambda2, c.edge_ratio[i]);
      used_edges.emplace(cand_index.at(c.cubes[i]), cand_index.at(c.cubes[i + 1]));
    }
    rep.certificates.push_back(c);
  }
  if (rep.certificates.empty()) rep.certified_Lambda2 = 0.0;
  rep.certified_M0 = std::max(rep.max_length, rep.multiplicity);

  // Refinement estimate on the edges actually used and on the reference integrals.
  std::vector<std::pair<std::size_t, std::size_t>> edges(used_edges.begin(), used_edges.end());
  std::vector<double> change(edges.size(), 0.0);
  parallel_for(edges.size(), [&](std::size_t i) {
    const auto [a, b] = edges[i];
    for (std::size_t e = 0; e < ne; ++e) {
      const double base = edge_at(a, b, e);
      const double fine = midpoint_pair(k, false, cand[a], cand[b], opt.n, 2 * m, opt.epsilons[e]);
      if (fine > 0.0) change[i] = std::max(change[i], std::abs(fine - base) / fine);
    }
  });
  for (double c : change) rep.quadrature_error = std::max(rep.quadrature_error, c);
  return rep;
}

}  // namespace jumplab
