#include "jumplab/conductivity.hpp"

#include <cmath>

#include "jumplab/errors.hpp"

namespace jumplab {

void ConductivityMeta::check() const {
  auto pos = [](const std::optional<double>& v, const char* name) {
    if (v && !(*v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  pos(kappa1, "kappa1");
  pos(kappa2, "kappa2");
  pos(kappa3, "kappa3");
  pos(kappa4, "kappa4");
  pos(kappa5, "kappa5");
  pos(Theta1, "Theta1");
  pos(Lambda1, "Lambda1");
  pos(Lambda2, "Lambda2");
  if (N0 && *N0 < 1) throw ConfigError("N0 must be a positive integer");
  if (M0 && *M0 < 1) throw ConfigError("M0 must be a positive integer");
  if (kappa4 && kappa5 && *kappa4 > *kappa5) throw ConfigError("kappa4 must not exceed kappa5");
}

ConductivityField::ConductivityField(std::shared_ptr<const ConductivityModel> model,
                                     ScaledLattice lattice, double alpha, ConductivityMeta meta,
                                     double multiplier, std::string family)
    : model_(std::move(model)),
      lattice_(lattice),
      alpha_(alpha),
      meta_(std::move(meta)),
      multiplier_(multiplier),
      family_(std::move(family)) {
  if (!model_) throw InvalidArgument("conductivity model is null");
  if (!(alpha_ > 0.0 && alpha_ < 2.0)) throw InvalidArgument("alpha must lie in (0, 2)");
  if (!(multiplier_ > 0.0) || !std::isfinite(multiplier_)) throw InvalidArgument("bad multiplier");
  meta_.check();
}

std::optional<double> ConductivityField::a2_integer_constant() const {
  if (!meta_.kappa1) return std::nullopt;
  return *meta_.kappa1 * std::pow(rho(), dim() + alpha_);
}

ConductivityField ConductivityField::with_meta(ConductivityMeta meta) const {
  return ConductivityField(model_, lattice_, alpha_, std::move(meta), multiplier_, family_);
}

double lattice_tail_bound(int d, double alpha, std::int64_t M) {
  if (M < 1) throw InvalidArgument("tail radius must be >= 1");
  const double m = static_cast<double>(M);
  switch (d) {
    case 1: return 2.0 * std::pow(m, -alpha) / alpha;
    case 2: return 8.0 * std::pow(m, -alpha) / alpha;
    default: return 24.0 * std::pow(m, -alpha) / alpha + 2.0 * std::pow(m, -2.0 - alpha) / (2.0 + alpha);
  }
}

double lattice_zeta_1d(double alpha) { return 2.0 * std::riemann_zeta(1.0 + alpha); }

RateSum total_rate(const ConductivityField& C, const GridPoint& x, TailPolicy tail) {
  const auto& model = C.model();
  RateSum out;
  if (auto nb = model.neighbors(x)) {
    double s = 0.0;
    for (const auto& [y, w] : *nb) s += w;
    out.value = s * C.multiplier();
    out.exact = true;
    return out;
  }
  const int d = C.dim();
  if (auto R = model.support_radius()) {
    double s = 0.0;
    for_each_offset(d, *R, [&](const Index& h) {
      if (sup_norm(h, d) == 0) return;
      s += model.value(x, x + GridPoint(h));
    });
    out.value = s * C.multiplier();
    out.exact = true;
    return out;
  }
  if (tail.kind != TailPolicy::Kind::Truncate) {
    if (auto e = model.exact_row_sum(x)) {
      out.value = *e * C.multiplier();
      out.exact = true;
      return out;
    }
    if (tail.kind == TailPolicy::Kind::ClosedForm)
      throw ConfigError("no closed-form row sum for family '" + C.family() + "'");
  }
  const auto a2 = C.a2_integer_constant();
  if (!a2) throw ConfigError("kappa1 is required to bound the tail of an infinite-support field");
  std::int64_t R = std::max<std::int64_t>(1, tail.radius);
  while (R > 1 && std::pow(2.0 * static_cast<double>(R) + 1.0, d) > static_cast<double>(tail.max_points)) R /= 2;
  double s = 0.0;
  for_each_offset(d, R, [&](const Index& h) {
    if (sup_norm(h, d) == 0) return;
    s += model.value(x, x + GridPoint(h));
  });
  out.value = s * C.multiplier();
  out.tail_bound = *a2 * lattice_tail_bound(d, C.alpha(), R);
  out.radius = R;
  return out;
}

ConductivityField scale_conductivity(const ConductivityField& C, double rho) {
  if (C.rho() != 1.0) throw InvalidArgument("scale_conductivity expects a field on Z^d (rho = 1)");
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  ConductivityMeta meta = C.meta();
  if (meta.Theta1) *meta.Theta1 /= rho;
  return ConductivityField(C.model_ptr(), ScaledLattice(C.dim(), rho), C.alpha(), meta,
                           C.multiplier() * std::pow(rho, C.dim() + C.alpha()), C.family());
}

}  // namespace jumplab
