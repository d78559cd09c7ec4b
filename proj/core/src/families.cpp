#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "jumplab/conductivity.hpp"
#include "jumplab/errors.hpp"

namespace jumplab {

namespace {

double inv_power(const Index& h, int d, double alpha) {
  return std::pow(static_cast<double>(norm2(h, d)), -0.5 * (d + alpha));
}

class IsotropicModel final : public ConductivityModel {
 public:
  IsotropicModel(int d, double alpha, double kappa) : d_(d), alpha_(alpha), kappa_(kappa) {}
  double value(const GridPoint& x, const GridPoint& y) const override {
    const auto h = (y - x).k;
    if (norm2(h, d_) == 0) return 0.0;
    return kappa_ * inv_power(h, d_, alpha_);
  }
  bool stationary() const override { return true; }
  std::optional<double> exact_row_sum(const GridPoint&) const override {
    if (d_ == 1) return kappa_ * lattice_zeta_1d(alpha_);
    return std::nullopt;
  }

 private:
  int d_;
  double alpha_, kappa_;
};

class ConeModel final : public ConductivityModel {
 public:
  ConeModel(double gamma, double alpha, PairModulation g) : gamma_(gamma), alpha_(alpha), g_(std::move(g)) {}
  double value(const GridPoint& x, const GridPoint& y) const override {
    const auto h = (y - x).k;
    if (h[0] == 0 && h[1] == 0) return 0.0;
    if (std::abs(static_cast<double>(h[1])) > gamma_ * std::abs(static_cast<double>(h[0]))) return 0.0;
    const double w = inv_power(h, 2, alpha_);
    return g_ ? g_(x, y) * w : w;
  }
  bool stationary() const override { return !g_; }

 private:
  double gamma_, alpha_;
  PairModulation g_;
};

class AxesModel final : public ConductivityModel {
 public:
  explicit AxesModel(double alpha) : alpha_(alpha) {}
  double value(const GridPoint& x, const GridPoint& y) const override {
    const auto h = (y - x).k;
    if ((h[0] == 0) == (h[1] == 0)) return 0.0;
    return inv_power(h, 2, alpha_);
  }
  bool stationary() const override { return true; }

 private:
  double alpha_;
};

struct PairHash {
  std::size_t operator()(const std::pair<GridPoint, GridPoint>& p) const noexcept {
    GridPointHash h;
    return h(p.first) * 31 + h(p.second);
  }
};

class TableModel final : public ConductivityModel {
 public:
  TableModel(int d, std::vector<TableEntry> entries) {
    for (auto& e : entries) {
      if (!(e.value >= 0.0) || !std::isfinite(e.value))
        throw ContractViolation("table conductivity entries must be finite and nonnegative");
      if (e.value == 0.0) continue;
      if (e.x == e.y) throw ContractViolation("table conductivity has a nonzero diagonal entry");
      values_[{e.x, e.y}] += e.value;
      radius_ = std::max(radius_, sup_norm((e.y - e.x).k, d));
    }
    for (const auto& [key, v] : values_) rows_[key.first].push_back({key.second, v});
    for (auto& [x, row] : rows_) std::sort(row.begin(), row.end());
  }
  double value(const GridPoint& x, const GridPoint& y) const override {
    auto it = values_.find({x, y});
    return it == values_.end() ? 0.0 : it->second;
  }
  bool stationary() const override { return false; }
  std::optional<std::int64_t> support_radius() const override { return radius_; }
  std::optional<std::vector<std::pair<GridPoint, double>>> neighbors(const GridPoint& x) const override {
    auto it = rows_.find(x);
    if (it == rows_.end()) return std::vector<std::pair<GridPoint, double>>{};
    return it->second;
  }

 private:
  std::unordered_map<std::pair<GridPoint, GridPoint>, double, PairHash> values_;
  std::unordered_map<GridPoint, std::vector<std::pair<GridPoint, double>>, GridPointHash> rows_;
  std::int64_t radius_ = 0;
};

}  // namespace

double isotropic_stable_constant(int d, double alpha) {
  if (d < 1 || d > kMaxDim) throw ConfigError("dimension must be 1..3");
  if (!(alpha > 0.0 && alpha < 2.0)) throw ConfigError("alpha must lie in (0, 2)");
  return alpha * std::tgamma(0.5 * (d + alpha)) /
         (std::pow(2.0, 1.0 - alpha) * std::pow(M_PI, 0.5 * d) * std::tgamma(1.0 - 0.5 * alpha));
}

ConductivityField isotropic_stable(int d, double alpha, double rho, std::optional<double> kappa) {
  const double k = kappa ? *kappa : isotropic_stable_constant(d, alpha);
  if (!(k > 0.0)) throw ConfigError("isotropic constant must be positive");
  ConductivityMeta meta;
  meta.kappa1 = k;
  meta.kappa2 = k;
  meta.kappa3 = k;
  meta.N0 = 1;
  meta.Theta1 = 1.0;
  ConductivityField base(std::make_shared<IsotropicModel>(d, alpha, k), ScaledLattice(d, 1.0), alpha,
                         meta, 1.0, "isotropic_stable");
  return rho == 1.0 ? base : scale_conductivity(base, rho);
}

ConductivityField double_cone(const DoubleConeParams& p) {
  if (!(p.gamma > 0.0) || !std::isfinite(p.gamma)) throw ConfigError("double_cone: gamma must be positive");
  if (!(p.a > 0.0) || !(p.b >= p.a) || !std::isfinite(p.b))
    throw ConfigError("double_cone: need 0 < a <= b");
  ConductivityMeta meta;
  meta.kappa1 = p.b;
  meta.kappa2 = p.a * std::pow(2.0 * (4.0 + 1.0 / p.gamma), -(2.0 + p.alpha));
  meta.N0 = 2;
  ConductivityField base(std::make_shared<ConeModel>(p.gamma, p.alpha, p.g), ScaledLattice(2, 1.0),
                         p.alpha, meta, 1.0, "double_cone");
  return p.rho == 1.0 ? base : scale_conductivity(base, p.rho);
}

GridPoint cone_chain_midpoint(const GridPoint& x, const GridPoint& y, double gamma) {
  const double r = norm((y - x).k, 2);
  const auto step = static_cast<std::int64_t>(std::floor((2.0 + 1.0 / gamma) * r));
  return GridPoint(x.k[0] + step, x.k[1]);
}

ConductivityField axes_counterexample(double alpha, double rho) {
  ConductivityMeta meta;
  meta.kappa1 = 1.0;
  ConductivityField base(std::make_shared<AxesModel>(alpha), ScaledLattice(2, 1.0), alpha, meta, 1.0,
                         "axes_counterexample");
  return rho == 1.0 ? base : scale_conductivity(base, rho);
}

ConductivityField table_field(int d, double alpha, double rho, std::vector<TableEntry> entries,
                              ConductivityMeta meta) {
  return ConductivityField(std::make_shared<TableModel>(d, std::move(entries)), ScaledLattice(d, rho),
                           alpha, meta, 1.0, "table");
}

ConductivityField load_table_csv(const std::string& path, int d, double alpha, double rho,
                                 ConductivityMeta meta) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table file " + path);
  const ScaledLattice lat(d, rho);
  std::vector<TableEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (entries.empty() && lineno == 1) continue;
      throw ConfigError(path + ":" + std::to_string(lineno) + ": non-numeric table row");
    }
    if (static_cast<int>(vals.size()) != 2 * d + 1)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(2 * d + 1) +
                        " columns");
    TableEntry e;
    e.x = lat.at(std::span<const double>(vals.data(), d));
    e.y = lat.at(std::span<const double>(vals.data() + d, d));
    e.value = vals[2 * d];
    entries.push_back(e);
  }
  return table_field(d, alpha, rho, std::move(entries), meta);
}

}  // namespace jumplab
