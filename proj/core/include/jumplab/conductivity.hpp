#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jumplab/lattice.hpp"

namespace jumplab {

// Bound constants attached to a field. Positions are in lattice units of the
// field's own grid (so kappa1 bounds C(x,y)|x-y|^{d+alpha} with |x-y| the
// Euclidean distance between positions).
struct ConductivityMeta {
  std::optional<double> kappa1, kappa2, kappa3, kappa4, kappa5;
  std::optional<int> N0, M0;
  std::optional<double> Theta1;
  std::optional<double> Lambda1, Lambda2;

  void check() const;  // kappa4 <= kappa5, all positive
};

// Raw pair weights on integer coordinates. Implementations are immutable and
// safe to call concurrently.
class ConductivityModel {
 public:
  virtual ~ConductivityModel() = default;

  virtual double value(const GridPoint& x, const GridPoint& y) const = 0;
  virtual bool stationary() const = 0;
  // Sup-norm radius (integer steps) outside of which every weight vanishes.
  virtual std::optional<std::int64_t> support_radius() const { return std::nullopt; }
  // Explicit nonzero neighbours of x, if the model is a finite table.
  virtual std::optional<std::vector<std::pair<GridPoint, double>>> neighbors(const GridPoint&) const {
    return std::nullopt;
  }
  // Closed-form sum over z of value(x, z), when known.
  virtual std::optional<double> exact_row_sum(const GridPoint&) const { return std::nullopt; }
};

// A conductivity on the grid Z^d / rho: evaluate(x, y) = multiplier * model(x, y).
// The multiplier carries the rho^{d+alpha} factor of the scaling map, so a
// scaled field shares the integer-coordinate model of its unscaled parent.
class ConductivityField {
 public:
  ConductivityField(std::shared_ptr<const ConductivityModel> model, ScaledLattice lattice,
                    double alpha, ConductivityMeta meta, double multiplier = 1.0,
                    std::string family = "custom");

  double evaluate(const GridPoint& x, const GridPoint& y) const {
    return multiplier_ * model_->value(x, y);
  }
  // Jump rate x -> y of the continuous-time chain under mu^rho: C(x,y) rho^{-d}.
  double jump_rate(const GridPoint& x, const GridPoint& y) const {
    return evaluate(x, y) * lattice_.point_measure();
  }

  const ScaledLattice& lattice() const { return lattice_; }
  int dim() const { return lattice_.dim(); }
  double rho() const { return lattice_.rho(); }
  double alpha() const { return alpha_; }
  const ConductivityMeta& meta() const { return meta_; }
  double multiplier() const { return multiplier_; }
  const std::string& family() const { return family_; }
  const ConductivityModel& model() const { return *model_; }
  std::shared_ptr<const ConductivityModel> model_ptr() const { return model_; }
  bool stationary() const { return model_->stationary(); }

  // kappa1 * rho^{d+alpha}: the (A2) bound expressed on integer offsets,
  // C <= a1_integer() * |k|^{-d-alpha}.
  std::optional<double> a2_integer_constant() const;

  ConductivityField with_meta(ConductivityMeta meta) const;

 private:
  std::shared_ptr<const ConductivityModel> model_;
  ScaledLattice lattice_;
  double alpha_;
  ConductivityMeta meta_;
  double multiplier_;
  std::string family_;
};

struct TailPolicy {
  enum class Kind { Auto, ClosedForm, Truncate };
  Kind kind = Kind::Auto;
  std::int64_t radius = 1000;  // sup-norm lattice steps for truncation
  std::size_t max_points = 10'000'000;
};

struct RateSum {
  double value = 0.0;
  double tail_bound = 0.0;  // certified bound on |true - value|
  std::int64_t radius = 0;  // 0 when exact
  bool exact = false;
};

// C_x = sum over z of C(x, z).
RateSum total_rate(const ConductivityField& C, const GridPoint& x, TailPolicy tail = {});

// Upper bound for sum_{|h|_inf > M} |h|^{-d-alpha} over integer offsets.
double lattice_tail_bound(int d, double alpha, std::int64_t M);
// Exact value of sum_{h != 0} |h|^{-1-alpha} on Z (2 zeta(1+alpha)).
double lattice_zeta_1d(double alpha);

// C^rho(x, y) = rho^{d+alpha} C(rho x, rho y) for a field defined on Z^d.
ConductivityField scale_conductivity(const ConductivityField& C, double rho);

// ---- built-in families -------------------------------------------------

// alpha Gamma((d+alpha)/2) / (2^{1-alpha} pi^{d/2} Gamma(1-alpha/2)).
double isotropic_stable_constant(int d, double alpha);

// kappa |x-y|^{-d-alpha}; kappa defaults to the isotropic stable constant.
ConductivityField isotropic_stable(int d, double alpha, double rho = 1.0,
                                   std::optional<double> kappa = std::nullopt);

// Symmetric bounded modulation g on integer coordinates for the cone family.
using PairModulation = std::function<double(const GridPoint&, const GridPoint&)>;

struct DoubleConeParams {
  double gamma = 1.0;
  double a = 1.0;
  double b = 1.0;
  PairModulation g;  // empty means g = 1
  double alpha = 1.0;
  double rho = 1.0;
};

// d = 2; C(x,y) = 1_V(x-y) g(x,y) |x-y|^{-2-alpha}, V = {|h2| <= gamma |h1|}.
ConductivityField double_cone(const DoubleConeParams& p);

// Integer offset of the intermediate point used by the explicit two-step
// cone chain: (floor((2 + 1/gamma) |x-y|), 0) in integer coordinates.
GridPoint cone_chain_midpoint(const GridPoint& x, const GridPoint& y, double gamma);

// d = 2; weight |x-y|^{-2-alpha} on the coordinate axes only.
ConductivityField axes_counterexample(double alpha, double rho = 1.0);

struct TableEntry {
  GridPoint x, y;
  double value = 0.0;
};

// Finite table; entries are stored as given (no symmetrisation), missing
// pairs are zero. Coordinates are integer coordinates of the lattice.
ConductivityField table_field(int d, double alpha, double rho, std::vector<TableEntry> entries,
                              ConductivityMeta meta = {});

// CSV with columns x_1..x_d, y_1..y_d, value (positions on Z^d/rho); a
// header line is skipped if it does not parse as numbers.
ConductivityField load_table_csv(const std::string& path, int d, double alpha, double rho,
                                 ConductivityMeta meta = {});

// ---- kernel-cell builder ------------------------------------------------

// A symmetric jump kernel on R^d x R^d.
struct KernelSpec {
  int d = 1;
  double alpha = 1.0;
  std::string name = "kernel";
  // General form; always set.
  std::function<double(std::span<const double>, std::span<const double>)> k;
  // Set iff k(x, y) = profile(y - x); profile must be even.
  std::function<double(std::span<const double>)> profile;
  // d = 2 only: polar angles in (-pi, pi] across which profile may jump.
  std::vector<double> angular_breaks;
  std::optional<double> kappa4, kappa5, lambda1;

  bool stationary() const { return static_cast<bool>(profile); }
  double operator()(std::span<const double> x, std::span<const double> y) const { return k(x, y); }
};

KernelSpec isotropic_kernel(int d, double alpha, double scale = 1.0);
// 1{|h2| <= gamma |h1|} |h|^{-2-alpha}
KernelSpec cone_kernel(double gamma, double alpha);
// Weight |h|^{-2-alpha} on the strips |h1| <= w or |h2| <= w (w = 0: the two axes).
KernelSpec axes_kernel(double alpha, double halfwidth = 0.0);
// Expression kernel (see Expression); stationary when the expression only uses r, h.
KernelSpec expr_kernel(int d, double alpha, const std::string& expression,
                       std::vector<double> angular_breaks = {});

struct QuadratureConfig {
  int order = 8;
  double tolerance = 1e-10;  // relative to the entry value
  int max_refinements = 4;
  std::size_t cache_bytes = std::size_t{2} << 30;
};

// C^n(x,y) = n^{2d} * integral of k over Q(x) x Q(y) (cells of side 1/n centred
// at x, y) when |x-y|_inf >= 2/n, and 0 otherwise.
ConductivityField build_from_kernel(const KernelSpec& k, double n, QuadratureConfig q = {});

// Cell-pair average used by build_from_kernel, with its error estimate.
struct CellIntegral {
  double value = 0.0;
  double error = 0.0;
};
CellIntegral cell_pair_average(const KernelSpec& k, double n, const GridPoint& x, const GridPoint& y,
                               const QuadratureConfig& q);

}  // namespace jumplab
