#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jumplab/conductivity.hpp"
#include "jumplab/validators.hpp"

namespace jumplab {

// Finitely supported function on a scaled lattice; absent points are 0.
using GridFunction = std::map<GridPoint, double>;

enum class FormKind { Discrete, DiscreteTruncated, Continuum, SobolevAlpha };
std::string to_string(FormKind k);

struct FormEvaluation {
  double value = 0.0;
  FormKind kind = FormKind::Discrete;
  std::optional<double> cutoff;  // lambda (discrete) or smallest epsilon (continuum)
  std::string descriptor;
  double error_bound = 0.0;
};

// 1/2 sum (f(x)-f(y))(g(x)-g(y)) C(x,y) rho^{-2d} over all pairs meeting
// supp f u supp g, restricted to |x-y| <= lambda when given. Pairs leaving
// the support enter through C_x; its tail bound goes into error_bound.
FormEvaluation discrete_bilinear(const ConductivityField& C, const GridFunction& f, const GridFunction& g,
                                 std::optional<double> lambda = std::nullopt, TailPolicy tail = {});
FormEvaluation discrete_form(const ConductivityField& C, const GridFunction& f,
                             std::optional<double> lambda = std::nullopt, TailPolicy tail = {});

// C(x,y) = |x-y|^{-d-alpha} on the lattice of C (scale invariant).
ConductivityField alpha_reference_field(int d, double alpha, double rho);

// i.i.d. uniform(-1, 1) values on the window points, stream `index` of `seed`.
GridFunction random_grid_function(const Window& window, std::uint64_t seed, std::uint64_t index);

struct ComparisonRow {
  std::size_t id = 0;
  double e_alpha = 0.0;  // E_alpha^{rho,lambda}(f,f)
  double e_field = 0.0;  // E^{rho,lambda Theta2}(f,f)
  double ratio = 0.0;
  bool covered = true;
  bool pass = true;
  std::optional<std::pair<GridPoint, GridPoint>> gap;
};

struct ComparisonReport {
  int N0 = 1;
  double kappa2 = 0.0;
  double theta2 = 1.0;
  double lambda = 0.0;
  double bound = 0.0;  // N0^3 / kappa2
  std::vector<ComparisonRow> rows;
  double max_ratio = 0.0;
  std::size_t violations = 0;
  std::size_t gaps = 0;
  bool pass() const { return violations == 0 && gaps == 0; }
};

// Constants are taken from the atlas built on atlas_window; a pair needed by
// some f that the atlas does not cover is a coverage gap.
ComparisonReport form_comparison(const ConductivityField& C, const ChainAtlas& atlas, const Window& atlas_window,
                                 const std::vector<GridFunction>& corpus, double lambda);

// ---- continuum forms ------------------------------------------------------

struct SmoothFunction {
  std::string name;
  int d = 1;
  std::function<double(std::span<const double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
  Vec lo{}, hi{};  // support box

  double operator()(std::span<const double> x) const { return value(x); }
};

// x -> f(x / s).
SmoothFunction dilate(const SmoothFunction& f, double s);

// Seeded corpus cycling through tensor hats, bump x Gaussian and
// trigonometric polynomial x bump, all supported in [-2, 2]^d.
std::vector<SmoothFunction> smooth_corpus(int d, std::size_t count, std::uint64_t seed);

GridFunction restrict_to_grid(const SmoothFunction& f, const ScaledLattice& lat);

struct ContinuumOptions {
  std::vector<double> epsilons = {0.25, 0.125, 0.0625};
  int x_order = 4;
  int x_panels = 8;      // per axis over the union of supports
  int r_order = 8;       // per radial panel
  int angle_order = 16;  // per angular arc piece
  int angle_split = 2;
  double max_evaluations = 5e10;
};

// 1/2 int int_{|x-y| >= eps} (f(y)-f(x))^2 k(x,y) dx dy for stationary k,
// extrapolated to eps -> 0 over the epsilon schedule. Kernels share the
// f-dependent quadrature, so several kernels cost little more than one.
std::vector<FormEvaluation> continuum_forms(const std::vector<KernelSpec>& kernels, const SmoothFunction& f,
                                            const ContinuumOptions& opt = {});
FormEvaluation continuum_form(const KernelSpec& k, const SmoothFunction& f, const ContinuumOptions& opt = {});
FormEvaluation sobolev_alpha(const SmoothFunction& f, double alpha, const ContinuumOptions& opt = {});

// ---- cube chains --------------------------------------------------------

struct CubeChainCertificate {
  GridPoint from, to;              // cube anchors (integer, side 1/n)
  std::vector<GridPoint> cubes;    // P_0 = from, ..., P_l = to
  std::vector<double> edge_ratio;  // min over epsilon of edge integral / reference integral
  int length() const { return static_cast<int>(cubes.size()) - 1; }
};

struct CubeChainOptions {
  double n = 1.0;
  std::int64_t radius = 4;  // cube anchors in [-radius, radius - 1]^d (units of 1/n)
  std::int64_t margin = 4;  // extra cubes around the window usable as intermediates
  std::vector<double> epsilons = {0.25, 0.125, 0.0625};
  int M0 = 4;
  double Lambda2 = 0.05;
  int points_per_axis = 4;  // midpoint rule per cube, refined once for the error estimate
};

struct CubeChainReport {
  std::vector<CubeChainCertificate> certificates;
  std::size_t pairs = 0;
  std::optional<std::pair<GridPoint, GridPoint>> missing;
  int max_length = 0;
  int multiplicity = 0;
  int certified_M0 = 0;           // max(length, multiplicity)
  double certified_Lambda2 = 0.0;  // min edge ratio over all certificates
  double quadrature_error = 0.0;  // max relative change under refinement
  bool found() const { return !missing; }
  double lower_constant() const;  // Lambda2 / M0^3
};

CubeChainReport cube_chain_check(const KernelSpec& k, const CubeChainOptions& opt);

struct NormEquivalenceRow {
  std::string name;
  double e_kernel = 0.0;
  double e_alpha = 0.0;
  double ratio = 0.0;
  double error_bound = 0.0;
  bool pass = true;
};

struct NormEquivalenceReport {
  double lower = 0.0;
  double upper = 0.0;
  double tolerance = 0.0;
  std::vector<NormEquivalenceRow> rows;
  bool pass() const;
};

// Ratios E_k(f,f) / E_alpha(f,f) against [lower - tol, upper + tol].
NormEquivalenceReport norm_equivalence(const KernelSpec& k, const std::vector<SmoothFunction>& corpus,
                                       double lower, double upper, double tolerance,
                                       const ContinuumOptions& opt = {});

}  // namespace jumplab
