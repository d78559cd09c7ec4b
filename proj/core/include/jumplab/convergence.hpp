#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jumplab/conductivity.hpp"
#include "jumplab/forms.hpp"
#include "jumplab/stats.hpp"

namespace jumplab {

// Multilinear interpolation of a grid function over the cubes Q_n(x).
class ExtensionFunction {
 public:
  ExtensionFunction(GridFunction base, ScaledLattice lattice);

  // Throws DomainError if a vertex of the containing cube is not defined.
  double value(std::span<const double> x) const;
  // Gradient inside the containing cube (one-sided on cube faces).
  Vec gradient(std::span<const double> x) const;
  // max - min of the base values over the vertices of the containing cube.
  double oscillation(std::span<const double> x) const;

  const ScaledLattice& lattice() const { return lattice_; }
  const GridFunction& base() const { return base_; }

 private:
  void corners(std::span<const double> x, double* vals, double* frac) const;

  GridFunction base_;
  ScaledLattice lattice_;
};

ExtensionFunction extend_to_continuum(const GridFunction& f, double n, int d);

enum class Reference { CauchyStandard, AlphaStableCF };
std::string to_string(Reference r);
Reference reference_from_string(const std::string& s);

// int_0^inf (1 - cos u) u^{-1-alpha} du = pi / (2 Gamma(1+alpha) sin(pi alpha / 2)).
double stable_symbol_constant(double alpha);
// psi(xi) for k(h) = scale |h|^{-d-alpha} on R^d (d = 1, 2).
std::function<double(std::span<const double>)> isotropic_symbol(int d, double alpha, double scale);
// psi(xi) for k(h) = scale 1{|h2| <= gamma |h1|} |h|^{-2-alpha} on R^2.
std::function<double(std::span<const double>)> cone_symbol(double gamma, double alpha, double scale = 1.0);

using FieldFamily = std::function<ConductivityField(double n)>;

struct CltOptions {
  double t = 1.0;
  Vec x0{};
  Reference reference = Reference::CauchyStandard;
  std::size_t paths = 100'000;
  std::uint64_t seed = 1;
  double xi_max = 4.0;
  int xi_points = 81;  // radial grid points (d = 1: grid on [0, xi_max])
  int xi_angles = 24;  // d >= 2: directions over a half circle
  // Symbol of the limit; required for AlphaStableCF.
  std::function<double(std::span<const double>)> symbol;
};

struct ConvergenceRow {
  double n = 0.0;
  std::size_t samples = 0;
  std::optional<double> ks;
  double ks_halfwidth = 0.0;  // DKW, 95%
  double cf_distance = 0.0;
  double cf_halfwidth = 0.0;  // pointwise 95% half-width
  double seconds = 0.0;       // not part of deterministic outputs
};

struct ConvergenceReport {
  std::string reference;
  double t = 0.0;
  std::vector<ConvergenceRow> rows;
  std::optional<bool> ks_decreasing;
  bool cf_decreasing = false;
  std::string verdict;  // "decreasing" or "not decreasing"
};

// Empirical law of Y^n_t started at round_to_grid(x0, n) against the limit.
ConvergenceReport clt_diagnostic(const FieldFamily& family, const std::vector<double>& n_list,
                                 const CltOptions& opt);

// Positions Y^n_t - x0 of independent paths (row-major, d per sample).
std::vector<double> sample_marginal(const ConductivityField& C, const Vec& x0, double t, std::size_t paths,
                                    std::uint64_t seed, std::uint64_t tag);

struct TightnessOptions {
  double t0 = 1.0;
  Vec x0{};
  double exit_radius = 1.0;  // sigma = first exit from B(x0, exit_radius), capped at t0
  std::vector<double> etas = {1.0};
  std::vector<double> deltas = {0.01};
  std::size_t paths = 100'000;
  std::uint64_t seed = 1;
  double bound = 0.1;
};

struct TightnessRow {
  double n = 0.0;
  double eta = 0.0;
  double delta = 0.0;
  double p_hat = 0.0;  // P(|Y_{sigma+delta} - Y_sigma| > eta)
  Interval ci;
  double p_sup = 0.0;  // P(sup_{[sigma, sigma+delta]} |Y - Y_sigma| > eta)
  Interval ci_sup;
};

struct TightnessReport {
  std::vector<TightnessRow> rows;
  std::vector<std::pair<double, double>> exit_fraction;  // (n, P(sigma < t0))
  double max_at_largest_n = 0.0;
  bool pass = false;
};

TightnessReport tightness_diagnostic(const FieldFamily& family, const std::vector<double>& n_list,
                                     const TightnessOptions& opt);

}  // namespace jumplab
