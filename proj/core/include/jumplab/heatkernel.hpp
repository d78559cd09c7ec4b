#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

#include "jumplab/conductivity.hpp"

namespace jumplab {

// Killed: jumps leaving the window are suppressed (diagonal -sum over the
// window, rows sum to 0). FullRateKilled: the diagonal keeps the full rate
// -C_x rho^{-d}, so mass jumping out of the window dies.
enum class Boundary { Killed, FullRateKilled };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

struct GeneratorOptions {
  Boundary boundary = Boundary::Killed;
  std::optional<double> lambda;          // drop pairs with |x - y| > lambda (positions)
  TailPolicy tail;                       // for C_x under FullRateKilled
  std::size_t max_nonzeros = 100'000'000;
};

struct GeneratorMatrix {
  std::vector<GridPoint> window;  // lexicographic
  std::unordered_map<GridPoint, std::size_t, GridPointHash> index;
  // Generator: q(x,y) = C(x,y) rho^{-d} off the diagonal, rows sum to -out_rate.
  Eigen::SparseMatrix<double, Eigen::RowMajor> rates;
  std::vector<double> out_rate;  // rate of jumps leaving the window, rho^{-d} C units
  double out_rate_error = 0.0;   // tail bound carried from total_rate
  Boundary boundary = Boundary::Killed;
  std::optional<double> lambda;
  ScaledLattice lattice{1, 1.0};

  std::size_t size() const { return window.size(); }
  std::optional<std::size_t> find(const GridPoint& p) const;
  double max_rate() const;
};

GeneratorMatrix generator_matrix(const ConductivityField& C, const std::vector<GridPoint>& window,
                                 GeneratorOptions opt = {});
GeneratorMatrix generator_matrix(const ConductivityField& C, const Window& window, GeneratorOptions opt = {});

struct UniformizationOptions {
  double tolerance = 1e-10;            // per-entry bound on the density values
  std::size_t term_budget = 2'000'000; // Poisson terms per uniformization pass
};

// p(t, source, .) for each t, in the mu^rho density convention.
struct HeatKernelColumn {
  GridPoint source;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // [time][window index]
  std::vector<double> error_bound;          // per time
  std::vector<std::size_t> steps;           // uniformization passes per time (1 unless the budget forced stepping)
};

HeatKernelColumn heat_kernel(const GeneratorMatrix& G, const std::vector<double>& times, const GridPoint& source,
                             UniformizationOptions opt = {});

// exp(t G) v for an arbitrary vector (probability units).
std::vector<double> apply_semigroup(const GeneratorMatrix& G, double t, const std::vector<double>& v,
                                    double* error_bound = nullptr, UniformizationOptions opt = {});

struct HeatKernelTable {
  std::vector<GridPoint> window;
  std::vector<double> times;
  std::vector<HeatKernelColumn> columns;
  double rho = 1.0;
};

HeatKernelTable heat_kernel_table(const GeneratorMatrix& G, const std::vector<double>& times,
                                  const std::vector<GridPoint>& sources, UniformizationOptions opt = {});

// Sum_y p(t, x, y) rho^{-d} for one column entry.
double column_mass(const HeatKernelColumn& col, std::size_t time_index, const ScaledLattice& lat);

struct ResolventResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double relative_residual = 0.0;
  double solver_residual = 0.0;
  std::size_t iterations = 0;
};

// Solves (lambda - G) u = f by conjugate gradients and compares the discrete
// form E(u, g) with (f, g) - lambda (u, g) in the mu^rho inner product. For
// FullRateKilled windows the pairs with one endpoint outside enter the form
// through out_rate (u = g = 0 outside).
ResolventResult resolvent_check(const GeneratorMatrix& G, const std::vector<double>& f, const std::vector<double>& g,
                                double lambda, double cg_tolerance = 1e-14);

struct OnDiagonalRow {
  double rho = 1.0;
  double t = 0.0;
  double value = 0.0;  // max over sampled x of p(t,x,x) t^{d/alpha}
};

struct ScalingRow {
  double rho = 1.0;
  double t = 0.0;
  double violation = 0.0;  // max |p_rho(t,x,y) - rho^d p_1(rho^alpha t, rho x, rho y)|
};

struct HolderEstimate {
  double beta = 0.0;
  double t0 = 0.0;
  double rho = 1.0;
  std::vector<double> deltas;
  std::vector<double> differences;
};

struct KernelDiagnostics {
  std::vector<OnDiagonalRow> on_diagonal;
  double on_diagonal_spread = 0.0;  // max / min of the on-diagonal values
  std::optional<double> off_diagonal;
  std::optional<HolderEstimate> holder;
  std::vector<ScalingRow> scaling;
  double max_scaling_violation = 0.0;
  double max_error_bound = 0.0;
  std::string boundary;
  double window_radius = 0.0;
};

struct DiagnosticsOptions {
  double window_radius = 8.0;  // positions; integer radius ceil(R rho) at each scale
  Boundary boundary = Boundary::Killed;
  std::size_t diagonal_sources = 5;  // points on the first axis within R/2
  std::optional<double> lambda;      // off-diagonal probe on the truncated field
  double holder_t0 = 0.5;
  std::optional<double> theta1;  // defaults to meta Theta1, else 1
  UniformizationOptions uniformization;
};

// C is a field on Z^d (rho = 1); each rho uses scale_conductivity(C, rho).
KernelDiagnostics kernel_diagnostics(const ConductivityField& C, const std::vector<double>& rhos,
                                     const std::vector<double>& times, DiagnosticsOptions opt = {});

}  // namespace jumplab
