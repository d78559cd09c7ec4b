#pragma once

#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "jumplab/conductivity.hpp"

namespace jumplab {

struct CheckEntry {
  std::string id;  // "A1", "A2", "A3", "A3-multiplicity", "A4", ...
  bool pass = true;
  nlohmann::json witness;    // counterexample on failure, summary otherwise
  nlohmann::json constants;  // constants the verdict used
};

struct ValidationReport {
  std::string window;
  std::vector<CheckEntry> checks;
  std::string scope_note = "verified on window only";

  bool all_pass() const;
  const CheckEntry* find(const std::string& id) const;
  nlohmann::json to_json() const;
};

// Symmetry, zero diagonal and C(x,y) <= kappa1 |x-y|^{-d-alpha} for every pair
// of the window (relative slack 1e-12 on the bound).
ValidationReport check_bounds_A1_A2(const ConductivityField& C, const Window& window,
                                    std::optional<double> kappa1);

struct ChainCertificate {
  GridPoint x, y;
  std::vector<GridPoint> points;    // z_0 = x, ..., z_l = y
  std::vector<double> edge_bounds;  // C(z_i, z_{i+1}) |x-y|^{d+alpha}
  double theta2 = 0.0;              // max_i |z_i - z_{i+1}| / |x-y|

  int length() const { return static_cast<int>(points.size()) - 1; }
  double min_edge_bound() const;
};

// Recomputes edge bounds and stretch for an explicit point sequence. Returns
// nullopt if an edge falls below kappa2 |x-y|^{-d-alpha}.
std::optional<ChainCertificate> certify_chain(const ConductivityField& C, std::vector<GridPoint> points,
                                              double kappa2);

struct ChainSearch {
  int N0 = 2;
  double kappa2 = 0.0;
  // Candidate points lie within factor * |x-y| of x; default
  // (kappa1/kappa2)^{1/(d+alpha)} * N0.
  std::optional<double> radius_factor;
  std::size_t node_cap = 1'000'000;
};

// Breadth-first search for a minimal-length chain; candidates are visited in
// lexicographic order so the result is deterministic.
std::optional<ChainCertificate> find_chain_A3(const ConductivityField& C, const GridPoint& x,
                                              const GridPoint& y, const ChainSearch& search);

// The explicit two-step chain x -> x + (floor((2 + 1/gamma)|x-y|), 0) -> y.
std::vector<GridPoint> example_cone_chain(const GridPoint& x, const GridPoint& y, double gamma);

struct MultiplicityResult {
  bool pass = true;
  int max_count = 0;
  std::optional<std::pair<GridPoint, GridPoint>> worst_edge;
};

// Counts, per directed edge, the endpoint pairs whose chain uses it.
MultiplicityResult check_multiplicity(const std::vector<ChainCertificate>& certificates, int N0);

using ChainRouter = std::function<std::optional<ChainCertificate>(const GridPoint&, const GridPoint&)>;

// Chains for every ordered pair of distinct window points plus the constants
// they certify on that window.
struct ChainAtlas {
  std::size_t pairs = 0;
  std::optional<std::pair<GridPoint, GridPoint>> missing;  // first pair without a chain
  int max_length = 0;
  MultiplicityResult multiplicity;
  double theta2 = 0.0;
  double min_edge_bound = 0.0;  // certified kappa2
  int certified_N0() const { return std::max(max_length, multiplicity.max_count); }
  std::vector<ChainCertificate> certificates;  // kept only when requested
};

ChainAtlas build_chain_atlas(const ConductivityField& C, const Window& window, const ChainRouter& router,
                             bool keep_certificates = false);

// Router for the cone family using the explicit construction.
ChainRouter cone_router(const ConductivityField& C, double gamma, double kappa2);
// Router using find_chain_A3.
ChainRouter search_router(const ConductivityField& C, const ChainSearch& search);

struct DensityResult {
  double fraction = 0.0;
  std::size_t good = 0;
  std::size_t total = 0;
};

// mu({y in B(x,r) : C(x,y) >= kappa3 |x-y|^{-d-alpha}}) / mu(B(x,r)).
DensityResult density_check_A4(const ConductivityField& C, const GridPoint& x, double r, double kappa3);

inline constexpr double kA4Threshold = 5.0 / 6.0;

// Constants of the necessary condition implied by (A2)+(A3), with c2 taken
// from lattice-point enumeration at r = Theta1.
struct NecessaryConditionConstants {
  double c1 = 1.0, c2 = 1.0, c3 = 0.0;
  double gamma = 0.0;
  double kappa3 = 0.0;
  double Theta1 = 1.0;
};
NecessaryConditionConstants necessary_condition_constants(double kappa1, double kappa2, int N0, int d, double alpha);

struct ValidateOptions {
  Window window;
  std::optional<double> kappa1, kappa2, kappa3;
  std::optional<int> N0;
  std::vector<double> density_radii;  // positions
  double density_threshold = kA4Threshold;
  std::size_t node_cap = 1'000'000;
  std::optional<double> cone_gamma;  // use the explicit cone routing
};

// A1/A2, A3 (chains + multiplicity) and A4 on the window.
ValidationReport validate_field(const ConductivityField& C, const ValidateOptions& opt);

nlohmann::json point_json(const GridPoint& p, const ScaledLattice& lat);

}  // namespace jumplab
