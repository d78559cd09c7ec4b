#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace jumplab {

inline constexpr int kMaxDim = 3;
inline constexpr std::size_t kDefaultBallCap = 10'000'000;

using Index = std::array<std::int64_t, kMaxDim>;
using Vec = std::array<double, kMaxDim>;

// A point of the scaled grid Z^d / rho, stored as its integer coordinates
// k (position = k / rho). Coordinates beyond the lattice dimension are zero,
// so equality, ordering and hashing are exact integer operations.
struct GridPoint {
  Index k{};

  GridPoint() = default;
  explicit GridPoint(const Index& coords) : k(coords) {}
  GridPoint(std::int64_t a, std::int64_t b = 0, std::int64_t c = 0) : k{a, b, c} {}

  std::int64_t operator[](int i) const { return k[static_cast<std::size_t>(i)]; }

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
  friend auto operator<=>(const GridPoint&, const GridPoint&) = default;
};

struct GridPointHash {
  std::size_t operator()(const GridPoint& p) const noexcept;
};

GridPoint operator+(const GridPoint& a, const GridPoint& b);
GridPoint operator-(const GridPoint& a, const GridPoint& b);

// The grid Z^d / rho together with its counting measure mu^rho = rho^{-d} mu.
class ScaledLattice {
 public:
  ScaledLattice(int d, double rho);

  int dim() const { return d_; }
  double rho() const { return rho_; }
  double spacing() const { return 1.0 / rho_; }
  // Measure of a single point, rho^{-d}.
  double point_measure() const { return point_measure_; }

  Vec position(const GridPoint& p) const;
  // Euclidean and sup-norm distances in position units.
  double distance(const GridPoint& a, const GridPoint& b) const;
  double sup_distance(const GridPoint& a, const GridPoint& b) const;
  // Integer sup-norm of the offset b - a (lattice steps).
  std::int64_t step_distance(const GridPoint& a, const GridPoint& b) const;

  // Exact grid point at a position; throws InvalidArgument if x is not a
  // multiple of the spacing (up to 1e-9 relative to the spacing).
  GridPoint at(std::span<const double> x) const;

  friend bool operator==(const ScaledLattice&, const ScaledLattice&) = default;

 private:
  int d_;
  double rho_;
  double point_measure_;
};

// Squared Euclidean norm of an integer offset.
std::int64_t norm2(const Index& h, int d);
double norm(const Index& h, int d);
std::int64_t sup_norm(const Index& h, int d);

// [x]_n: componentwise n^{-1} floor(n x_i). The notation in the source
// material uses a ceiling glyph but defines it as max{l : l <= x}, i.e. floor.
GridPoint round_to_grid(std::span<const double> x, double n);

// Grid points y with |y - center| <= r (Euclidean, position units),
// lexicographically ordered by integer coordinates.
std::vector<GridPoint> ball_points(const GridPoint& center, double r,
                                   const ScaledLattice& lattice,
                                   std::size_t cap = kDefaultBallCap);
std::size_t ball_count(double r, const ScaledLattice& lattice,
                       std::size_t cap = kDefaultBallCap);

// Half-open cube Q_n(anchor) = prod_i [anchor_i, anchor_i + 1/n).
struct Cube {
  GridPoint anchor;
  double side = 1.0;
  int dim = 1;

  bool contains(std::span<const double> x) const;
  Vec center() const;
};

Cube cube_partition_index(std::span<const double> x, double n);

// Axis-aligned box of integer coordinates [lo, hi] (inclusive).
struct Window {
  Index lo{};
  Index hi{};
  int dim = 1;

  static Window centered(int d, std::int64_t radius);
  bool contains(const GridPoint& p) const;
  std::size_t size() const;
  std::vector<GridPoint> points() const;
  std::string describe() const;
};

// Visits every integer offset h with |h|_inf <= radius in lexicographic order.
void for_each_offset(int d, std::int64_t radius, const std::function<void(const Index&)>& fn);

}  // namespace jumplab
