#include "jumplab/lattice.hpp"

#include <cmath>
#include <sstream>

#include "jumplab/errors.hpp"

namespace jumplab {

std::size_t GridPointHash::operator()(const GridPoint& p) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto v : p.k) {
    h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

GridPoint operator+(const GridPoint& a, const GridPoint& b) {
  return GridPoint(a.k[0] + b.k[0], a.k[1] + b.k[1], a.k[2] + b.k[2]);
}

GridPoint operator-(const GridPoint& a, const GridPoint& b) {
  return GridPoint(a.k[0] - b.k[0], a.k[1] - b.k[1], a.k[2] - b.k[2]);
}

ScaledLattice::ScaledLattice(int d, double rho) : d_(d), rho_(rho) {
  if (d < 1 || d > kMaxDim) throw InvalidArgument("lattice dimension must be 1..3");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("scale rho must be positive and finite");
  point_measure_ = std::pow(rho, -d);
}

Vec ScaledLattice::position(const GridPoint& p) const {
  Vec v{};
  for (int i = 0; i < d_; ++i) v[i] = static_cast<double>(p.k[i]) / rho_;
  return v;
}

double ScaledLattice::distance(const GridPoint& a, const GridPoint& b) const {
  return norm((b - a).k, d_) / rho_;
}

double ScaledLattice::sup_distance(const GridPoint& a, const GridPoint& b) const {
  return static_cast<double>(step_distance(a, b)) / rho_;
}

std::int64_t ScaledLattice::step_distance(const GridPoint& a, const GridPoint& b) const {
  return sup_norm((b - a).k, d_);
}

GridPoint ScaledLattice::at(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != d_) throw InvalidArgument("coordinate count does not match dimension");
  GridPoint p;
  for (int i = 0; i < d_; ++i) {
    if (!std::isfinite(x[i])) throw InvalidArgument("non-finite coordinate");
    const double s = x[i] * rho_;
    const double r = std::nearbyint(s);
    if (std::abs(s - r) > 1e-9) {
      std::ostringstream os;
      os << "coordinate " << x[i] << " is not on the grid of spacing " << 1.0 / rho_;
      throw InvalidArgument(os.str());
    }
    p.k[i] = static_cast<std::int64_t>(r);
  }
  return p;
}

std::int64_t norm2(const Index& h, int d) {
  std::int64_t s = 0;
  for (int i = 0; i < d; ++i) s += h[i] * h[i];
  return s;
}

double norm(const Index& h, int d) { return std::sqrt(static_cast<double>(norm2(h, d))); }

std::int64_t sup_norm(const Index& h, int d) {
  std::int64_t m = 0;
  for (int i = 0; i < d; ++i) m = std::max(m, h[i] < 0 ? -h[i] : h[i]);
  return m;
}

GridPoint round_to_grid(std::span<const double> x, double n) {
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("rounding scale must be positive");
  if (x.empty() || x.size() > static_cast<std::size_t>(kMaxDim))
    throw InvalidArgument("point dimension must be 1..3");
  GridPoint p;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw InvalidArgument("non-finite coordinate in round_to_grid");
    p.k[i] = static_cast<std::int64_t>(std::floor(n * x[i]));
  }
  return p;
}

namespace {

void collect_ball(int d, std::int64_t R, std::int64_t r2max, const GridPoint& c,
                  std::size_t cap, std::vector<GridPoint>* out, std::size_t* count) {
  Index h{};
  auto push = [&]() {
    if (++*count > cap) throw ResourceLimit("ball enumeration exceeds point cap");
    if (out) out->push_back(GridPoint(c.k[0] + h[0], c.k[1] + h[1], c.k[2] + h[2]));
  };
  for (h[0] = -R; h[0] <= R; ++h[0]) {
    const std::int64_t a = h[0] * h[0];
    if (a > r2max) continue;
    if (d == 1) { push(); continue; }
    for (h[1] = -R; h[1] <= R; ++h[1]) {
      const std::int64_t b = a + h[1] * h[1];
      if (b > r2max) continue;
      if (d == 2) { push(); continue; }
      for (h[2] = -R; h[2] <= R; ++h[2]) {
        if (b + h[2] * h[2] > r2max) continue;
        push();
      }
      h[2] = 0;
    }
    h[1] = 0;
  }
}

std::int64_t ball_r2(double r, double rho) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("ball radius must be finite and >= 0");
  const double s = r * rho;
  return static_cast<std::int64_t>(std::floor(s * s * (1.0 + 1e-12)));
}

void precheck(int d, std::int64_t r2, std::size_t cap) {
  // Bounding-box estimate guards against allocating before the cap is hit.
  const double R = std::sqrt(static_cast<double>(r2));
  const double vol = d == 1 ? 2 * R : d == 2 ? M_PI * R * R : 4.0 / 3.0 * M_PI * R * R * R;
  if (vol > 1.5 * static_cast<double>(cap) + 1e3) throw ResourceLimit("ball enumeration exceeds point cap");
}

}  // namespace

std::vector<GridPoint> ball_points(const GridPoint& center, double r, const ScaledLattice& lattice,
                                   std::size_t cap) {
  const auto r2 = ball_r2(r, lattice.rho());
  precheck(lattice.dim(), r2, cap);
  const auto R = static_cast<std::int64_t>(std::floor(std::sqrt(static_cast<double>(r2)))) + 1;
  std::vector<GridPoint> out;
  std::size_t count = 0;
  collect_ball(lattice.dim(), R, r2, center, cap, &out, &count);
  return out;
}

std::size_t ball_count(double r, const ScaledLattice& lattice, std::size_t cap) {
  const auto r2 = ball_r2(r, lattice.rho());
  precheck(lattice.dim(), r2, cap);
  const auto R = static_cast<std::int64_t>(std::floor(std::sqrt(static_cast<double>(r2)))) + 1;
  std::size_t count = 0;
  collect_ball(lattice.dim(), R, r2, GridPoint{}, cap, nullptr, &count);
  return count;
}

bool Cube::contains(std::span<const double> x) const {
  for (int i = 0; i < dim; ++i) {
    const double lo = static_cast<double>(anchor.k[i]) * side;
    if (x[i] < lo || x[i] >= lo + side) return false;
  }
  return true;
}

Vec Cube::center() const {
  Vec v{};
  for (int i = 0; i < dim; ++i) v[i] = (static_cast<double>(anchor.k[i]) + 0.5) * side;
  return v;
}

Cube cube_partition_index(std::span<const double> x, double n) {
  Cube c;
  c.anchor = round_to_grid(x, n);
  c.side = 1.0 / n;
  c.dim = static_cast<int>(x.size());
  return c;
}

Window Window::centered(int d, std::int64_t radius) {
  Window w;
  w.dim = d;
  for (int i = 0; i < d; ++i) {
    w.lo[i] = -radius;
    w.hi[i] = radius;
  }
  return w;
}

bool Window::contains(const GridPoint& p) const {
  for (int i = 0; i < dim; ++i)
    if (p.k[i] < lo[i] || p.k[i] > hi[i]) return false;
  return true;
}

std::size_t Window::size() const {
  std::size_t s = 1;
  for (int i = 0; i < dim; ++i) s *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
  return s;
}

std::vector<GridPoint> Window::points() const {
  std::vector<GridPoint> out;
  out.reserve(size());
  Index k = lo;
  for (int i = dim; i < kMaxDim; ++i) k[i] = 0;
  while (true) {
    out.push_back(GridPoint(k));
    int i = dim - 1;
    while (i >= 0) {
      if (++k[i] <= hi[i]) break;
      k[i] = lo[i];
      --i;
    }
    if (i < 0) break;
  }
  return out;
}

std::string Window::describe() const {
  std::ostringstream os;
  for (int i = 0; i < dim; ++i) {
    if (i) os << "x";
    os << "[" << lo[i] << "," << hi[i] << "]";
  }
  return os.str();
}

void for_each_offset(int d, std::int64_t radius, const std::function<void(const Index&)>& fn) {
  Window w = Window::centered(d, radius);
  Index k{};
  for (int i = 0; i < d; ++i) k[i] = -radius;
  while (true) {
    fn(k);
    int i = d - 1;
    while (i >= 0) {
      if (++k[i] <= w.hi[i]) break;
      k[i] = w.lo[i];
      --i;
    }
    if (i < 0) break;
  }
}

}  // namespace jumplab
