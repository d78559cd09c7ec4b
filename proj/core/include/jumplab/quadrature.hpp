#pragma once

#include <functional>
#include <span>
#include <vector>

namespace jumplab {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

// Gauss-Legendre rule of the given order, computed by Newton iteration on
// the Legendre recurrence and cached per order.
const GaussRule& gauss_legendre(int order);

// Tensor Gauss rule over the box prod_i [lo_i, hi_i]; f receives a point of
// length lo.size().
double integrate_box(const std::function<double(std::span<const double>)>& f,
                     std::span<const double> lo, std::span<const double> hi, int order);

// 1-d composite Gauss over [a, b] split into `panels` equal pieces.
double integrate_1d(const std::function<double(double)>& f, double a, double b, int order,
                    int panels = 1);

}  // namespace jumplab
