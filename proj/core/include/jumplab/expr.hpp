#pragma once

#include <array>
#include <memory>
#include <string>

namespace jumplab {

// Arguments available to a kernel expression. h = y - x, r = |h|.
struct ExprArgs {
  std::array<double, 3> x{};
  std::array<double, 3> y{};
  std::array<double, 3> h{};
  double r = 0.0;
  double d = 1.0;
  double alpha = 1.0;
};

// Small arithmetic language for user kernels, e.g.
//   "(abs(h2) <= abs(h1)) * r^(-d-alpha)"
// Operators: + - * / ^, comparisons (yield 0/1), && ||, unary -, !.
// Functions: abs exp log sqrt pow min max sin cos atan2 floor.
// Variables: r h1 h2 h3 x1 x2 x3 y1 y2 y3 d alpha pi.
class Expression {
 public:
  explicit Expression(const std::string& source);
  ~Expression();
  Expression(const Expression&);
  Expression& operator=(const Expression&);

  double eval(const ExprArgs& a) const;
  // True when only r, h*, d, alpha and constants appear.
  bool stationary() const { return stationary_; }
  const std::string& source() const { return source_; }

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
  bool stationary_ = true;
};

}  // namespace jumplab
