#include "jumplab/expr.hpp"

#include <cctype>
#include <cmath>
#include <vector>

#include "jumplab/errors.hpp"

namespace jumplab {

struct Expression::Node {
  enum Kind { Num, Var, Neg, Not, Bin, Call } kind = Num;
  double value = 0.0;
  int var = 0;
  char op = 0;  // + - * / ^ < > l(<=) g(>=) = (==) n(!=) & |
  std::string fn;
  std::vector<std::shared_ptr<Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<Expression::Node>;
using Node = Expression::Node;

enum VarId { kR, kH1, kH2, kH3, kX1, kX2, kX3, kY1, kY2, kY3, kD, kAlpha };

class Parser {
 public:
  Parser(const std::string& s, bool* stationary) : s_(s), stationary_(stationary) {}

  NodePtr parse() {
    auto n = parse_or();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw InvalidArgument("expression error at offset " + std::to_string(pos_) + ": " + msg +
                          " in '" + s_ + "'");
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(const char* tok) {
    skip();
    const std::string t(tok);
    if (s_.compare(pos_, t.size(), t) == 0) {
      pos_ += t.size();
      return true;
    }
    return false;
  }
  static NodePtr bin(char op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Bin;
    n->op = op;
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  NodePtr parse_or() {
    auto a = parse_and();
    while (eat("||")) a = bin('|', a, parse_and());
    return a;
  }
  NodePtr parse_and() {
    auto a = parse_cmp();
    while (eat("&&")) a = bin('&', a, parse_cmp());
    return a;
  }
  NodePtr parse_cmp() {
    auto a = parse_add();
    while (true) {
      if (eat("<=")) a = bin('l', a, parse_add());
      else if (eat(">=")) a = bin('g', a, parse_add());
      else if (eat("==")) a = bin('=', a, parse_add());
      else if (eat("!=")) a = bin('n', a, parse_add());
      else if (eat("<")) a = bin('<', a, parse_add());
      else if (eat(">")) a = bin('>', a, parse_add());
      else return a;
    }
  }
  NodePtr parse_add() {
    auto a = parse_mul();
    while (true) {
      if (eat("+")) a = bin('+', a, parse_mul());
      else if (eat("-")) a = bin('-', a, parse_mul());
      else return a;
    }
  }
  NodePtr parse_mul() {
    auto a = parse_unary();
    while (true) {
      if (eat("*")) a = bin('*', a, parse_unary());
      else if (eat("/")) a = bin('/', a, parse_unary());
      else return a;
    }
  }
  NodePtr parse_unary() {
    if (eat("-")) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Neg;
      n->args = {parse_unary()};
      return n;
    }
    if (eat("!")) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Not;
      n->args = {parse_unary()};
      return n;
    }
    if (eat("+")) return parse_unary();
    return parse_pow();
  }
  NodePtr parse_pow() {
    auto a = parse_atom();
    if (eat("^")) return bin('^', a, parse_unary());  // right associative
    return a;
  }
  NodePtr parse_atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto n = parse_or();
      if (!eat(")")) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      skip();
      if (pos_ < s_.size() && s_[pos_] == '(') {
        ++pos_;
        auto n = std::make_shared<Node>();
        n->kind = Node::Call;
        n->fn = id;
        skip();
        if (!eat(")")) {
          do n->args.push_back(parse_or());
          while (eat(","));
          if (!eat(")")) fail("expected ')' after arguments");
        }
        check_call(*n);
        return n;
      }
      return variable(id);
    }
    fail(std::string("unexpected character '") + c + "'");
  }
  void check_call(const Node& n) {
    static const std::vector<std::pair<std::string, int>> fns = {
        {"abs", 1}, {"exp", 1}, {"log", 1}, {"sqrt", 1}, {"sin", 1}, {"cos", 1}, {"floor", 1},
        {"pow", 2}, {"min", 2}, {"max", 2}, {"atan2", 2}};
    for (const auto& [name, arity] : fns) {
      if (name == n.fn) {
        if (static_cast<int>(n.args.size()) != arity) fail("wrong argument count for " + name);
        return;
      }
    }
    fail("unknown function " + n.fn);
  }
  NodePtr variable(const std::string& id) {
    auto n = std::make_shared<Node>();
    if (id == "pi") {
      n->value = M_PI;
      return n;
    }
    static const std::vector<std::pair<std::string, int>> vars = {
        {"r", kR},   {"h1", kH1}, {"h2", kH2}, {"h3", kH3}, {"x1", kX1},     {"x2", kX2},
        {"x3", kX3}, {"y1", kY1}, {"y2", kY2}, {"y3", kY3}, {"d", kD},       {"alpha", kAlpha}};
    for (const auto& [name, id2] : vars) {
      if (name == id) {
        n->kind = Node::Var;
        n->var = id2;
        if (id2 >= kX1 && id2 <= kY3) *stationary_ = false;
        return n;
      }
    }
    fail("unknown variable " + id);
  }

  const std::string& s_;
  bool* stationary_;
  std::size_t pos_ = 0;
};

double get_var(int v, const ExprArgs& a) {
  switch (v) {
    case kR: return a.r;
    case kH1: return a.h[0];
    case kH2: return a.h[1];
    case kH3: return a.h[2];
    case kX1: return a.x[0];
    case kX2: return a.x[1];
    case kX3: return a.x[2];
    case kY1: return a.y[0];
    case kY2: return a.y[1];
    case kY3: return a.y[2];
    case kD: return a.d;
    default: return a.alpha;
  }
}

double eval_node(const Node& n, const ExprArgs& a) {
  switch (n.kind) {
    case Node::Num: return n.value;
    case Node::Var: return get_var(n.var, a);
    case Node::Neg: return -eval_node(*n.args[0], a);
    case Node::Not: return eval_node(*n.args[0], a) == 0.0 ? 1.0 : 0.0;
    case Node::Bin: {
      const double l = eval_node(*n.args[0], a);
      if (n.op == '&' && l == 0.0) return 0.0;
      if (n.op == '|' && l != 0.0) return 1.0;
      const double r = eval_node(*n.args[1], a);
      switch (n.op) {
        case '+': return l + r;
        case '-': return l - r;
        case '*': return l * r;
        case '/': return l / r;
        case '^': return std::pow(l, r);
        case '<': return l < r;
        case '>': return l > r;
        case 'l': return l <= r;
        case 'g': return l >= r;
        case '=': return l == r;
        case 'n': return l != r;
        case '&':
        case '|': return r != 0.0;
      }
      return 0.0;
    }
    case Node::Call: {
      const double u = eval_node(*n.args[0], a);
      const std::string& f = n.fn;
      if (f == "abs") return std::abs(u);
      if (f == "exp") return std::exp(u);
      if (f == "log") return std::log(u);
      if (f == "sqrt") return std::sqrt(u);
      if (f == "sin") return std::sin(u);
      if (f == "cos") return std::cos(u);
      if (f == "floor") return std::floor(u);
      const double v = eval_node(*n.args[1], a);
      if (f == "pow") return std::pow(u, v);
      if (f == "min") return std::min(u, v);
      if (f == "max") return std::max(u, v);
      return std::atan2(u, v);
    }
  }
  return 0.0;
}

}  // namespace

Expression::Expression(const std::string& source) : source_(source) {
  Parser p(source_, &stationary_);
  root_ = p.parse();
}

Expression::~Expression() = default;
Expression::Expression(const Expression&) = default;
Expression& Expression::operator=(const Expression&) = default;

double Expression::eval(const ExprArgs& a) const { return eval_node(*root_, a); }

}  // namespace jumplab
