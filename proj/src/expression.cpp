#include "varlab/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace varlab {

struct Expression::Node {
  enum class Kind { Constant, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };
  Kind kind = Kind::Constant;
  double value = 0.0;
  int var = 0;
  std::string fn;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

struct Dual {
  double v = 0.0;
  Vec g;
};

class Parser {
 public:
  Parser(std::string_view s, int n) : s_(s), n_(n) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError("unexpected character '" + std::string(1, s_[pos_]) + "'", pos_);
    return e;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  int n_;

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static NodePtr make(Kind k, std::vector<NodePtr> args, std::string fn = {}) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->args = std::move(args);
    n->fn = std::move(fn);
    return n;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (eat('+')) lhs = make(Kind::Add, {lhs, term()});
      else if (eat('-')) lhs = make(Kind::Sub, {lhs, term()});
      else return lhs;
    }
  }
  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (eat('*')) lhs = make(Kind::Mul, {lhs, unary()});
      else if (eat('/')) lhs = make(Kind::Div, {lhs, unary()});
      else return lhs;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make(Kind::Neg, {unary()});
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) return make(Kind::Pow, {base, unary()});
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
        ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::Constant;
      try {
        n->value = std::stod(std::string(s_.substr(start, pos_ - start)));
      } catch (const std::exception&) {
        throw ParseError("bad number", start);
      }
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string id(s_.substr(start, pos_ - start));
      if (eat('(')) {
        std::vector<NodePtr> args{expr()};
        while (eat(',')) args.push_back(expr());
        if (!eat(')')) throw ParseError("expected ')' after arguments", pos_);
        static const std::vector<std::string> unary_fns{"abs", "sqrt", "exp", "log", "sin", "cos", "tanh"};
        const bool is_unary = std::find(unary_fns.begin(), unary_fns.end(), id) != unary_fns.end();
        const bool is_binary = id == "max" || id == "min";
        if (!is_unary && !is_binary) throw ParseError("unknown function '" + id + "'", start);
        if ((is_unary && args.size() != 1) || (is_binary && args.size() != 2))
          throw ParseError("wrong argument count for '" + id + "'", start);
        return make(Kind::Call, std::move(args), id);
      }
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::Variable;
      if (id == "x" && n_ >= 1) {
        n->var = 0;
        return n;
      }
      if (id == "pi") {
        n->kind = Kind::Constant;
        n->value = std::numbers::pi;
        return n;
      }
      if (id.size() >= 2 && id[0] == 'x') {
        const std::string digits = id.substr(1);
        if (std::all_of(digits.begin(), digits.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
          const int k = std::stoi(digits);
          if (k >= 1 && k <= n_) {
            n->var = k - 1;
            return n;
          }
        }
      }
      throw ParseError("unknown variable '" + id + "'", start);
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
  }
};

Dual eval(const Expression::Node& n, const Vec& x) {
  const Eigen::Index k = x.size();
  switch (n.kind) {
    case Kind::Constant:
      return {n.value, Vec::Zero(k)};
    case Kind::Variable: {
      Dual d{x(n.var), Vec::Zero(k)};
      d.g(n.var) = 1.0;
      return d;
    }
    case Kind::Neg: {
      Dual a = eval(*n.args[0], x);
      return {-a.v, -a.g};
    }
    case Kind::Add: {
      Dual a = eval(*n.args[0], x), b = eval(*n.args[1], x);
      return {a.v + b.v, a.g + b.g};
    }
    case Kind::Sub: {
      Dual a = eval(*n.args[0], x), b = eval(*n.args[1], x);
      return {a.v - b.v, a.g - b.g};
    }
    case Kind::Mul: {
      Dual a = eval(*n.args[0], x), b = eval(*n.args[1], x);
      return {a.v * b.v, a.v * b.g + b.v * a.g};
    }
    case Kind::Div: {
      Dual a = eval(*n.args[0], x), b = eval(*n.args[1], x);
      return {a.v / b.v, (a.g * b.v - a.v * b.g) / (b.v * b.v)};
    }
    case Kind::Pow: {
      Dual a = eval(*n.args[0], x), b = eval(*n.args[1], x);
      if (b.g.isZero(0.0)) {
        const double p = b.v;
        const double v = std::pow(a.v, p);
        const double dv = (p == 0.0) ? 0.0 : p * std::pow(a.v, p - 1.0);
        return {v, dv * a.g};
      }
      const double v = std::pow(a.v, b.v);
      return {v, v * (b.g * std::log(a.v) + b.v * a.g / a.v)};
    }
    case Kind::Call: {
      Dual a = eval(*n.args[0], x);
      if (n.fn == "abs") return {std::abs(a.v), (a.v > 0 ? 1.0 : (a.v < 0 ? -1.0 : 0.0)) * a.g};
      if (n.fn == "sqrt") {
        const double s = std::sqrt(a.v);
        return {s, a.g / (2.0 * s)};
      }
      if (n.fn == "exp") {
        const double e = std::exp(a.v);
        return {e, e * a.g};
      }
      if (n.fn == "log") return {std::log(a.v), a.g / a.v};
      if (n.fn == "sin") return {std::sin(a.v), std::cos(a.v) * a.g};
      if (n.fn == "cos") return {std::cos(a.v), -std::sin(a.v) * a.g};
      if (n.fn == "tanh") {
        const double t = std::tanh(a.v);
        return {t, (1.0 - t * t) * a.g};
      }
      Dual b = eval(*n.args[1], x);
      if (n.fn == "max") return a.v >= b.v ? a : b;
      return a.v <= b.v ? a : b;
    }
  }
  return {};
}

}  // namespace

Expression Expression::parse(std::string_view text, int num_vars) {
  Expression e;
  e.root_ = Parser(text, num_vars).parse();
  e.num_vars_ = num_vars;
  e.text_ = std::string(text);
  return e;
}

double Expression::evaluate(const Vec& x) const {
  if (x.size() != num_vars_) throw DimensionError("Expression: wrong number of variables");
  return eval(*root_, x).v;
}

double Expression::value_and_gradient(const Vec& x, Vec& grad) const {
  if (x.size() != num_vars_) throw DimensionError("Expression: wrong number of variables");
  Dual d = eval(*root_, x);
  grad = d.g;
  return d.v;
}

}  // namespace varlab
