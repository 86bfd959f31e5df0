#pragma once

#include "varlab/linalg.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace varlab {

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t pos)
      : std::runtime_error(what + " at offset " + std::to_string(pos)), position(pos) {}
  std::size_t position;
};

// Scalar arithmetic expression in x1..xn (x is accepted for x1), with + - * / ^,
// abs sqrt exp log sin cos tanh max min. Gradients by forward-mode dual numbers.
class Expression {
 public:
  struct Node;

  static Expression parse(std::string_view text, int num_vars);

  int num_vars() const { return num_vars_; }
  const std::string& text() const { return text_; }
  double evaluate(const Vec& x) const;
  double value_and_gradient(const Vec& x, Vec& grad) const;

 private:
  std::shared_ptr<const Node> root_;
  int num_vars_ = 0;
  std::string text_;
};

}  // namespace varlab
