#pragma once

// Small arithmetic expression language for potentials, speeds and boundary data:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | exp | abs | sqrt
// '^' is right associative and binds tighter than unary minus (-x^2 == -(x^2)).

#include <memory>
#include <string>
#include <string_view>

#include "wkam/vec.hpp"

namespace wkam {

class Expr {
 public:
  // Throws Error(SpecError) with the offending column on malformed input.
  static Expr parse(std::string_view text);
  static Expr constant(double value);

  double operator()(double x, double y = 0.0) const;
  double operator()(const Vec2& p) const { return (*this)(p.x, p.y); }

  const std::string& source() const { return source_; }
  // True when the expression does not reference x or y.
  bool is_constant() const;

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

}  // namespace wkam
