#include "wkam/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <vector>

#include "wkam/errors.hpp"

namespace wkam {

struct Expr::Node {
  enum class Kind { Number, VarX, VarY, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Abs, Sqrt };
  Kind kind;
  double value = 0.0;
  std::shared_ptr<const Node> a, b;

  double eval(double x, double y) const {
    switch (kind) {
      case Kind::Number: return value;
      case Kind::VarX: return x;
      case Kind::VarY: return y;
      case Kind::Neg: return -a->eval(x, y);
      case Kind::Add: return a->eval(x, y) + b->eval(x, y);
      case Kind::Sub: return a->eval(x, y) - b->eval(x, y);
      case Kind::Mul: return a->eval(x, y) * b->eval(x, y);
      case Kind::Div: return a->eval(x, y) / b->eval(x, y);
      case Kind::Pow: {
        const double base = a->eval(x, y);
        const double e = b->eval(x, y);
        if (e == 2.0) return base * base;
        return std::pow(base, e);
      }
      case Kind::Sin: return std::sin(a->eval(x, y));
      case Kind::Cos: return std::cos(a->eval(x, y));
      case Kind::Exp: return std::exp(a->eval(x, y));
      case Kind::Abs: return std::fabs(a->eval(x, y));
      case Kind::Sqrt: return std::sqrt(a->eval(x, y));
    }
    return 0.0;
  }

  bool constant() const {
    if (kind == Kind::VarX || kind == Kind::VarY) return false;
    return (!a || a->constant()) && (!b || b->constant());
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;
using Kind = Expr::Node::Kind;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  n->value = v;
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != text_.size()) error("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return n;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  [[noreturn]] void error(const std::string& msg) const {
    std::ostringstream os;
    os << "expression \"" << text_ << "\" column " << pos_ + 1 << ": " << msg;
    fail(ErrorCode::SpecError, os.str());
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Kind::Add, lhs, term());
      else if (accept('-')) lhs = make(Kind::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Kind::Mul, lhs, unary());
      else if (accept('/')) lhs = make(Kind::Div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Kind::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= text_.size()) error("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(text_.substr(pos_));
      char* end = nullptr;
      const double v = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) error("malformed number");
      pos_ += static_cast<std::size_t>(end - rest.c_str());
      return make(Kind::Number, nullptr, nullptr, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      if (name == "x") return make(Kind::VarX);
      if (name == "y") return make(Kind::VarY);
      if (name == "pi") return make(Kind::Number, nullptr, nullptr, std::numbers::pi);
      Kind k;
      if (name == "sin") k = Kind::Sin;
      else if (name == "cos") k = Kind::Cos;
      else if (name == "exp") k = Kind::Exp;
      else if (name == "abs") k = Kind::Abs;
      else if (name == "sqrt") k = Kind::Sqrt;
      else {
        pos_ = start;
        error("unknown identifier '" + std::string(name) +
              "' (known: x, y, pi, sin, cos, exp, abs, sqrt)");
      }
      if (!accept('(')) error("expected '(' after " + std::string(name));
      NodePtr arg = expr();
      if (!accept(')')) error("expected ')'");
      return make(k, arg);
    }
    if (accept('(')) {
      NodePtr inner = expr();
      if (!accept(')')) error("expected ')'");
      return inner;
    }
    error("unexpected character '" + std::string(1, c) + "'");
  }
};

}  // namespace

Expr Expr::parse(std::string_view text) {
  Expr e;
  e.root_ = Parser(text).parse();
  e.source_ = std::string(text);
  return e;
}

Expr Expr::constant(double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  return parse(os.str());
}

double Expr::operator()(double x, double y) const { return root_ ? root_->eval(x, y) : 0.0; }

bool Expr::is_constant() const { return !root_ || root_->constant(); }

}  // namespace wkam
