#include "qhs/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "qhs/errors.hpp"

namespace qhs {

class ExprParser {
 public:
  ExprParser(std::string_view text, int arity) : text_(text), arity_(arity) {}

  Expr run() {
    if (arity_ < 0) throw std::invalid_argument("arity must be nonnegative");
    expr_.arity_ = arity_;
    expr_.root_ = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return std::move(expr_);
  }

 private:
  using Op = Expr::Op;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  int add(Expr::Node node) {
    expr_.nodes_.push_back(node);
    return static_cast<int>(expr_.nodes_.size()) - 1;
  }

  int binary(Op op, int lhs, int rhs) { return add({op, 0.0, 0, lhs, rhs}); }

  int parse_sum() {
    int lhs = parse_product();
    while (true) {
      if (accept('+')) {
        lhs = binary(Op::Add, lhs, parse_product());
      } else if (accept('-')) {
        lhs = binary(Op::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    while (true) {
      if (accept('*')) {
        lhs = binary(Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = binary(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    if (accept('-')) return add({Op::Neg, 0.0, 0, parse_unary(), -1});
    return parse_power();
  }

  int parse_power() {
    int base = parse_primary();
    while (accept('^')) {
      skip_space();
      const bool negative = accept('-');
      skip_space();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_ ||
          (pos_ < text_.size() && (text_[pos_] == '.' || std::isalpha(static_cast<unsigned char>(text_[pos_]))))) {
        pos_ = start;
        fail("exponent must be an integer literal");
      }
      int exponent = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, exponent);
      if (ec != std::errc{} || exponent > 64) {
        pos_ = start;
        fail("exponent out of range");
      }
      base = add({Op::Pow, 0.0, negative ? -exponent : exponent, base, -1});
    }
    return base;
  }

  bool keyword(std::string_view word) {
    skip_space();
    if (text_.substr(pos_, word.size()) != word) return false;
    const std::size_t after = pos_ + word.size();
    if (after < text_.size() && std::isalnum(static_cast<unsigned char>(text_[after]))) return false;
    pos_ = after;
    return true;
  }

  int parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (accept('(')) {
      const int inner = parse_sum();
      expect(')');
      return inner;
    }
    if (keyword("abs")) {
      expect('(');
      const int arg = parse_sum();
      expect(')');
      return add({Op::Abs, 0.0, 0, arg, -1});
    }
    for (auto [name, op] : {std::pair{std::string_view("max"), Op::Max},
                            std::pair{std::string_view("min"), Op::Min}}) {
      if (keyword(name)) {
        expect('(');
        const int lhs = parse_sum();
        expect(',');
        const int rhs = parse_sum();
        expect(')');
        return binary(op, lhs, rhs);
      }
    }
    if (c == 'x') {
      const std::size_t start = pos_++;
      const std::size_t digits = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      int index = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + digits, text_.data() + pos_, index);
      if (digits == pos_ || ec != std::errc{}) {
        pos_ = start;
        fail("variables are written x1..xN");
      }
      if (index < 1 || index > arity_) {
        pos_ = start;
        fail("variable x" + std::to_string(index) + " outside declared arity " +
             std::to_string(arity_));
      }
      return add({Op::Var, 0.0, index - 1, -1, -1});
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
        ++pos_;
      }
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        std::size_t probe = pos_ + 1;
        if (probe < text_.size() && (text_[probe] == '+' || text_[probe] == '-')) ++probe;
        if (probe < text_.size() && std::isdigit(static_cast<unsigned char>(text_[probe]))) {
          pos_ = probe;
          while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
      }
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
      if (ec != std::errc{} || ptr != text_.data() + pos_) {
        pos_ = start;
        fail("malformed number");
      }
      return add({Op::Const, value, 0, -1, -1});
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  int arity_;
  std::size_t pos_ = 0;
  Expr expr_;
};

Expr Expr::parse(std::string_view text, int arity) { return ExprParser(text, arity).run(); }

Expr Expr::constant(double value, int arity) {
  Expr e;
  e.arity_ = arity;
  e.nodes_.push_back({Op::Const, value, 0, -1, -1});
  e.root_ = 0;
  return e;
}

bool Expr::is_constant_zero() const noexcept {
  return root_ >= 0 && nodes_[root_].op == Op::Const && nodes_[root_].value == 0.0;
}

double Expr::operator()(std::span<const double> point) const {
  if (static_cast<int>(point.size()) != arity_) {
    throw std::invalid_argument("expression expects " + std::to_string(arity_) +
                                " variables, got " + std::to_string(point.size()));
  }
  const double value = eval(root_, point.data());
  if (!std::isfinite(value)) throw NumericDomainError("expression evaluated to a non-finite value");
  return value;
}

double Expr::eval(int node, const double* x) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Var:
      return x[n.index];
    case Op::Add:
      return eval(n.lhs, x) + eval(n.rhs, x);
    case Op::Sub:
      return eval(n.lhs, x) - eval(n.rhs, x);
    case Op::Mul:
      return eval(n.lhs, x) * eval(n.rhs, x);
    case Op::Div: {
      const double den = eval(n.rhs, x);
      if (std::abs(den) < 1e-300) throw NumericDomainError("division by (near) zero");
      return eval(n.lhs, x) / den;
    }
    case Op::Pow: {
      const double base = eval(n.lhs, x);
      if (n.index < 0 && std::abs(base) < 1e-300) {
        throw NumericDomainError("negative power of (near) zero");
      }
      double result = 1.0;
      for (int k = 0; k < std::abs(n.index); ++k) result *= base;
      return n.index < 0 ? 1.0 / result : result;
    }
    case Op::Abs:
      return std::abs(eval(n.lhs, x));
    case Op::Max:
      return std::max(eval(n.lhs, x), eval(n.rhs, x));
    case Op::Min:
      return std::min(eval(n.lhs, x), eval(n.rhs, x));
    case Op::Neg:
      return -eval(n.lhs, x);
  }
  return 0.0;
}

void Expr::print(int node, std::string& out) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  auto infix = [&](const char* symbol) {
    out += '(';
    print(n.lhs, out);
    out += symbol;
    print(n.rhs, out);
    out += ')';
  };
  auto call = [&](const char* name) {
    out += name;
    out += '(';
    print(n.lhs, out);
    if (n.rhs >= 0) {
      out += ", ";
      print(n.rhs, out);
    }
    out += ')';
  };
  switch (n.op) {
    case Op::Const: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", std::abs(n.value));
      if (std::signbit(n.value)) {
        out += "(-";
        out += buf;
        out += ')';
      } else {
        out += buf;
      }
      return;
    }
    case Op::Var:
      out += 'x' + std::to_string(n.index + 1);
      return;
    case Op::Add:
      return infix(" + ");
    case Op::Sub:
      return infix(" - ");
    case Op::Mul:
      return infix(" * ");
    case Op::Div:
      return infix(" / ");
    case Op::Pow:
      out += '(';
      print(n.lhs, out);
      out += '^';
      out += std::to_string(n.index);
      out += ')';
      return;
    case Op::Abs:
      return call("abs");
    case Op::Max:
      return call("max");
    case Op::Min:
      return call("min");
    case Op::Neg:
      out += "(-";
      print(n.lhs, out);
      out += ')';
      return;
  }
}

std::string Expr::to_string() const {
  std::string out;
  if (root_ >= 0) print(root_, out);
  return out;
}

}  // namespace qhs
