#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qhs {

/// Arithmetic expression over variables x1..xN.
///
/// Grammar (loosest to tightest binding):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := '-' unary | power
///     power   := primary ('^' ['-'] integer)*
///     primary := number | 'x'<index> | '(' expr ')'
///              | 'abs' '(' expr ')' | ('max' | 'min') '(' expr ',' expr ')'
///
/// so `-x1^2` is `-(x1^2)`. Exponents are integer literals only.
class Expr {
 public:
  enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Pow, Abs, Max, Min, Neg };

  struct Node {
    Op op = Op::Const;
    double value = 0.0;  // Const
    int index = 0;       // Var (0-based) or integer exponent for Pow
    int lhs = -1;
    int rhs = -1;
  };

  /// Throws ParseError (with byte offset) on bad syntax or a variable
  /// outside 1..arity.
  static Expr parse(std::string_view text, int arity);
  static Expr constant(double value, int arity = 0);

  int arity() const noexcept { return arity_; }
  bool is_constant_zero() const noexcept;

  /// Throws std::invalid_argument on a size mismatch and NumericDomainError
  /// on guarded division or a non-finite result.
  double operator()(std::span<const double> point) const;

  /// Fully parenthesized text that parses back to an equivalent tree.
  std::string to_string() const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  int root() const noexcept { return root_; }

 private:
  friend class ExprParser;

  double eval(int node, const double* x) const;
  void print(int node, std::string& out) const;

  std::vector<Node> nodes_;
  int root_ = -1;
  int arity_ = 0;
};

}  // namespace qhs
