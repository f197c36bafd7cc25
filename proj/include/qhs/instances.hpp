#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qhs/expr.hpp"
#include "qhs/solvers.hpp"
#include "qhs/system.hpp"

namespace qhs {

/// Wraps an expression over the concatenated block coordinates.
ScalarFn scalar_fn_from_expr(Expr expr, std::vector<int> block_dims, bool claims_regular);

/// One expression per output coordinate, each over the joint point u.
VectorField vector_field_from_exprs(std::vector<Expr> coordinates);

// -- Quadrature and the integral functional ---------------------------------

enum class QuadratureRule { Midpoint, Trapezoid };

QuadratureRule parse_rule(const std::string& name);
std::string to_string(QuadratureRule rule);

/// Discretization of Omega = [a, b].
struct QuadratureSpec {
  double a = 0.0;
  double b = 1.0;
  int nodes = 1;
  QuadratureRule rule = QuadratureRule::Midpoint;

  void validate() const;
  std::vector<double> points() const;
  std::vector<double> weights() const;
};

/// Node-evaluation matrix of the monomial basis 1, x, ..., x^(coefficients-1):
/// row k maps a coefficient vector to the function value at node k. This
/// is how a coefficient vector u_i becomes S_i u_i = (u_i(x_1), .., u_i(x_m)).
Matrix polynomial_node_map(const QuadratureSpec& quad, int coefficients);

/// J(z) = sum_k w_k j(x_k, z_1[k], ..., z_n[k]) where block i of z holds the
/// values of S_i u_i at the quadrature nodes. The integrand reads x1 = x
/// and x2..x(n+1) = y_1..y_n.
class IntegralFunctional {
 public:
  IntegralFunctional(Expr integrand, QuadratureSpec quad, int blocks, bool claims_regular);

  double operator()(const Vector& z) const;
  ScalarFn as_scalar_fn() const;

  const Expr& integrand() const noexcept { return integrand_; }
  const QuadratureSpec& quadrature() const noexcept { return quad_; }
  int blocks() const noexcept { return blocks_; }
  int nodes() const noexcept { return quad_.nodes; }
  bool claims_regular() const noexcept { return claims_regular_; }

  /// j(x, .) with x frozen, as a function of (y_1, ..., y_n).
  ScalarFn pointwise(double x) const;

 private:
  Expr integrand_;
  QuadratureSpec quad_;
  int blocks_;
  bool claims_regular_;
  std::vector<double> points_;
  std::vector<double> weights_;
};

ScalarFn integral_functional(const Expr& integrand, const QuadratureSpec& quad, int blocks,
                             bool claims_regular);

/// sum_k w_k j_i°(x_k, z(x_k); dz_i[k]) - J_i°(z; dz_i): the right side of
/// the integral inequality minus its left side. Nonnegative up to estimator
/// slack.
double inequality_I_gap(const IntegralFunctional& J, const Vector& z, int block,
                        const Vector& dz_block, const ClarkeParams& params);

struct GrowthCheck {
  bool passed = true;
  int checks = 0;
  int violations = 0;
  double worst_excess = 0.0;  // max of |j_i°| - bound
  double witness_x = 0.0;
  Vector witness_y;
  int witness_block = -1;
};

/// Checks |j_i°(x, y; +-1)| <= h1(x) + h2(x) |y|^(p-1) + slack at sampled
/// quadrature nodes x and y uniform in [-y_radius, y_radius]^n, the
/// directional consequence of the subgradient growth bound.
GrowthCheck growth_check(const Expr& integrand, const Expr& h1, const Expr& h2, double p,
                         const QuadratureSpec& quad, int samples, std::uint64_t seed,
                         double y_radius = 2.0, const ClarkeParams& params = {});

// -- Builtin instances -------------------------------------------------------

std::vector<std::string> builtin_names();
std::vector<std::string> bounded_builtin_names();

/// Throws std::invalid_argument for an unknown name.
QhsSystem builtin(const std::string& name);
std::optional<TruncationSpec> builtin_truncation(const std::string& name);

/// The integral_obstacle layout with a caller-chosen integrand over (x, y).
QhsSystem integral_obstacle_with(std::string_view integrand, int nodes = 4);

// -- Nash points --------------------------------------------------------------

/// Payoffs f_i(u) = A_i(Tu) over the joint point, with the system's sets.
struct NashGame {
  std::vector<ScalarFn> payoffs;
  std::vector<ConvexSet> sets;
};

NashGame nash_game(const QhsSystem& sys);

/// f_i(u0 with block i replaced by s) >= f_i(u0) - tol for every sampled s.
bool nash_eq_verify(const std::vector<ScalarFn>& payoffs, const std::vector<ConvexSet>& sets,
                    const Vector& u0, const SampleFamily& grids, double tol);

/// f_i°(u0; s - u0_i) >= -tol in block i for every sampled s.
bool nash_gdp_verify(const std::vector<ScalarFn>& payoffs, const std::vector<ConvexSet>& sets,
                     const Vector& u0, const ClarkeParams& params, const SampleFamily& grids,
                     double tol);

}  // namespace qhs
