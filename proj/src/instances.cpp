#include "qhs/instances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qhs/errors.hpp"
#include "qhs/random.hpp"

namespace qhs {

namespace {

double eval_at(const Expr& e, const Vector& x) {
  return e(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

int total(const std::vector<int>& dims) {
  int s = 0;
  for (int d : dims) s += d;
  return s;
}

// Smooth A with a gradient supplied in closed form.
ScalarFn smooth_fn(std::vector<int> dims, const std::string& text,
                   std::function<Vector(const Vector&)> grad) {
  Expr e = Expr::parse(text, total(dims));
  return ScalarFn(
      std::move(dims), [e](const Vector& y) { return eval_at(e, y); }, true,
      [g = std::move(grad)](const Vector& u, const Vector& v) { return g(u).dot(v); });
}

Matrix identity(int d) { return Matrix::Identity(d, d); }

QhsSystem two_player(const std::string& a1, const std::string& a2) {
  std::vector<Player> ps;
  for (const std::string* text : {&a1, &a2}) {
    ps.push_back(Player{ConvexSet::box(1, -1.0, 1.0), identity(1), identity(1),
                        scalar_fn_from_expr(Expr::parse(*text, 2), {1, 1}, true), std::nullopt});
  }
  return QhsSystem(std::move(ps), std::nullopt);
}

}  // namespace

ScalarFn scalar_fn_from_expr(Expr expr, std::vector<int> block_dims, bool claims_regular) {
  if (expr.arity() != total(block_dims)) {
    throw std::invalid_argument("expression arity " + std::to_string(expr.arity()) +
                                " does not match dimension " +
                                std::to_string(total(block_dims)));
  }
  if (expr.is_constant_zero()) return ScalarFn::zero(std::move(block_dims));
  return ScalarFn(
      std::move(block_dims), [e = std::move(expr)](const Vector& x) { return eval_at(e, x); },
      claims_regular);
}

VectorField vector_field_from_exprs(std::vector<Expr> coordinates) {
  if (coordinates.empty()) throw std::invalid_argument("vector field needs coordinates");
  const int out = static_cast<int>(coordinates.size());
  return VectorField(out, [cs = std::move(coordinates)](const Vector& u) {
    Vector r(static_cast<Eigen::Index>(cs.size()));
    for (std::size_t k = 0; k < cs.size(); ++k) r(static_cast<Eigen::Index>(k)) = eval_at(cs[k], u);
    return r;
  });
}

// -- Quadrature ---------------------------------------------------------------

QuadratureRule parse_rule(const std::string& name) {
  if (name == "midpoint") return QuadratureRule::Midpoint;
  if (name == "trapezoid") return QuadratureRule::Trapezoid;
  throw std::invalid_argument("unknown quadrature rule '" + name + "'");
}

std::string to_string(QuadratureRule rule) {
  return rule == QuadratureRule::Midpoint ? "midpoint" : "trapezoid";
}

void QuadratureSpec::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
    throw std::invalid_argument("quadrature domain needs finite a < b");
  }
  if (nodes < 1) throw std::invalid_argument("quadrature needs at least one node");
  if (rule == QuadratureRule::Trapezoid && nodes < 2) {
    throw std::invalid_argument("trapezoid rule needs at least two nodes");
  }
}

std::vector<double> QuadratureSpec::points() const {
  validate();
  std::vector<double> x(static_cast<std::size_t>(nodes));
  if (rule == QuadratureRule::Midpoint) {
    const double h = (b - a) / nodes;
    for (int k = 0; k < nodes; ++k) x[static_cast<std::size_t>(k)] = a + (k + 0.5) * h;
  } else {
    for (int k = 0; k < nodes; ++k) {
      x[static_cast<std::size_t>(k)] = ((nodes - 1 - k) * a + k * b) / (nodes - 1);
    }
  }
  return x;
}

std::vector<double> QuadratureSpec::weights() const {
  validate();
  if (rule == QuadratureRule::Midpoint) {
    return std::vector<double>(static_cast<std::size_t>(nodes), (b - a) / nodes);
  }
  const double h = (b - a) / (nodes - 1);
  std::vector<double> w(static_cast<std::size_t>(nodes), h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

Matrix polynomial_node_map(const QuadratureSpec& quad, int coefficients) {
  if (coefficients < 1) throw std::invalid_argument("node map needs at least one coefficient");
  const std::vector<double> x = quad.points();
  Matrix S(quad.nodes, coefficients);
  for (int k = 0; k < quad.nodes; ++k) {
    double p = 1.0;
    for (int c = 0; c < coefficients; ++c) {
      S(k, c) = p;
      p *= x[static_cast<std::size_t>(k)];
    }
  }
  return S;
}

// -- Integral functional --------------------------------------------------------

IntegralFunctional::IntegralFunctional(Expr integrand, QuadratureSpec quad, int blocks,
                                       bool claims_regular)
    : integrand_(std::move(integrand)),
      quad_(quad),
      blocks_(blocks),
      claims_regular_(claims_regular) {
  quad_.validate();
  if (blocks_ < 1) throw std::invalid_argument("integral functional needs at least one block");
  if (integrand_.arity() != blocks_ + 1) {
    throw std::invalid_argument("integrand arity must be 1 + number of blocks (x1 = x)");
  }
  points_ = quad_.points();
  weights_ = quad_.weights();
}

double IntegralFunctional::operator()(const Vector& z) const {
  const int m = quad_.nodes;
  if (z.size() != static_cast<Eigen::Index>(blocks_) * m) {
    throw std::invalid_argument("integral functional: expected " +
                                std::to_string(blocks_ * m) + " node values");
  }
  std::vector<double> buf(static_cast<std::size_t>(blocks_ + 1));
  double sum = 0.0;
  for (int k = 0; k < m; ++k) {
    buf[0] = points_[static_cast<std::size_t>(k)];
    for (int i = 0; i < blocks_; ++i) buf[static_cast<std::size_t>(i + 1)] = z(i * m + k);
    sum += weights_[static_cast<std::size_t>(k)] * integrand_(buf);
  }
  return sum;
}

ScalarFn IntegralFunctional::as_scalar_fn() const {
  std::vector<int> dims(static_cast<std::size_t>(blocks_), quad_.nodes);
  return ScalarFn(
      std::move(dims), [self = *this](const Vector& z) { return self(z); }, claims_regular_);
}

ScalarFn IntegralFunctional::pointwise(double x) const {
  std::vector<int> dims(static_cast<std::size_t>(blocks_), 1);
  return ScalarFn(
      std::move(dims),
      [e = integrand_, x](const Vector& y) {
        std::vector<double> buf(static_cast<std::size_t>(y.size() + 1));
        buf[0] = x;
        for (Eigen::Index i = 0; i < y.size(); ++i) buf[static_cast<std::size_t>(i + 1)] = y(i);
        return e(buf);
      },
      claims_regular_);
}

ScalarFn integral_functional(const Expr& integrand, const QuadratureSpec& quad, int blocks,
                             bool claims_regular) {
  return IntegralFunctional(integrand, quad, blocks, claims_regular).as_scalar_fn();
}

double inequality_I_gap(const IntegralFunctional& J, const Vector& z, int block,
                        const Vector& dz_block, const ClarkeParams& params) {
  const int m = J.nodes();
  const int n = J.blocks();
  if (block < 0 || block >= n) throw std::invalid_argument("block index out of range");
  if (z.size() != static_cast<Eigen::Index>(n) * m || dz_block.size() != m) {
    throw std::invalid_argument("inequality_I_gap: dimension mismatch");
  }
  const double lhs = partial_clarke_dd(J.as_scalar_fn(), block, z, dz_block, params);
  const std::vector<double> x = J.quadrature().points();
  const std::vector<double> w = J.quadrature().weights();
  double rhs = 0.0;
  for (int k = 0; k < m; ++k) {
    Vector y(n);
    for (int i = 0; i < n; ++i) y(i) = z(i * m + k);
    Vector dir(1);
    dir(0) = dz_block(k);
    rhs += w[static_cast<std::size_t>(k)] *
           partial_clarke_dd(J.pointwise(x[static_cast<std::size_t>(k)]), block, y, dir, params);
  }
  return rhs - lhs;
}

GrowthCheck growth_check(const Expr& integrand, const Expr& h1, const Expr& h2, double p,
                         const QuadratureSpec& quad, int samples, std::uint64_t seed,
                         double y_radius, const ClarkeParams& params) {
  if (!(p > 1.0)) throw std::invalid_argument("growth exponent p must exceed 1");
  if (samples < 1) throw std::invalid_argument("growth check needs at least one sample");
  if (h1.arity() != 1 || h2.arity() != 1) {
    throw std::invalid_argument("h1 and h2 read only x (arity 1)");
  }
  const int n = integrand.arity() - 1;
  const IntegralFunctional J(integrand, quad, n, false);
  const std::vector<double> xs = quad.points();
  const double eps = gap_tolerance(params);

  GrowthCheck out;
  out.worst_excess = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Stream rng(seed, {0x6e0, static_cast<std::uint64_t>(s)});
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(rng.uniform() * xs.size()),
                                         xs.size() - 1);
    const double x = xs[k];
    Vector y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.uniform(-y_radius, y_radius);
    const ScalarFn jx = J.pointwise(x);
    const double xv[1] = {x};
    const double bound = h1(xv) + h2(xv) * std::pow(y.norm(), p - 1.0);
    for (int i = 0; i < n; ++i) {
      for (double e : {1.0, -1.0}) {
        Vector dir(1);
        dir(0) = e;
        const double excess = std::abs(partial_clarke_dd(jx, i, y, dir, params)) - bound;
        ++out.checks;
        if (excess > out.worst_excess) out.worst_excess = excess;
        if (excess > eps) {
          if (out.violations == 0) {
            out.witness_x = x;
            out.witness_y = y;
            out.witness_block = i;
          }
          ++out.violations;
        }
      }
    }
  }
  out.passed = out.violations == 0;
  return out;
}

// -- Builtins -----------------------------------------------------------------

std::vector<std::string> builtin_names() {
  return {"bilinear_zero_sum", "quadratic_smooth", "absdiff_nonsmooth",
          "coercive_unbounded", "fj_system",       "integral_obstacle"};
}

std::vector<std::string> bounded_builtin_names() {
  return {"bilinear_zero_sum", "quadratic_smooth", "absdiff_nonsmooth", "fj_system",
          "integral_obstacle"};
}

QhsSystem integral_obstacle_with(std::string_view integrand, int nodes) {
  const QuadratureSpec quad{0.0, 1.0, nodes, QuadratureRule::Midpoint};
  IntegralFunctional J(Expr::parse(integrand, 2), quad, 1, true);
  std::vector<Player> ps;
  ps.push_back(Player{ConvexSet::box(2, -1.0, 1.0), identity(2), polynomial_node_map(quad, 2),
                      ScalarFn::zero({2}), VectorField(2, [](const Vector& u) { return u; })});
  return QhsSystem(std::move(ps), J.as_scalar_fn());
}

QhsSystem builtin(const std::string& name) {
  if (name == "bilinear_zero_sum") return two_player("x1*x2", "-x1*x2");
  if (name == "absdiff_nonsmooth") return two_player("abs(x1 - x2)", "abs(x1 + x2)");
  if (name == "quadratic_smooth") {
    std::vector<Player> ps;
    ps.push_back(Player{ConvexSet::box(1, -1.0, 1.0), identity(1), identity(1),
                        smooth_fn({1, 1}, "(x1 - x2)^2",
                                  [](const Vector& y) {
                                    const double g = 2.0 * (y(0) - y(1));
                                    return Vector{{g, -g}};
                                  }),
                        std::nullopt});
    ps.push_back(Player{ConvexSet::box(1, -1.0, 1.0), identity(1), identity(1),
                        smooth_fn({1, 1}, "(x1 + x2)^2",
                                  [](const Vector& y) {
                                    const double g = 2.0 * (y(0) + y(1));
                                    return Vector{{g, g}};
                                  }),
                        std::nullopt});
    return QhsSystem(std::move(ps), std::nullopt);
  }
  if (name == "coercive_unbounded") {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<Player> ps;
    ps.push_back(Player{ConvexSet::box(1, -inf, inf), identity(1), identity(1),
                        smooth_fn({1}, "x1^2",
                                  [](const Vector& y) { return Vector{{2.0 * y(0)}}; }),
                        std::nullopt});
    return QhsSystem(std::move(ps), std::nullopt);
  }
  if (name == "fj_system") {
    std::vector<Player> ps;
    for (int i = 0; i < 2; ++i) {
      ps.push_back(Player{ConvexSet::box(1, -1.0, 1.0), identity(1), identity(1),
                          ScalarFn::zero({1, 1}),
                          VectorField(1, [i](const Vector& u) { return Vector{{u(i)}}; })});
    }
    return QhsSystem(std::move(ps),
                     scalar_fn_from_expr(Expr::parse("abs(x1) + abs(x2)", 2), {1, 1}, true));
  }
  if (name == "integral_obstacle") return integral_obstacle_with("abs(x2)");
  throw std::invalid_argument("unknown builtin '" + name + "'");
}

std::optional<TruncationSpec> builtin_truncation(const std::string& name) {
  if (name == "coercive_unbounded") {
    return TruncationSpec{{ConvexSet::box(1, -1.0, 1.0)}, Vector::Zero(1), {4.0, 8.0, 16.0}};
  }
  return std::nullopt;
}

// -- Nash points -----------------------------------------------------------------

NashGame nash_game(const QhsSystem& sys) {
  NashGame g;
  std::vector<int> dims;
  for (int i = 0; i < sys.players(); ++i) {
    dims.push_back(sys.block_dim(i));
    g.sets.push_back(sys.player(i).K);
  }
  // Block-diagonal T so the payoffs do not hold on to the system.
  int rows = 0;
  for (int i = 0; i < sys.players(); ++i) rows += static_cast<int>(sys.player(i).T.rows());
  Matrix T = Matrix::Zero(rows, sys.dim());
  for (int i = 0, r = 0; i < sys.players(); ++i) {
    const Matrix& Ti = sys.player(i).T;
    T.block(r, sys.block_offset(i), Ti.rows(), Ti.cols()) = Ti;
    r += static_cast<int>(Ti.rows());
  }
  for (int i = 0; i < sys.players(); ++i) {
    const ScalarFn A = sys.player(i).A;
    auto eval = [T, A](const Vector& u) { return A(T * u); };
    ScalarFn::DirectionalDerivative dd;
    if (A.has_analytic_dd()) {
      dd = [T, A](const Vector& u, const Vector& v) { return A.analytic_dd(T * u, T * v); };
    }
    g.payoffs.emplace_back(dims, eval, A.claims_regular(), dd);
  }
  return g;
}

namespace {

void check_game(const std::vector<ScalarFn>& payoffs, const std::vector<ConvexSet>& sets,
                const Vector& u0, const SampleFamily& grids) {
  if (payoffs.size() != sets.size() || grids.size() != sets.size() || sets.empty()) {
    throw std::invalid_argument("payoffs, sets and grids must have one entry per player");
  }
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (grids[i].empty()) throw std::invalid_argument("empty deviation grid for a player");
    if (payoffs[i].blocks() != static_cast<int>(sets.size()) ||
        payoffs[i].dim() != u0.size()) {
      throw std::invalid_argument("payoff block layout does not match the sets");
    }
    const Vector ui = u0.segment(payoffs[i].block_offset(static_cast<int>(i)), sets[i].dim());
    if (!sets[i].contains(ui, kFeasibleTol)) throw std::invalid_argument("u0 is not feasible");
  }
}

}  // namespace

bool nash_eq_verify(const std::vector<ScalarFn>& payoffs, const std::vector<ConvexSet>& sets,
                    const Vector& u0, const SampleFamily& grids, double tol) {
  check_game(payoffs, sets, u0, grids);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const ScalarFn& f = payoffs[i];
    const int off = f.block_offset(static_cast<int>(i));
    const double base = f(u0);
    Vector w = u0;
    for (const Vector& s : grids[i]) {
      w.segment(off, s.size()) = s;
      if (f(w) < base - tol) return false;
    }
  }
  return true;
}

bool nash_gdp_verify(const std::vector<ScalarFn>& payoffs, const std::vector<ConvexSet>& sets,
                     const Vector& u0, const ClarkeParams& params, const SampleFamily& grids,
                     double tol) {
  check_game(payoffs, sets, u0, grids);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const ScalarFn& f = payoffs[i];
    const int b = static_cast<int>(i);
    const Vector ui = u0.segment(f.block_offset(b), f.block_dim(b));
    for (const Vector& s : grids[i]) {
      if (partial_clarke_dd(f, b, u0, s - ui, params) < -tol) return false;
    }
  }
  return true;
}

}  // namespace qhs
