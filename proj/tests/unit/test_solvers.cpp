#include <doctest.h>

#include <cmath>
#include <limits>

#include "qhs/errors.hpp"
#include "qhs/instances.hpp"
#include "qhs/random.hpp"
#include "qhs/solvers.hpp"
#include "support.hpp"

using qhs::Vector;
using test::vec;

namespace {

qhs::QhsSystem single(const char* a, qhs::ConvexSet K = qhs::ConvexSet::box(1, -1, 1)) {
  std::vector<qhs::Player> ps;
  ps.push_back({std::move(K), qhs::Matrix::Identity(1, 1), qhs::Matrix::Identity(1, 1),
                qhs::scalar_fn_from_expr(qhs::Expr::parse(a, 1), {1}, true), std::nullopt});
  return qhs::QhsSystem(std::move(ps), std::nullopt);
}

qhs::ConvexSet real_line() {
  const double inf = std::numeric_limits<double>::infinity();
  return qhs::ConvexSet::box(1, -inf, inf);
}

}  // namespace

TEST_CASE("options validation and method names") {
  CHECK_NOTHROW(qhs::SolveOptions{}.validate());
  qhs::SolveOptions o;
  o.step = 0.0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o = {};
  o.resolution = 1;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  CHECK(qhs::parse_method("grid") == qhs::SolveMethod::Grid);
  CHECK(qhs::parse_method("best_response") == qhs::SolveMethod::BestResponse);
  CHECK(qhs::to_string(qhs::SolveMethod::BestResponse) == "best_response");
  CHECK_THROWS_AS(qhs::parse_method("newton"), std::invalid_argument);
}

TEST_CASE("brute force finds the analytic solutions") {
  const qhs::SolveOptions o;
  for (const char* name : {"bilinear_zero_sum", "quadratic_smooth"}) {
    const qhs::Solution s = qhs::brute_force_solve(qhs::builtin(name), o);
    CHECK(s.report.verdict);
    CHECK(s.point.norm() <= 0.1);
  }
  const qhs::Solution s = qhs::brute_force_solve(single("(x1 - 0.5)^2"), o);
  CHECK(s.report.verdict);
  CHECK(s.point(0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("brute force ties go to the smallest grid index") {
  // Every point solves the zero problem.
  const qhs::Solution s = qhs::brute_force_solve(single("0"), {});
  CHECK(s.point(0) == -1.0);
}

TEST_CASE("brute force rejects unbounded sets") {
  CHECK_THROWS_AS(qhs::brute_force_solve(qhs::builtin("coercive_unbounded"), {}),
                  qhs::UnsupportedOperation);
  CHECK_THROWS_AS(qhs::best_response_solve(qhs::builtin("coercive_unbounded"), vec({0}), {}),
                  qhs::UnsupportedOperation);
}

TEST_CASE("best response converges") {
  const qhs::BestResponseResult r =
      qhs::best_response_solve(qhs::builtin("bilinear_zero_sum"), vec({1, 1}), {});
  CHECK(r.report.verdict);
  CHECK(static_cast<int>(r.trace.size()) <= 500);
  const qhs::BestResponseResult s =
      qhs::best_response_solve(single("(x1 - 0.5)^2"), vec({-1}), {});
  CHECK(s.report.verdict);
  CHECK(std::abs(s.point(0) - 0.5) <= 1e-2);
}

TEST_CASE("best response accepts an oracle solution immediately") {
  for (const std::string& name : qhs::bounded_builtin_names()) {
    const qhs::QhsSystem sys = qhs::builtin(name);
    const qhs::Solution oracle = qhs::brute_force_solve(sys, {});
    const qhs::BestResponseResult r = qhs::best_response_solve(sys, oracle.point, {});
    CHECK(r.moves == 0);
    CHECK(r.point == oracle.point);
  }
}

TEST_CASE("best-seen violation never decreases") {
  const qhs::BestResponseResult r =
      qhs::best_response_solve(qhs::builtin("absdiff_nonsmooth"), vec({0.9, -0.7}), {});
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    CHECK(r.trace[k].best_seen >= r.trace[k - 1].best_seen);
  }
}

TEST_CASE("solvers are deterministic") {
  const qhs::QhsSystem sys = qhs::builtin("absdiff_nonsmooth");
  const auto a = qhs::best_response_solve(sys, vec({0.9, -0.7}), {});
  const auto b = qhs::best_response_solve(sys, vec({0.9, -0.7}), {});
  CHECK(a.point == b.point);
  CHECK(a.report.overall_worst == b.report.overall_worst);
}

TEST_CASE("KKM audit") {
  const qhs::QhsSystem bil = qhs::builtin("bilinear_zero_sum");
  // Degenerate list: w = v_1 and Phi(v_1, v_1) = 0.
  const qhs::KkmAudit one = qhs::kkm_audit(bil, {vec({0.3, -0.4})}, 20, 0, 1e-2);
  CHECK(one.violations == 0);
  CHECK(one.worst == 0.0);
  const qhs::PointList v = {vec({-1, -1}), vec({1, -0.5}), vec({0, 1}), vec({0.5, 0.5}), vec({-1, 1})};
  for (const char* name : {"bilinear_zero_sum", "quadratic_smooth"}) {
    const qhs::KkmAudit a = qhs::kkm_audit(qhs::builtin(name), v, 200, 1, 1e-2);
    CHECK(a.combos == 200);
    CHECK(a.violations == 0);
    REQUIRE(a.worst_weights.size() == v.size());
    double sum = 0.0;
    for (double w : a.worst_weights) sum += w;
    CHECK(sum == doctest::Approx(1.0));
  }
}

TEST_CASE("KKM audit suite") {
  const qhs::QhsSystem sys = qhs::builtin("fj_system");
  const qhs::KkmAuditSuite a = qhs::kkm_audit_suite(sys, 3, 4, 50, 9, 1e-2);
  REQUIRE(a.v_lists.size() == 3);
  CHECK(a.v_lists[0].size() == 4);
  CHECK(a.combos == 150);
  CHECK(a.violations == 0);
  double worst = a.audits[0].worst;
  for (const qhs::KkmAudit& r : a.audits) worst = std::min(worst, r.worst);
  CHECK(a.worst == worst);
  const qhs::KkmAuditSuite b = qhs::kkm_audit_suite(sys, 3, 4, 50, 9, 1e-2);
  CHECK(a.v_lists[2][3] == b.v_lists[2][3]);
  CHECK(a.worst == b.worst);
  CHECK_FALSE(a.v_lists[0][0] == a.v_lists[1][0]);
  CHECK_THROWS_AS(qhs::kkm_audit_suite(sys, 0, 4, 50, 9, 1e-2), std::invalid_argument);
}

TEST_CASE("coercivity check") {
  const qhs::QhsSystem sys = qhs::builtin("coercive_unbounded");
  const qhs::TruncationSpec spec = *qhs::builtin_truncation("coercive_unbounded");
  const qhs::CoercivityCheck c = qhs::coercivity_check(sys, spec, 100, 10.0, 0);
  CHECK(c.passed);
  CHECK(c.samples == 100);
  CHECK(c.worst_value <= -2.0);
  const qhs::CoercivityCheck n = qhs::coercivity_check(single("x1", real_line()), spec, 100, 10.0, 0);
  CHECK_FALSE(n.passed);
  CHECK(n.violations > 0);
  REQUIRE_FALSE(n.witnesses.empty());
  CHECK(n.witnesses.front()(0) < 0.0);
  CHECK_THROWS_AS(qhs::coercivity_check(sys, spec, 100, 1.5, 0), std::invalid_argument);
}

TEST_CASE("truncated solve localizes in the core") {
  const qhs::QhsSystem sys = qhs::builtin("coercive_unbounded");
  qhs::TruncationSpec spec = *qhs::builtin_truncation("coercive_unbounded");
  for (qhs::SolveMethod m : {qhs::SolveMethod::Grid, qhs::SolveMethod::BestResponse}) {
    qhs::SolveOptions o;
    o.method = m;
    const qhs::TruncatedSolution s = qhs::truncated_solve(sys, spec, o);
    CHECK(std::abs(s.point(0)) <= 0.1);
    CHECK(s.report.verdict);
  }
  spec.v0 = vec({0.5});
  const qhs::TruncatedSolution s = qhs::truncated_solve(sys, spec, {});
  CHECK(std::abs(s.point(0)) <= 0.1);
  CHECK(s.report.verdict);
  spec.radii = {1.0, 1.5};
  CHECK_THROWS_AS(qhs::truncated_solve(sys, spec, {}), std::invalid_argument);
}

TEST_CASE("truncated solve fails without coercivity") {
  const qhs::TruncationSpec spec = *qhs::builtin_truncation("coercive_unbounded");
  CHECK_THROWS_AS(qhs::truncated_solve(single("x1", real_line()), spec, {}), qhs::SolverFailure);
}

TEST_CASE("truncation spec validation") {
  const qhs::QhsSystem sys = qhs::builtin("coercive_unbounded");
  qhs::TruncationSpec spec = *qhs::builtin_truncation("coercive_unbounded");
  CHECK(qhs::core_diameter(spec) == doctest::Approx(2.0));
  spec.radii = {8, 4};
  CHECK_THROWS_AS(qhs::validate_truncation(sys, spec), std::invalid_argument);
  spec.radii = {4, 8};
  spec.v0 = vec({2});
  CHECK_THROWS_AS(qhs::validate_truncation(sys, spec), std::invalid_argument);
}
