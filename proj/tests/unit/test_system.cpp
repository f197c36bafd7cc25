#include <doctest.h>

#include <cmath>

#include "qhs/instances.hpp"
#include "qhs/random.hpp"
#include "qhs/system.hpp"
#include "support.hpp"

using qhs::Vector;
using test::vec;

namespace {

qhs::QhsSystem single(const char* a) {
  std::vector<qhs::Player> ps;
  ps.push_back({qhs::ConvexSet::box(1, -1, 1), qhs::Matrix::Identity(1, 1),
                qhs::Matrix::Identity(1, 1),
                qhs::scalar_fn_from_expr(qhs::Expr::parse(a, 1), {1}, true), std::nullopt});
  return qhs::QhsSystem(std::move(ps), std::nullopt);
}

Vector random_in(const qhs::QhsSystem& sys, qhs::Stream& rng) {
  Vector u(sys.dim());
  for (int j = 0; j < sys.dim(); ++j) u(j) = rng.uniform(-1, 1);
  return u;
}

}  // namespace

TEST_CASE("player term examples") {
  const qhs::QhsSystem bil = qhs::builtin("bilinear_zero_sum");
  CHECK(std::abs(qhs::player_term(bil, 0, vec({0, 0}), vec({1}))) <= 0.05);
  CHECK(std::abs(qhs::player_term(bil, 0, vec({1, 1}), vec({-1})) + 2.0) <= 0.05);
  CHECK(std::abs(qhs::player_term(single("abs(x1)"), 0, vec({0}), vec({-1})) - 1.0) <= 0.05);
}

TEST_CASE("aggregate term examples") {
  const qhs::QhsSystem bil = qhs::builtin("bilinear_zero_sum");
  CHECK(std::abs(qhs::aggregate_term(bil, vec({0, 0}), vec({1, 1}))) <= 0.1);
  // Sum of partial derivatives: 2(u1-u2)(v1-u1) + 2(u1+u2)(v2-u2) = -2 + 0.
  const qhs::QhsSystem quad = qhs::builtin("quadratic_smooth");
  CHECK(std::abs(qhs::aggregate_term(quad, vec({1, 0}), vec({0, 0})) + 2.0) <= 0.2);
  const double h = 1e-6;
  const auto A1 = [](double y1, double y2) { return (y1 - y2) * (y1 - y2); };
  const auto A2 = [](double y1, double y2) { return (y1 + y2) * (y1 + y2); };
  CHECK(std::abs((A1(1 - h, 0) - A1(1, 0)) / h + 2.0) < 1e-4);
  CHECK(std::abs((A2(1, -h) - A2(1, 0)) / h + 2.0) < 1e-4);
  CHECK(std::abs(qhs::aggregate_term(quad, vec({1, 0}), vec({0, -1})) - (-2.0 - 2.0)) <= 0.2);
}

TEST_CASE("aggregate vanishes on the diagonal") {
  qhs::Stream rng(21);
  for (const std::string& name : qhs::bounded_builtin_names()) {
    const qhs::QhsSystem sys = qhs::builtin(name);
    for (int k = 0; k < 100; ++k) {
      const Vector u = random_in(sys, rng);
      CHECK(qhs::aggregate_term(sys, u, u) == 0.0);
    }
  }
}

TEST_CASE("aggregate equals the sum of player terms without F and J") {
  qhs::Stream rng(22);
  for (const char* name : {"bilinear_zero_sum", "quadratic_smooth", "absdiff_nonsmooth"}) {
    const qhs::QhsSystem sys = qhs::builtin(name);
    for (int k = 0; k < 30; ++k) {
      const Vector u = random_in(sys, rng);
      const Vector v = random_in(sys, rng);
      double sum = 0.0;
      for (int i = 0; i < sys.players(); ++i) sum += qhs::player_term(sys, i, u, sys.block(v, i));
      CHECK(std::abs(qhs::aggregate_term(sys, u, v) - sum) <= 1e-9);
    }
  }
}

TEST_CASE("aggregate is convex in the deviation at sample level") {
  qhs::Stream rng(23);
  for (const std::string& name : qhs::bounded_builtin_names()) {
    const qhs::QhsSystem sys = qhs::builtin(name);
    for (int k = 0; k < 100; ++k) {
      const Vector u = random_in(sys, rng);
      const Vector v1 = random_in(sys, rng);
      const Vector v2 = random_in(sys, rng);
      const double lam = rng.uniform();
      const double lhs = qhs::aggregate_term(sys, u, lam * v1 + (1 - lam) * v2);
      const double rhs = lam * qhs::aggregate_term(sys, u, v1) +
                         (1 - lam) * qhs::aggregate_term(sys, u, v2);
      CHECK(lhs <= rhs + 0.1);
    }
  }
}

TEST_CASE("joint J is dominated by the per-block sum") {
  qhs::Stream rng(24);
  for (const char* name : {"fj_system", "integral_obstacle"}) {
    const qhs::QhsSystem sys = qhs::builtin(name);
    for (int k = 0; k < 50; ++k) {
      const Vector u = random_in(sys, rng);
      const Vector v = random_in(sys, rng);
      const qhs::PointEvaluation pe(sys, u);
      CHECK(pe.aggregate_term(v) <= pe.coercivity_term(v) + 0.1);
    }
  }
}

TEST_CASE("verification") {
  const qhs::QhsSystem bil = qhs::builtin("bilinear_zero_sum");
  const qhs::SampleFamily fam = qhs::make_sample_family(bil, 21, 0, 0);
  CHECK(fam[0].size() == 21);
  const qhs::ResidualReport ok = qhs::verify_qhs(bil, vec({0, 0}), fam, 1e-2);
  CHECK(ok.verdict);
  CHECK(ok.samples_used == 42);
  const qhs::ResidualReport bad = qhs::verify_qhs(bil, vec({1, 1}), fam, 1e-2);
  CHECK_FALSE(bad.verdict);
  CHECK(std::abs(bad.overall_worst + 2.0) <= 0.05);
  CHECK(bad.per_player[0].argmin_index == 0);
  CHECK(bad.per_player[0].argmin_direction(0) == -1.0);
  const qhs::QhsSystem ad = qhs::builtin("absdiff_nonsmooth");
  CHECK(qhs::verify_qhs(ad, vec({0, 0}), qhs::make_sample_family(ad, 21, 0, 0), 1e-2).verdict);
}

TEST_CASE("verification ties go to the earliest sample") {
  // Every deviation scores 0 at the origin of the bilinear game.
  const qhs::QhsSystem bil = qhs::builtin("bilinear_zero_sum");
  const qhs::ResidualReport r =
      qhs::verify_qhs(bil, vec({0, 0}), qhs::make_sample_family(bil, 5, 0, 0), 1e-2);
  CHECK(r.per_player[0].argmin_index == 0);
  CHECK(r.per_player[1].argmin_index == 0);
}

TEST_CASE("report determinism") {
  const qhs::QhsSystem sys = qhs::builtin("absdiff_nonsmooth");
  const qhs::SampleFamily fam = qhs::make_sample_family(sys, 11, 50, 9);
  const auto a = qhs::verify_qhs(sys, vec({0.3, -0.2}), fam, 1e-2, 9);
  const auto b = qhs::verify_qhs(sys, vec({0.3, -0.2}), fam, 1e-2, 9);
  CHECK(a.overall_worst == b.overall_worst);
  CHECK(a.per_player[1].argmin_index == b.per_player[1].argmin_index);
  CHECK(qhs::make_sample_family(sys, 11, 50, 9)[1][40] == fam[1][40]);
}

TEST_CASE("empty samples are rejected") {
  const qhs::QhsSystem bil = qhs::builtin("bilinear_zero_sum");
  CHECK_THROWS_AS(qhs::verify_qhs(bil, vec({0, 0}), qhs::SampleFamily(2), 1e-2),
                  std::invalid_argument);
}

TEST_CASE("implication check") {
  const qhs::QhsSystem bil = qhs::builtin("bilinear_zero_sum");
  const qhs::SampleFamily fam = qhs::make_sample_family(bil, 21, 0, 0);
  CHECK(qhs::implication_check(bil, vec({0, 0}), fam, 1e-2));
  CHECK(qhs::implication_check(bil, vec({1, 1}), fam, 1e-2));
  const qhs::QhsSystem fj = qhs::builtin("fj_system");
  const qhs::SampleFamily ffam = qhs::make_sample_family(fj, 11, 20, 1);
  qhs::Stream rng(25);
  for (int k = 0; k < 100; ++k) CHECK(qhs::implication_check(fj, random_in(fj, rng), ffam, 1e-2));
}

TEST_CASE("feasibility policy") {
  const qhs::QhsSystem bil = qhs::builtin("bilinear_zero_sum");
  CHECK(bil.admit(vec({1 + 1e-7, 0}))(0) == 1 + 1e-7);
  CHECK(bil.admit(vec({1 + 1e-4, 0}))(0) == 1.0);
  CHECK_THROWS_AS(bil.admit(vec({1.1, 0})), std::invalid_argument);
  CHECK_THROWS_AS(qhs::player_term(bil, 0, vec({0, 0}), vec({2})), std::invalid_argument);
}

TEST_CASE("dimension validation names the field") {
  std::vector<qhs::Player> ps;
  ps.push_back({qhs::ConvexSet::box(2, -1, 1), qhs::Matrix::Identity(2, 1),
                qhs::Matrix::Identity(2, 2), qhs::ScalarFn::zero({2}), std::nullopt});
  try {
    qhs::QhsSystem sys(std::move(ps), std::nullopt);
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).rfind("players[0].T", 0) == 0);
  }
}

TEST_CASE("J must claim regularity") {
  std::vector<qhs::Player> ps;
  ps.push_back({qhs::ConvexSet::box(1, -1, 1), qhs::Matrix::Identity(1, 1),
                qhs::Matrix::Identity(1, 1), qhs::ScalarFn::zero({1}), std::nullopt});
  CHECK_THROWS_AS(qhs::QhsSystem(ps, test::fn("abs(x1)", 1, false)), std::invalid_argument);
  CHECK_NOTHROW(qhs::QhsSystem(ps, test::fn("abs(x1)", 1, true)));
}
