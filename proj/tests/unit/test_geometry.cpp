#include <doctest.h>

#include <cmath>
#include <limits>

#include "qhs/errors.hpp"
#include "qhs/geometry.hpp"
#include "qhs/random.hpp"
#include "support.hpp"

using qhs::ConvexSet;
using qhs::Vector;
using test::vec;

namespace {

std::vector<ConvexSet> variants() {
  qhs::Matrix M(3, 2);
  M << 1, 1, -1, 0, 0, -1;
  return {ConvexSet::box(vec({-1, 0}), vec({1, 2})), ConvexSet::ball(vec({0.5, -0.5}), 1.5),
          ConvexSet::simplex(2, 1.0), ConvexSet::halfspaces(M, vec({1, 0, 0}), vec({0.2, 0.2}))};
}

Vector random_point(qhs::Stream& rng, int dim, double spread) {
  Vector x(dim);
  for (int j = 0; j < dim; ++j) x(j) = rng.uniform(-spread, spread);
  return x;
}

}  // namespace

TEST_CASE("box projection clamps") {
  CHECK(ConvexSet::box(1, -1, 1).project(vec({2}))(0) == 1.0);
  CHECK(ConvexSet::box(1, -1, 1).project(vec({-3}))(0) == -1.0);
}

TEST_CASE("ball projection scales radially") {
  const Vector p = ConvexSet::ball(vec({0, 0}), 1.0).project(vec({3, 4}));
  CHECK(p(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p(1) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("simplex projection onto the face") {
  const Vector p = ConvexSet::simplex(2, 1.0).project(vec({2, 2}));
  CHECK(p(0) == doctest::Approx(0.5));
  CHECK(p(1) == doctest::Approx(0.5));
  const Vector q = ConvexSet::simplex(3, 2.0).project(vec({-1, 0.5, 0.25}));
  CHECK((q - vec({0, 0.5, 0.25})).norm() < 1e-15);
}

TEST_CASE("contains") {
  CHECK(ConvexSet::box(1, -1, 1).contains(vec({0.5}), 0.0));
  CHECK_FALSE(ConvexSet::ball(vec({0, 0}), 1.0).contains(vec({1 + 1e-6, 0}), 1e-9));
  CHECK(ConvexSet::simplex(2, 1.0).contains(vec({0.3, 0.3}), 0.0));
  CHECK_FALSE(ConvexSet::simplex(2, 1.0).contains(vec({0.6, 0.6}), 0.0));
}

TEST_CASE("dimension mismatch is rejected") {
  CHECK_THROWS_AS(ConvexSet::box(2, -1, 1).project(vec({1})), std::invalid_argument);
  CHECK_THROWS_AS(ConvexSet::ball(vec({0}), 1).contains(vec({1, 2}), 0), std::invalid_argument);
}

TEST_CASE("invalid shapes are rejected") {
  CHECK_THROWS_AS(ConvexSet::box(vec({1}), vec({0})), std::invalid_argument);
  CHECK_THROWS_AS(ConvexSet::ball(vec({0}), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ConvexSet::simplex(2, -1.0), std::invalid_argument);
  qhs::Matrix M(1, 1);
  M << 1;
  CHECK_THROWS_AS(ConvexSet::halfspaces(M, vec({0}), vec({1})), std::invalid_argument);
}

TEST_CASE("boundedness") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_FALSE(ConvexSet::box(vec({-inf, 0}), vec({0, 1})).bounded());
  CHECK(ConvexSet::box(2, -1, 1).bounded());
  qhs::Matrix M(2, 2);
  M << -1, 0, 0, -1;
  CHECK_FALSE(ConvexSet::halfspaces(M, vec({0, 0}), vec({1, 1})).bounded());
  for (const ConvexSet& s : variants()) CHECK(s.bounded());
}

TEST_CASE("halfspace bounding box from vertices") {
  const ConvexSet tri = variants()[3];
  CHECK((tri.bounding_box().first - vec({0, 0})).norm() < 1e-12);
  CHECK((tri.bounding_box().second - vec({1, 1})).norm() < 1e-12);
}

TEST_CASE("halfspace projection matches box clamp") {
  // [-1,2] x [0,1] written as halfspaces; projection onto a box is a clamp.
  qhs::Matrix M(4, 2);
  M << 1, 0, -1, 0, 0, 1, 0, -1;
  const ConvexSet h = ConvexSet::halfspaces(M, vec({2, 1, 1, 0}), vec({0, 0.5}));
  const ConvexSet b = ConvexSet::box(vec({-1, 0}), vec({2, 1}));
  qhs::Stream rng(5);
  for (int k = 0; k < 200; ++k) {
    const Vector x = random_point(rng, 2, 4.0);
    CHECK((h.project(x) - b.project(x)).norm() < 1e-8);
  }
}

TEST_CASE("halfspace projection onto the triangle") {
  // Nearest point of {x+y<=1, x,y>=0} to (1,1) is (0.5,0.5); to (2,-1) is (1,0).
  const ConvexSet tri = variants()[3];
  CHECK((tri.project(vec({1, 1})) - vec({0.5, 0.5})).norm() < 1e-8);
  CHECK((tri.project(vec({2, -1})) - vec({1, 0})).norm() < 1e-8);
}

TEST_CASE("projection is idempotent and feasible") {
  qhs::Stream rng(11);
  for (const ConvexSet& s : variants()) {
    for (int k = 0; k < 1000; ++k) {
      const Vector x = random_point(rng, s.dim(), 5.0);
      const Vector p = s.project(x);
      CHECK(s.contains(p, 1e-9));
      CHECK((s.project(p) - p).norm() <= 1e-12);
    }
  }
}

TEST_CASE("projection is the nearest feasible point") {
  qhs::Stream rng(13);
  for (int v = 0; v < 3; ++v) {
    const ConvexSet s = variants()[static_cast<std::size_t>(v)];
    const qhs::PointList ys = qhs::sample_random(s, 100, 3);
    for (int k = 0; k < 50; ++k) {
      const Vector x = random_point(rng, s.dim(), 4.0);
      const double d = (x - s.project(x)).norm();
      for (const Vector& y : ys) CHECK(d <= (x - y).norm() + 1e-9);
    }
  }
}

TEST_CASE("box grid") {
  const qhs::PointList g = qhs::sample_grid(ConvexSet::box(1, 0, 1), 3);
  REQUIRE(g.size() == 3);
  CHECK(g[0](0) == 0.0);
  CHECK(g[1](0) == 0.5);
  CHECK(g[2](0) == 1.0);
  const qhs::PointList g2 = qhs::sample_grid(ConvexSet::box(2, -1, 1), 21);
  CHECK(g2.size() == 441);
  CHECK((g2[1] - vec({-1, -0.9})).norm() < 1e-15);
  CHECK(qhs::sample_grid(ConvexSet::box(3, 0, 1), 4).size() == 64);
}

TEST_CASE("simplex and ball grids") {
  const qhs::PointList s = qhs::sample_grid(ConvexSet::simplex(2, 1.0), 3);
  CHECK(s.size() == 6);
  for (const Vector& p : s) CHECK(ConvexSet::simplex(2, 1.0).contains(p, 0.0));
  const qhs::PointList b = qhs::sample_grid(ConvexSet::ball(vec({0, 0}), 1.0), 3);
  CHECK(b.size() == 5);
  for (const Vector& p : b) CHECK(p.norm() <= 1.0);
}

TEST_CASE("grid points are feasible") {
  for (const ConvexSet& s : variants()) {
    for (const Vector& p : qhs::sample_grid(s, 9)) CHECK(s.contains(p, 1e-12));
  }
}

TEST_CASE("random samples are deterministic and feasible") {
  CHECK(qhs::sample_random(ConvexSet::box(1, 0, 1), 0, 1).empty());
  const auto a = qhs::sample_random(ConvexSet::box(1, 0, 1), 5, 42);
  const auto b = qhs::sample_random(ConvexSet::box(1, 0, 1), 5, 42);
  REQUIRE(a.size() == 5);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k](0) == b[k](0));
  const auto c = qhs::sample_random(ConvexSet::box(1, 0, 1), 5, 43);
  CHECK(a[0](0) != c[0](0));
  for (const Vector& p : qhs::sample_random(ConvexSet::ball(vec({0, 0}), 1.0), 100, 7)) {
    CHECK(p.norm() <= 1.0 + 1e-9);
  }
}

TEST_CASE("sampling an unbounded set is unsupported") {
  const double inf = std::numeric_limits<double>::infinity();
  const ConvexSet r = ConvexSet::box(1, -inf, inf);
  CHECK_THROWS_AS(qhs::sample_grid(r, 3), qhs::UnsupportedOperation);
  CHECK_THROWS_AS(qhs::sample_random(r, 3, 0), qhs::UnsupportedOperation);
}

TEST_CASE("truncation of an unbounded set") {
  const double inf = std::numeric_limits<double>::infinity();
  const ConvexSet t = ConvexSet::box(1, -inf, inf).truncated(vec({0.5}), 4.0);
  REQUIRE(t.bounded());
  CHECK(t.bounding_box().first(0) == -3.5);
  CHECK(t.bounding_box().second(0) == 4.5);
  qhs::Matrix M(2, 2);
  M << -1, 0, 0, -1;
  const ConvexSet q = ConvexSet::halfspaces(M, vec({0, 0}), vec({1, 1})).truncated(vec({0, 0}), 2.0);
  CHECK(q.bounded());
  CHECK((q.bounding_box().second - vec({2, 2})).norm() < 1e-9);
}
