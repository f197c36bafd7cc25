#pragma once

#include <cstdint>
#include <utility>
#include <variant>

#include "qhs/types.hpp"

namespace qhs {

/// Axis-aligned box; bounds may be +-infinity.
struct Box {
  Vector lo;
  Vector hi;
};

/// Closed Euclidean ball.
struct Ball {
  Vector center;
  double radius = 1.0;
};

/// The scaled simplex {x >= 0, sum(x) <= scale}.
struct Simplex {
  int dim = 1;
  double scale = 1.0;
};

/// Polyhedron {x : M x <= b}. `witness` is a feasible point supplied at
/// construction to certify nonemptiness.
struct HalfspaceIntersection {
  Matrix M;
  Vector b;
  Vector witness;
};

/// A closed convex feasible set K_i. Immutable after construction.
class ConvexSet {
 public:
  using Shape = std::variant<Box, Ball, Simplex, HalfspaceIntersection>;

  static ConvexSet box(Vector lo, Vector hi);
  /// Box with identical bounds in every coordinate.
  static ConvexSet box(int dim, double lo, double hi);
  static ConvexSet ball(Vector center, double radius);
  static ConvexSet simplex(int dim, double scale);
  static ConvexSet halfspaces(Matrix M, Vector b, Vector witness);

  int dim() const noexcept { return dim_; }
  bool bounded() const noexcept { return bounded_; }
  const Shape& shape() const noexcept { return shape_; }

  /// Largest amount by which x violates a defining constraint (0 when
  /// feasible).
  double violation(const Vector& x) const;
  bool contains(const Vector& x, double tol) const;

  /// Euclidean projection (exact for Box/Ball/Simplex, Dykstra iteration
  /// for HalfspaceIntersection).
  Vector project(const Vector& x) const;

  /// Tight axis-aligned bounding box; infinite entries when unbounded.
  const std::pair<Vector, Vector>& bounding_box() const noexcept {
    return bbox_;
  }

  /// Intersection with the box center +- radius. Only defined for Box and
  /// HalfspaceIntersection (the variants that can be unbounded) and for
  /// bounded sets, which are returned unchanged.
  ConvexSet truncated(const Vector& center, double radius) const;

 private:
  ConvexSet(Shape shape, int dim);
  void compute_extent();

  Shape shape_;
  int dim_ = 0;
  bool bounded_ = true;
  std::pair<Vector, Vector> bbox_;
};

/// Deterministic lattice over a bounded set. Box: `resolution` nodes per
/// axis including endpoints, last axis fastest. Ball/HalfspaceIntersection:
/// bounding-box lattice filtered by membership. Simplex: barycentric
/// lattice with denominator resolution-1.
PointList sample_grid(const ConvexSet& set, int resolution);

/// `count` uniform draws from the bounding box, projected onto the set.
PointList sample_random(const ConvexSet& set, int count, std::uint64_t seed);

}  // namespace qhs
