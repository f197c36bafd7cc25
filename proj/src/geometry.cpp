#include "qhs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

#include "qhs/errors.hpp"
#include "qhs/random.hpp"

namespace qhs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDykstraResidual = 1e-8;
constexpr double kFeasibleSnap = 1e-12;
constexpr int kDykstraMaxIters = 10'000;
constexpr long kMaxSubsets = 500'000;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dim(const Vector& x, int dim) {
  if (x.size() != dim) {
    throw std::invalid_argument("dimension mismatch: expected " +
                                std::to_string(dim) + ", got " +
                                std::to_string(x.size()));
  }
}

// Projection onto {x >= 0, sum x = s} (sort-based).
Vector project_to_simplex_face(const Vector& x, double s) {
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double t = (cumulative - s) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) theta = t;
  }
  return (x.array() - theta).max(0.0).matrix();
}

double halfspace_violation(const HalfspaceIntersection& h, const Vector& x) {
  return std::max(0.0, (h.M * x - h.b).maxCoeff());
}

Vector project_halfspaces(const HalfspaceIntersection& h, const Vector& x0) {
  const Eigen::Index rows = h.M.rows();
  Vector x = x0;
  Matrix corrections = Matrix::Zero(x.size(), rows);
  const Vector row_norm2 = h.M.rowwise().squaredNorm();

  for (int iter = 0; iter < kDykstraMaxIters; ++iter) {
    const Vector before = x;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Vector y = x + corrections.col(r);
      const double excess = h.M.row(r).dot(y) - h.b[r];
      Vector projected = y;
      if (excess > 0.0) projected -= (excess / row_norm2[r]) * h.M.row(r).transpose();
      corrections.col(r) = y - projected;
      x = projected;
    }
    if (halfspace_violation(h, x) <= kDykstraResidual &&
        (x - before).norm() <= kDykstraResidual) {
      break;
    }
  }
  // Cyclic polish so the result is feasible to kFeasibleSnap, which makes a
  // second projection a no-op.
  for (int iter = 0; iter < kDykstraMaxIters; ++iter) {
    if (halfspace_violation(h, x) <= kFeasibleSnap) break;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double excess = h.M.row(r).dot(x) - h.b[r];
      if (excess > 0.0) x -= (excess / row_norm2[r]) * h.M.row(r).transpose();
    }
  }
  return x;
}

// Calls visit(indices) for every k-subset of {0..n-1} in lexicographic
// order.
void for_each_subset(int n, int k,
                     const std::function<void(const std::vector<int>&)>& visit) {
  if (k > n) return;
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    visit(idx);
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == n - k + pos) --pos;
    if (pos < 0) return;
    ++idx[pos];
    for (int j = pos + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long result = 1;
  for (int j = 1; j <= k; ++j) {
    result = result * (n - k + j) / j;
    if (result > kMaxSubsets) return result;
  }
  return result;
}

Matrix select_rows(const Matrix& M, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), M.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(r) = M.row(rows[r]);
  return out;
}

// {M d <= 0} = {0} iff the polyhedron is bounded. A nontrivial cone either
// contains a line (rank M < dim) or an extreme ray cut out by dim-1
// independent active rows.
bool polyhedron_bounded(const HalfspaceIntersection& h) {
  const int dim = static_cast<int>(h.M.cols());
  const int rows = static_cast<int>(h.M.rows());
  Eigen::FullPivLU<Matrix> full(h.M);
  if (full.rank() < dim) return false;
  if (binomial(rows, dim - 1) > kMaxSubsets) {
    throw UnsupportedOperation("halfspace system too large for boundedness test");
  }
  const double scale = std::max(1.0, h.M.cwiseAbs().maxCoeff());
  bool bounded = true;
  for_each_subset(rows, dim - 1, [&](const std::vector<int>& subset) {
    if (!bounded) return;
    Vector ray;
    if (dim == 1) {
      ray = Vector::Ones(1);
    } else {
      Eigen::FullPivLU<Matrix> lu(select_rows(h.M, subset));
      if (lu.rank() != dim - 1) return;
      const Matrix kernel = lu.kernel();
      if (kernel.cols() != 1) return;
      ray = kernel.col(0).normalized();
    }
    for (double sign : {1.0, -1.0}) {
      if ((h.M * (sign * ray)).maxCoeff() <= 1e-12 * scale) bounded = false;
    }
  });
  return bounded;
}

std::pair<Vector, Vector> polytope_extent(const HalfspaceIntersection& h) {
  const int dim = static_cast<int>(h.M.cols());
  const int rows = static_cast<int>(h.M.rows());
  if (binomial(rows, dim) > kMaxSubsets) {
    throw UnsupportedOperation("halfspace system too large for vertex enumeration");
  }
  Vector lo = Vector::Constant(dim, kInf);
  Vector hi = Vector::Constant(dim, -kInf);
  const double scale = std::max(1.0, h.b.cwiseAbs().maxCoeff());
  for_each_subset(rows, dim, [&](const std::vector<int>& subset) {
    const Matrix A = select_rows(h.M, subset);
    Eigen::FullPivLU<Matrix> lu(A);
    if (lu.rank() != dim) return;
    Vector rhs(dim);
    for (int r = 0; r < dim; ++r) rhs[r] = h.b[subset[r]];
    const Vector vertex = lu.solve(rhs);
    if (halfspace_violation(h, vertex) > 1e-9 * scale) return;
    lo = lo.cwiseMin(vertex);
    hi = hi.cwiseMax(vertex);
  });
  return {lo, hi};
}

}  // namespace

ConvexSet::ConvexSet(Shape shape, int dim) : shape_(std::move(shape)), dim_(dim) {
  compute_extent();
}

ConvexSet ConvexSet::box(Vector lo, Vector hi) {
  if (lo.size() != hi.size() || lo.size() == 0) {
    throw std::invalid_argument("box bounds must be nonempty and of equal length");
  }
  for (Eigen::Index k = 0; k < lo.size(); ++k) {
    if (std::isnan(lo[k]) || std::isnan(hi[k]) || lo[k] > hi[k]) {
      throw std::invalid_argument("box requires lo <= hi componentwise");
    }
  }
  const int dim = static_cast<int>(lo.size());
  return ConvexSet(Box{std::move(lo), std::move(hi)}, dim);
}

ConvexSet ConvexSet::box(int dim, double lo, double hi) {
  return box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

ConvexSet ConvexSet::ball(Vector center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("ball radius must be positive and finite");
  }
  if (center.size() == 0 || !center.allFinite()) {
    throw std::invalid_argument("ball center must be a finite nonempty vector");
  }
  const int dim = static_cast<int>(center.size());
  return ConvexSet(Ball{std::move(center), radius}, dim);
}

ConvexSet ConvexSet::simplex(int dim, double scale) {
  if (dim <= 0) throw std::invalid_argument("simplex dim must be positive");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("simplex scale must be positive and finite");
  }
  return ConvexSet(Simplex{dim, scale}, dim);
}

ConvexSet ConvexSet::halfspaces(Matrix M, Vector b, Vector witness) {
  if (M.rows() == 0 || M.cols() == 0 || M.rows() != b.size() ||
      M.cols() != witness.size()) {
    throw std::invalid_argument("halfspace system dimensions are inconsistent");
  }
  if (!M.allFinite() || !b.allFinite() || !witness.allFinite()) {
    throw std::invalid_argument("halfspace system must be finite");
  }
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    if (M.row(r).squaredNorm() == 0.0) {
      throw std::invalid_argument("halfspace row " + std::to_string(r) + " is zero");
    }
  }
  HalfspaceIntersection h{std::move(M), std::move(b), std::move(witness)};
  if (halfspace_violation(h, h.witness) > 1e-9) {
    throw std::invalid_argument("halfspace witness point is infeasible");
  }
  const int dim = static_cast<int>(h.M.cols());
  return ConvexSet(std::move(h), dim);
}

void ConvexSet::compute_extent() {
  std::visit(
      Overloaded{
          [&](const Box& b) {
            bbox_ = {b.lo, b.hi};
            bounded_ = b.lo.allFinite() && b.hi.allFinite();
          },
          [&](const Ball& b) {
            bbox_ = {b.center.array() - b.radius, b.center.array() + b.radius};
            bounded_ = true;
          },
          [&](const Simplex& s) {
            bbox_ = {Vector::Zero(s.dim), Vector::Constant(s.dim, s.scale)};
            bounded_ = true;
          },
          [&](const HalfspaceIntersection& h) {
            bounded_ = polyhedron_bounded(h);
            if (bounded_) {
              bbox_ = polytope_extent(h);
            } else {
              bbox_ = {Vector::Constant(dim_, -kInf), Vector::Constant(dim_, kInf)};
            }
          },
      },
      shape_);
}

double ConvexSet::violation(const Vector& x) const {
  check_dim(x, dim_);
  return std::visit(
      Overloaded{
          [&](const Box& b) {
            return std::max({0.0, (b.lo - x).maxCoeff(), (x - b.hi).maxCoeff()});
          },
          [&](const Ball& b) { return std::max(0.0, (x - b.center).norm() - b.radius); },
          [&](const Simplex& s) {
            return std::max({0.0, -x.minCoeff(), x.sum() - s.scale});
          },
          [&](const HalfspaceIntersection& h) { return halfspace_violation(h, x); },
      },
      shape_);
}

bool ConvexSet::contains(const Vector& x, double tol) const {
  if (tol < 0.0) throw std::invalid_argument("contains: tol must be >= 0");
  return violation(x) <= tol;
}

Vector ConvexSet::project(const Vector& x) const {
  check_dim(x, dim_);
  return std::visit(
      Overloaded{
          [&](const Box& b) -> Vector { return x.cwiseMax(b.lo).cwiseMin(b.hi); },
          [&](const Ball& b) -> Vector {
            const Vector offset = x - b.center;
            const double norm = offset.norm();
            if (norm <= b.radius) return x;
            return b.center + offset * (b.radius / norm);
          },
          [&](const Simplex& s) -> Vector {
            const Vector clipped = x.cwiseMax(0.0);
            if (clipped.sum() <= s.scale) return clipped;
            return project_to_simplex_face(x, s.scale);
          },
          [&](const HalfspaceIntersection& h) -> Vector {
            if (halfspace_violation(h, x) <= kFeasibleSnap) return x;
            return project_halfspaces(h, x);
          },
      },
      shape_);
}

ConvexSet ConvexSet::truncated(const Vector& center, double radius) const {
  check_dim(center, dim_);
  if (!(radius > 0.0)) throw std::invalid_argument("truncation radius must be positive");
  if (bounded_) return *this;
  if (const auto* b = std::get_if<Box>(&shape_)) {
    Vector lo = b->lo.cwiseMax((center.array() - radius).matrix());
    Vector hi = b->hi.cwiseMin((center.array() + radius).matrix());
    if ((lo.array() > hi.array()).any()) {
      throw std::invalid_argument("truncation box does not meet the set");
    }
    return box(std::move(lo), std::move(hi));
  }
  const auto& h = std::get<HalfspaceIntersection>(shape_);
  const Eigen::Index rows = h.M.rows();
  Matrix M(rows + 2 * dim_, dim_);
  Vector b(rows + 2 * dim_);
  M.topRows(rows) = h.M;
  b.head(rows) = h.b;
  M.block(rows, 0, dim_, dim_) = Matrix::Identity(dim_, dim_);
  M.block(rows + dim_, 0, dim_, dim_) = -Matrix::Identity(dim_, dim_);
  b.segment(rows, dim_) = center.array() + radius;
  b.segment(rows + dim_, dim_) = radius - center.array();
  if (halfspace_violation(h, center) > 1e-9) {
    throw std::invalid_argument("truncation center must lie in the set");
  }
  return halfspaces(std::move(M), std::move(b), center);
}

PointList sample_grid(const ConvexSet& set, int resolution) {
  if (resolution <= 0) throw std::invalid_argument("resolution must be positive");
  if (!set.bounded()) {
    throw UnsupportedOperation("sample_grid requires a bounded set");
  }
  const int dim = set.dim();
  PointList out;

  if (const auto* s = std::get_if<Simplex>(&set.shape())) {
    const int denom = std::max(resolution - 1, 0);
    std::vector<int> counts(static_cast<std::size_t>(dim), 0);
    // Enumerate compositions with sum <= denom, last coordinate fastest.
    std::function<void(int, int)> rec = [&](int axis, int remaining) {
      if (axis == dim) {
        Vector p(dim);
        for (int k = 0; k < dim; ++k) {
          p[k] = denom == 0 ? 0.0 : s->scale * counts[k] / denom;
        }
        out.push_back(std::move(p));
        return;
      }
      for (int c = 0; c <= remaining; ++c) {
        counts[axis] = c;
        rec(axis + 1, remaining - c);
      }
    };
    rec(0, denom);
    return out;
  }

  const auto& [lo, hi] = set.bounding_box();
  auto node = [&](int axis, int k) {
    if (resolution == 1) return 0.5 * (lo[axis] + hi[axis]);
    const int n = resolution - 1;
    return ((n - k) * lo[axis] + k * hi[axis]) / n;
  };
  const bool filter = !std::holds_alternative<Box>(set.shape());
  std::vector<int> index(static_cast<std::size_t>(dim), 0);
  while (true) {
    Vector p(dim);
    for (int a = 0; a < dim; ++a) p[a] = node(a, index[a]);
    if (!filter || set.contains(p, 1e-12)) out.push_back(std::move(p));
    int axis = dim - 1;
    while (axis >= 0 && ++index[axis] == resolution) {
      index[axis] = 0;
      --axis;
    }
    if (axis < 0) break;
  }
  return out;
}

PointList sample_random(const ConvexSet& set, int count, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("count must be nonnegative");
  if (!set.bounded()) {
    throw UnsupportedOperation("sample_random requires a bounded set");
  }
  const auto& [lo, hi] = set.bounding_box();
  PointList out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Stream rng(seed, {static_cast<std::uint64_t>(k)});
    Vector p(set.dim());
    for (int a = 0; a < set.dim(); ++a) p[a] = rng.uniform(lo[a], hi[a]);
    out.push_back(set.project(p));
  }
  return out;
}

}  // namespace qhs
