#include "qhs/nonsmooth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "qhs/errors.hpp"
#include "qhs/random.hpp"

namespace qhs {

namespace {

void check_dims(const ScalarFn& f, const Vector& u, const Vector& v) {
  if (u.size() != f.dim() || v.size() != f.dim()) {
    throw std::invalid_argument("point/direction dimension does not match function (" +
                                std::to_string(f.dim()) + ")");
  }
}

// Sampled limsup of (g(w + tau v) - g(w)) / tau over w in B(u, delta_k),
// tau in (0, delta_k]. `g` evaluates on a local vector of dim u.size().
// Only the two finest scales enter the result; every (scale, sample) pair
// owns its substream, so skipping the coarse scales leaves them unchanged.
template <class Eval>
double estimate_clarke(const Eval& g, const Vector& u, const Vector& v,
                       const ClarkeParams& p) {
  if (v.isZero(0.0)) return 0.0;
  const Eigen::Index dim = u.size();
  Vector w(dim);
  Vector shifted(dim);
  double best = -std::numeric_limits<double>::infinity();
  for (int k = std::max(0, p.scales - 2); k < p.scales; ++k) {
    const double delta = p.delta0 * std::pow(p.shrink, k);
    for (int s = 0; s < p.samples_per_scale; ++s) {
      Stream rng(p.seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(s)});
      w = u + rng.in_ball(dim, delta);
      const double tau = delta * (1.0 - rng.uniform());
      shifted = w + tau * v;
      const double q = (g(shifted) - g(w)) / tau;
      if (!std::isfinite(q)) throw NumericDomainError("non-finite difference quotient");
      best = std::max(best, q);
    }
  }
  return best;
}

}  // namespace

void ClarkeParams::validate() const {
  if (!(delta0 > 0.0)) throw std::invalid_argument("clarke.delta0 must be > 0");
  if (!(shrink > 0.0 && shrink < 1.0)) {
    throw std::invalid_argument("clarke.shrink must lie in (0, 1)");
  }
  if (scales < 2) throw std::invalid_argument("clarke.scales must be >= 2");
  if (samples_per_scale < 1) {
    throw std::invalid_argument("clarke.samples_per_scale must be >= 1");
  }
}

double gap_tolerance(const ClarkeParams& params) {
  return 0.1 * params.delta0 / ClarkeParams{}.delta0;
}

ScalarFn::ScalarFn(std::vector<int> block_dims, Evaluator evaluator, bool claims_regular,
                   DirectionalDerivative analytic_dd)
    : block_dims_(std::move(block_dims)),
      evaluator_(std::move(evaluator)),
      claims_regular_(claims_regular),
      analytic_dd_(std::move(analytic_dd)) {
  if (block_dims_.empty()) throw std::invalid_argument("ScalarFn needs at least one block");
  if (!evaluator_) throw std::invalid_argument("ScalarFn needs an evaluator");
  offsets_.reserve(block_dims_.size());
  for (int d : block_dims_) {
    if (d <= 0) throw std::invalid_argument("ScalarFn block dims must be positive");
    offsets_.push_back(dim_);
    dim_ += d;
  }
}

ScalarFn ScalarFn::zero(std::vector<int> block_dims) {
  ScalarFn f(
      std::move(block_dims), [](const Vector&) { return 0.0; }, true,
      [](const Vector&, const Vector&) { return 0.0; });
  f.is_zero_ = true;
  return f;
}

double ScalarFn::operator()(const Vector& x) const {
  if (x.size() != dim_) throw std::invalid_argument("ScalarFn: dimension mismatch");
  const double value = evaluator_(x);
  if (!std::isfinite(value)) throw NumericDomainError("function evaluated to a non-finite value");
  return value;
}

double ScalarFn::analytic_dd(const Vector& u, const Vector& v) const {
  if (!analytic_dd_) throw std::logic_error("ScalarFn has no analytic derivative");
  const double value = analytic_dd_(u, v);
  if (!std::isfinite(value)) throw NumericDomainError("analytic derivative is non-finite");
  return value;
}

Vector embed_block(const ScalarFn& f, int block, const Vector& v_block) {
  if (block < 0 || block >= f.blocks()) throw std::invalid_argument("block index out of range");
  if (v_block.size() != f.block_dim(block)) {
    throw std::invalid_argument("block direction dimension mismatch");
  }
  Vector full = Vector::Zero(f.dim());
  full.segment(f.block_offset(block), f.block_dim(block)) = v_block;
  return full;
}

double directional_quotient(const ScalarFn& f, const Vector& w, const Vector& v, double tau) {
  check_dims(f, w, v);
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  const Vector shifted = w + tau * v;
  const double q = (f(shifted) - f(w)) / tau;
  if (!std::isfinite(q)) throw NumericDomainError("non-finite difference quotient");
  return q;
}

double clarke_dd(const ScalarFn& f, const Vector& u, const Vector& v,
                 const ClarkeParams& params) {
  check_dims(f, u, v);
  if (f.is_zero() || v.isZero(0.0)) return 0.0;
  if (f.has_analytic_dd()) return f.analytic_dd(u, v);
  params.validate();
  return estimate_clarke([&f](const Vector& x) { return f(x); }, u, v, params);
}

double one_sided_dd(const ScalarFn& f, const Vector& u, const Vector& v,
                    const ClarkeParams& params) {
  check_dims(f, u, v);
  params.validate();
  if (v.isZero(0.0)) return 0.0;
  const double base = f(u);
  std::vector<double> quotients;
  quotients.reserve(static_cast<std::size_t>(params.scales));
  for (int k = 0; k < params.scales; ++k) {
    const double tau = params.delta0 * std::pow(params.shrink, k);
    const Vector shifted = u + tau * v;
    quotients.push_back((f(shifted) - base) / tau);
  }
  const double fine = quotients.back();
  const double coarse = quotients[quotients.size() - 2];
  const double rho = params.shrink;
  const double value = (fine - rho * coarse) / (1.0 - rho);
  if (!std::isfinite(value)) throw NumericDomainError("non-finite one-sided derivative");
  return value;
}

double regularity_gap(const ScalarFn& f, const Vector& u, const Vector& v,
                      const ClarkeParams& params) {
  return clarke_dd(f, u, v, params) - one_sided_dd(f, u, v, params);
}

double partial_clarke_dd(const ScalarFn& f, int block, const Vector& u, const Vector& v_block,
                         const ClarkeParams& params) {
  if (u.size() != f.dim()) throw std::invalid_argument("point dimension mismatch");
  if (block < 0 || block >= f.blocks()) throw std::invalid_argument("block index out of range");
  if (v_block.size() != f.block_dim(block)) {
    throw std::invalid_argument("block direction dimension mismatch");
  }
  if (f.is_zero() || v_block.isZero(0.0)) return 0.0;
  if (f.has_analytic_dd() && f.claims_regular()) {
    return f.analytic_dd(u, embed_block(f, block, v_block));
  }
  params.validate();
  const int offset = f.block_offset(block);
  const int len = f.block_dim(block);
  Vector full = u;
  auto restricted = [&](const Vector& local) {
    full.segment(offset, len) = local;
    return f(full);
  };
  return estimate_clarke(restricted, Vector(u.segment(offset, len)), v_block, params);
}

double sum_rule_gap(const ScalarFn& J, const Vector& u, int block, const Vector& v_block,
                    const ClarkeParams& params) {
  if (!J.claims_regular()) {
    throw std::invalid_argument("sum_rule_gap requires a function that claims regularity");
  }
  return partial_clarke_dd(J, block, u, v_block, params) -
         clarke_dd(J, u, embed_block(J, block, v_block), params);
}

}  // namespace qhs
