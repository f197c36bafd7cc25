#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qhs/types.hpp"

namespace qhs {

/// Discretization of the limsup over w -> u, tau -> 0.
struct ClarkeParams {
  double delta0 = 0.1;
  double shrink = 0.5;
  int scales = 6;
  int samples_per_scale = 64;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

/// Inequality-check slack at the given params: 0.1 at the default delta0,
/// scaled proportionally with delta0.
double gap_tolerance(const ClarkeParams& params);

/// A locally Lipschitz function over a product of blocks (Y_1 x ... x Y_n
/// or Z_1 x ... x Z_n), evaluated on the concatenated coordinate vector.
class ScalarFn {
 public:
  using Evaluator = std::function<double(const Vector&)>;
  /// Exact Clarke directional derivative f°(u; v) over the full space.
  using DirectionalDerivative = std::function<double(const Vector&, const Vector&)>;

  ScalarFn(std::vector<int> block_dims, Evaluator evaluator,
           bool claims_regular = false, DirectionalDerivative analytic_dd = {});

  /// The identically zero function.
  static ScalarFn zero(std::vector<int> block_dims);

  int dim() const noexcept { return dim_; }
  int blocks() const noexcept { return static_cast<int>(block_dims_.size()); }
  int block_dim(int i) const { return block_dims_.at(static_cast<std::size_t>(i)); }
  int block_offset(int i) const { return offsets_.at(static_cast<std::size_t>(i)); }
  const std::vector<int>& block_dims() const noexcept { return block_dims_; }

  bool claims_regular() const noexcept { return claims_regular_; }
  bool has_analytic_dd() const noexcept { return static_cast<bool>(analytic_dd_); }
  bool is_zero() const noexcept { return is_zero_; }

  /// Throws NumericDomainError when the evaluator returns a non-finite value.
  double operator()(const Vector& x) const;
  double analytic_dd(const Vector& u, const Vector& v) const;

 private:
  std::vector<int> block_dims_;
  std::vector<int> offsets_;
  int dim_ = 0;
  Evaluator evaluator_;
  bool claims_regular_ = false;
  DirectionalDerivative analytic_dd_;
  bool is_zero_ = false;
};

/// (f(w + tau v) - f(w)) / tau, exactly as evaluated.
double directional_quotient(const ScalarFn& f, const Vector& w, const Vector& v,
                            double tau);

/// Clarke generalized directional derivative f°(u; v). Uses the analytic
/// derivative when present; otherwise the sampled estimate: per scale
/// k the maximal quotient over base points uniform in B(u, delta0 *
/// shrink^k) and steps tau uniform in (0, delta_k], maximized over the two
/// finest scales. Returns exactly 0 for v = 0.
double clarke_dd(const ScalarFn& f, const Vector& u, const Vector& v,
                 const ClarkeParams& params);

/// One-sided derivative f'(u; v) from quotients at tau_k = delta0 * shrink^k
/// with one Richardson step on the two finest scales.
double one_sided_dd(const ScalarFn& f, const Vector& u, const Vector& v,
                    const ClarkeParams& params);

/// clarke_dd - one_sided_dd. Near zero for regular functions.
double regularity_gap(const ScalarFn& f, const Vector& u, const Vector& v,
                      const ClarkeParams& params);

/// Partial Clarke derivative in block i: the base point moves only inside
/// block i. When f claims regularity and carries an analytic derivative,
/// that derivative is evaluated on the embedded direction (the two agree
/// for regular f).
double partial_clarke_dd(const ScalarFn& f, int block, const Vector& u,
                         const Vector& v_block, const ClarkeParams& params);

/// partial_clarke_dd(J, i, u, v_i) - clarke_dd(J, u, (0, .., v_i, .., 0)).
/// Nonnegative up to gap_tolerance for regular J.
double sum_rule_gap(const ScalarFn& J, const Vector& u, int block,
                    const Vector& v_block, const ClarkeParams& params);

/// Embeds a block vector into the full space with zeros elsewhere.
Vector embed_block(const ScalarFn& f, int block, const Vector& v_block);

}  // namespace qhs
