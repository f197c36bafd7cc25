#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qhs/geometry.hpp"
#include "qhs/nonsmooth.hpp"
#include "qhs/types.hpp"

namespace qhs {

/// Feasibility policy at API boundaries: points within kFeasibleTol are
/// used as given, points within kProjectTol are projected, anything
/// further out is rejected.
inline constexpr double kFeasibleTol = 1e-6;
inline constexpr double kProjectTol = 1e-3;

/// F_i: maps the full joint point u to an element of X_i* (dim d_i).
class VectorField {
 public:
  using Evaluator = std::function<Vector(const Vector&)>;

  VectorField(int out_dim, Evaluator evaluator);

  int out_dim() const noexcept { return out_dim_; }
  Vector operator()(const Vector& u) const;

 private:
  int out_dim_;
  Evaluator evaluator_;
};

/// One player's data: K_i, T_i : X_i -> Y_i, S_i : X_i -> Z_i, A_i and an
/// optional F_i.
struct Player {
  ConvexSet K;
  Matrix T;
  Matrix S;
  ScalarFn A;
  std::optional<VectorField> F;
};

/// The n-player hemivariational inequality system. Joint points are
/// concatenations (u_1, ..., u_n) with u_i in X_i = R^{d_i}.
class QhsSystem {
 public:
  QhsSystem(std::vector<Player> players, std::optional<ScalarFn> J,
            ClarkeParams params = {});

  int players() const noexcept { return static_cast<int>(players_.size()); }
  const Player& player(int i) const { return players_.at(static_cast<std::size_t>(i)); }
  const std::optional<ScalarFn>& J() const noexcept { return J_; }
  const ClarkeParams& params() const noexcept { return params_; }

  int dim() const noexcept { return dim_; }
  int block_dim(int i) const { return player(i).K.dim(); }
  int block_offset(int i) const { return offsets_.at(static_cast<std::size_t>(i)); }
  Vector block(const Vector& u, int i) const;
  Vector with_block(const Vector& u, int i, const Vector& v_i) const;
  bool bounded() const noexcept;

  /// Tu = (T_1 u_1, ..., T_n u_n) and Su likewise.
  Vector apply_T(const Vector& u) const;
  Vector apply_S(const Vector& u) const;

  /// Validates a joint point against K under the feasibility policy and
  /// returns it (projected when slightly outside).
  Vector admit(const Vector& u) const;
  Vector admit_block(int i, const Vector& v_i) const;

  /// Copy with each K_i replaced.
  QhsSystem with_sets(std::vector<ConvexSet> sets) const;
  QhsSystem with_params(const ClarkeParams& params) const;

 private:
  std::vector<Player> players_;
  std::optional<ScalarFn> J_;
  ClarkeParams params_;
  std::vector<int> offsets_;
  std::vector<int> T_offsets_;
  std::vector<int> S_offsets_;
  int dim_ = 0;
};

/// Per-point cache of Tu, Su and F_i(u) so repeated deviations from the
/// same u share that work. Holds a reference to the system.
class PointEvaluation {
 public:
  PointEvaluation(const QhsSystem& sys, const Vector& u);

  const Vector& point() const noexcept { return u_; }

  /// A_i°(Tu; T_i v_i - T_i u_i) + <F_i(u), v_i - u_i> + J_i°(Su; S_i v_i - S_i u_i).
  double player_term(int i, const Vector& v_i) const;

  /// Sum_i A_i°(Tu; T_i (v_i - u_i)) + F(u, v - u) + J°(Su; Sv - Su).
  double aggregate_term(const Vector& v) const;

  /// Coercivity expression: the aggregate with the joint J° replaced by
  /// the per-block sum Sum_i J_i°(Su; S_i v_i - S_i u_i).
  double coercivity_term(const Vector& v) const;

 private:
  double a_part(int i, const Vector& d_i) const;
  double f_part(int i, const Vector& d_i) const;
  double j_partial(int i, const Vector& d_i) const;

  const QhsSystem& sys_;
  Vector u_;
  Vector Tu_;
  Vector Su_;
  std::vector<Vector> F_;
};

double player_term(const QhsSystem& sys, int i, const Vector& u, const Vector& v_i);
double aggregate_term(const QhsSystem& sys, const Vector& u, const Vector& v);

struct PlayerResidual {
  int player = 0;
  double worst_violation = 0.0;
  Vector argmin_direction;
  int argmin_index = -1;
};

struct ResidualReport {
  std::vector<PlayerResidual> per_player;
  double overall_worst = 0.0;
  double tol = 0.0;
  bool verdict = false;
  int samples_used = 0;
  std::uint64_t seed = 0;
};

/// Per-player deviation samples v_i in K_i.
using SampleFamily = std::vector<PointList>;

/// Grid of each K_i at `resolution` plus `random_extra` seeded random points.
SampleFamily make_sample_family(const QhsSystem& sys, int resolution, int random_extra,
                                std::uint64_t seed);

/// worst_violation_i = min over samples of player_term(i, u, .); verdict
/// iff every worst_violation_i >= -tol. The earliest sample wins ties.
ResidualReport verify_qhs(const QhsSystem& sys, const Vector& u, const SampleFamily& samples,
                          double tol, std::uint64_t seed = 0);

/// Sampled min of the aggregated inequality over the joint deviations
/// built from `samples`: every unilateral deviation (u_{-i}, v_i) plus the
/// zipped joint deviations (v_1^k, ..., v_n^k).
double aggregate_worst(const QhsSystem& sys, const Vector& u, const SampleFamily& samples);

/// False only on a counterexample to "aggregate holds => every player
/// inequality holds": aggregate_worst >= -tol while the per-player check
/// fails at 2 tol + slack.
bool implication_check(const QhsSystem& sys, const Vector& u, const SampleFamily& samples,
                       double tol, double slack = 1e-2);

}  // namespace qhs
