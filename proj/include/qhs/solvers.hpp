#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qhs/system.hpp"

namespace qhs {

enum class SolveMethod { Grid, BestResponse };

SolveMethod parse_method(const std::string& name);
std::string to_string(SolveMethod method);

struct SolveOptions {
  SolveMethod method = SolveMethod::Grid;
  int resolution = 21;
  int max_iters = 500;
  double step = 0.5;
  double tol = 1e-2;
  std::uint64_t seed = 0;
  int random_extra = 200;

  void validate() const;
};

/// Compact cores K_i^0 with a reference point v^0 in K^0 and the truncation
/// radii to try, in increasing order.
struct TruncationSpec {
  std::vector<ConvexSet> K0;
  Vector v0;
  std::vector<double> radii;
};

struct Solution {
  Vector point;
  ResidualReport report;
};

struct TraceEntry {
  int iteration = 0;
  double worst = 0.0;
  double best_seen = 0.0;
  bool relaxation = false;  // false: merit line-search move
};

struct BestResponseResult {
  Vector point;
  ResidualReport report;
  std::vector<TraceEntry> trace;
  int moves = 0;
};

struct KkmAudit {
  int combos = 0;
  int violations = 0;
  double worst = 0.0;  // min over combos of max_i Phi(w, v_i)
  Vector worst_point;
  std::vector<double> worst_weights;
};

struct CoercivityCheck {
  bool passed = false;
  double worst_value = 0.0;  // max over exterior samples; must stay < 0
  Vector worst_point;
  int samples = 0;
  int violations = 0;
  double radius = 0.0;
  std::vector<Vector> witnesses;  // first few samples with value >= 0
};

struct TruncatedSolution {
  Vector point;
  ResidualReport report;
  double radius = 0.0;
  bool polished = false;
};

/// Exhaustive search over the product grid of the K_i plus seeded random
/// candidates. Each candidate is scored by the worst sampled violation
/// against the same sample family; the best score wins, with ties going to
/// the earliest candidate (lexicographically smallest grid index).
Solution brute_force_solve(const QhsSystem& sys, const SolveOptions& opts);

/// Relaxed best-response iteration. Each step computes every player's
/// sampled minimizer v_i* of the player term. While possible it takes the
/// move u_i <- P_K(u_i + lambda (v_i* - u_i)), over single players and
/// the joint move of all players with negative terms and lambda in
/// {step, step/2, ..., step/2^11}, that most improves the worst sampled
/// violation. Once no such move improves, it relaxes violators only, with a
/// per-player lambda that halves whenever the move direction reverses.
/// Returns the first accepted iterate, else the best one seen.
BestResponseResult best_response_solve(const QhsSystem& sys, const Vector& u0,
                                       const SolveOptions& opts);

/// max_i Phi(w, v_i).
double kkm_max_phi(const QhsSystem& sys, const Vector& w, const PointList& v_list);

/// Samples convex combinations w of v_list (Dirichlet(1) weights) and
/// counts those with max_i Phi(w, v_i) < -tol.
KkmAudit kkm_audit(const QhsSystem& sys, const PointList& v_list, int combos,
                   std::uint64_t seed, double tol);

struct KkmAuditSuite {
  std::vector<PointList> v_lists;
  std::vector<KkmAudit> audits;
  int combos = 0;
  int violations = 0;
  double worst = 0.0;
};

/// `lists` independent audits, each over `points` seeded random joint points
/// of K (block i of list l drawn from substream (seed, l, i)).
KkmAuditSuite kkm_audit_suite(const QhsSystem& sys, int lists, int points, int combos,
                              std::uint64_t seed, double tol);

/// Diameter of K^0 = K_1^0 x ... x K_n^0 from bounding boxes.
double core_diameter(const TruncationSpec& spec);
void validate_truncation(const QhsSystem& sys, const TruncationSpec& spec);

/// Samples v in (K ∩ B(v0, radius)) \ K0 and evaluates the coercivity
/// expression A(Tv, Tv0 - Tv) + F(v, v0 - v) + Sum_i J_i°(Sv; S_i v0_i - S_i v_i).
/// Passes when every sampled value is < 0.
CoercivityCheck coercivity_check(const QhsSystem& sys, const TruncationSpec& spec,
                                 int sample_count, double radius, std::uint64_t seed);

/// Solves on K ∩ Box(v0 +- R) for each usable radius R (those exceeding the
/// core diameter) with the inner solver selected by opts.method, accepting
/// the first result that lies in K0. A result outside the verdict is
/// polished by best_response_solve from the accepted point.
TruncatedSolution truncated_solve(const QhsSystem& sys, const TruncationSpec& spec,
                                  const SolveOptions& opts);

}  // namespace qhs
