#include "qhs/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "qhs/errors.hpp"
#include "qhs/random.hpp"

namespace qhs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kLineSearchHalvings = 12;
constexpr int kMaxWitnesses = 8;

// Worst sampled violation at u, abandoning the scan as soon as it is known
// to be <= `floor` (returns nullopt then). `hint` holds per-player sample
// indices to try first; it is updated with the last argmin.
std::optional<double> pruned_score(const QhsSystem& sys, const Vector& u,
                                   const SampleFamily& family, double floor,
                                   std::vector<std::size_t>& hint) {
  const PointEvaluation at(sys, u);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < sys.players(); ++i) {
    const PointList& list = family[static_cast<std::size_t>(i)];
    std::size_t& first = hint[static_cast<std::size_t>(i)];
    for (std::size_t step = 0; step < list.size(); ++step) {
      const std::size_t k = (first + step) % list.size();
      const double value = at.player_term(i, list[k]);
      if (value < worst) {
        worst = value;
        if (worst <= floor) {
          first = k;
          return std::nullopt;
        }
      }
    }
  }
  return worst;
}

std::vector<PointList> player_grids(const QhsSystem& sys, int resolution) {
  std::vector<PointList> grids;
  for (int i = 0; i < sys.players(); ++i) grids.push_back(sample_grid(sys.player(i).K, resolution));
  return grids;
}

bool in_core(const QhsSystem& sys, const TruncationSpec& spec, const Vector& u, double tol) {
  for (int i = 0; i < sys.players(); ++i) {
    if (!spec.K0[static_cast<std::size_t>(i)].contains(sys.block(u, i), tol)) return false;
  }
  return true;
}

}  // namespace

SolveMethod parse_method(const std::string& name) {
  if (name == "grid") return SolveMethod::Grid;
  if (name == "best_response") return SolveMethod::BestResponse;
  throw std::invalid_argument("unknown method '" + name + "' (expected grid or best_response)");
}

std::string to_string(SolveMethod method) {
  return method == SolveMethod::Grid ? "grid" : "best_response";
}

void SolveOptions::validate() const {
  if (resolution < 2) throw std::invalid_argument("solver.resolution must be >= 2");
  if (max_iters < 0) throw std::invalid_argument("solver.max_iters must be >= 0");
  if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument("solver.step must lie in (0, 1]");
  if (!(tol > 0.0)) throw std::invalid_argument("solver.tol must be > 0");
  if (random_extra < 0) throw std::invalid_argument("solver.random_extra must be >= 0");
}

Solution brute_force_solve(const QhsSystem& sys, const SolveOptions& opts) {
  opts.validate();
  if (!sys.bounded()) {
    throw UnsupportedOperation(
        "brute_force_solve needs bounded sets; use truncated_solve with a truncation spec");
  }
  const SampleFamily family = make_sample_family(sys, opts.resolution, opts.random_extra, opts.seed);
  const std::vector<PointList> grids = player_grids(sys, opts.resolution);

  double best_score = kNegInf;
  Vector best;
  std::vector<std::size_t> hint(static_cast<std::size_t>(sys.players()), 0);
  auto consider = [&](const Vector& candidate) {
    // Ties keep the earlier candidate, so prune at equality too.
    const auto score = pruned_score(sys, candidate, family, best_score, hint);
    if (score && (best.size() == 0 || *score > best_score)) {
      best_score = *score;
      best = candidate;
    }
  };

  std::vector<std::size_t> index(grids.size(), 0);
  Vector candidate(sys.dim());
  while (true) {
    for (int i = 0; i < sys.players(); ++i) {
      candidate.segment(sys.block_offset(i), sys.block_dim(i)) =
          grids[static_cast<std::size_t>(i)][index[static_cast<std::size_t>(i)]];
    }
    consider(candidate);
    int axis = sys.players() - 1;
    while (axis >= 0 && ++index[static_cast<std::size_t>(axis)] ==
                            grids[static_cast<std::size_t>(axis)].size()) {
      index[static_cast<std::size_t>(axis)] = 0;
      --axis;
    }
    if (axis < 0) break;
  }
  // Random joint candidates: block i of candidate k is the k-th random
  // point of K_i.
  std::vector<PointList> random_blocks;
  for (int i = 0; i < sys.players(); ++i) {
    random_blocks.push_back(sample_random(
        sys.player(i).K, opts.random_extra,
        substream_key(opts.seed, {0xca4d1d, static_cast<std::uint64_t>(i)})));
  }
  for (int k = 0; k < opts.random_extra; ++k) {
    for (int i = 0; i < sys.players(); ++i) {
      candidate.segment(sys.block_offset(i), sys.block_dim(i)) =
          random_blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    consider(candidate);
  }

  Solution out;
  out.point = best;
  out.report = verify_qhs(sys, best, family, opts.tol, opts.seed);
  return out;
}

BestResponseResult best_response_solve(const QhsSystem& sys, const Vector& u0,
                                       const SolveOptions& opts) {
  opts.validate();
  if (!sys.bounded()) {
    throw UnsupportedOperation(
        "best_response_solve needs bounded sets; use truncated_solve with a truncation spec");
  }
  const SampleFamily family = make_sample_family(sys, opts.resolution, opts.random_extra, opts.seed);
  const int n = sys.players();

  BestResponseResult result;
  Vector u = sys.admit(u0);
  Vector best_point = u;
  double best_seen = kNegInf;
  ResidualReport best_report;

  std::vector<double> lambda(static_cast<std::size_t>(n), opts.step);
  std::vector<Vector> last_move;
  for (int i = 0; i < n; ++i) last_move.push_back(Vector::Zero(sys.block_dim(i)));
  bool relaxing = false;
  std::vector<std::size_t> hint(static_cast<std::size_t>(n), 0);

  for (int iter = 0;; ++iter) {
    ResidualReport report = verify_qhs(sys, u, family, opts.tol, opts.seed);
    if (report.overall_worst > best_seen) {
      best_seen = report.overall_worst;
      best_point = u;
      best_report = report;
    }
    result.trace.push_back({iter, report.overall_worst, best_seen, relaxing});
    if (report.verdict) {
      result.point = u;
      result.report = std::move(report);
      return result;
    }
    if (iter >= opts.max_iters) break;

    std::vector<Vector> toward;
    for (int i = 0; i < n; ++i) {
      toward.push_back(report.per_player[static_cast<std::size_t>(i)].argmin_direction -
                       sys.block(u, i));
    }
    auto moved = [&](const std::vector<int>& group, double lam) {
      Vector c = u;
      for (int i : group) {
        const Vector target = sys.block(u, i) + lam * toward[static_cast<std::size_t>(i)];
        c.segment(sys.block_offset(i), sys.block_dim(i)) = sys.player(i).K.project(target);
      }
      return c;
    };

    if (!relaxing) {
      std::vector<int> movers;
      for (int i = 0; i < n; ++i) {
        if (report.per_player[static_cast<std::size_t>(i)].worst_violation < 0.0) movers.push_back(i);
      }
      std::vector<std::vector<int>> groups;
      for (int i : movers) groups.push_back({i});
      if (movers.size() > 1) groups.push_back(movers);

      double floor = report.overall_worst;
      std::optional<Vector> chosen;
      std::vector<int> chosen_group;
      for (const auto& group : groups) {
        for (int k = 0; k < kLineSearchHalvings; ++k) {
          const Vector c = moved(group, opts.step * std::ldexp(1.0, -k));
          const auto score = pruned_score(sys, c, family, floor, hint);
          if (score) {
            floor = *score;
            chosen = c;
            chosen_group = group;
          }
        }
      }
      if (chosen) {
        for (int i : chosen_group) {
          last_move[static_cast<std::size_t>(i)] = sys.block(*chosen, i) - sys.block(u, i);
        }
        u = *chosen;
        ++result.moves;
        continue;
      }
      relaxing = true;
    }

    for (int i = 0; i < n; ++i) {
      if (report.per_player[static_cast<std::size_t>(i)].worst_violation >= -opts.tol) continue;
      const Vector& d = toward[static_cast<std::size_t>(i)];
      Vector& last = last_move[static_cast<std::size_t>(i)];
      double& lam = lambda[static_cast<std::size_t>(i)];
      if (d.dot(last) < 0.0) lam *= 0.5;
      const Vector current = sys.block(u, i);
      const Vector next = sys.player(i).K.project(current + lam * d);
      last = next - current;
      u.segment(sys.block_offset(i), sys.block_dim(i)) = next;
    }
    ++result.moves;
  }

  result.point = best_point;
  result.report = std::move(best_report);
  return result;
}

double kkm_max_phi(const QhsSystem& sys, const Vector& w, const PointList& v_list) {
  if (v_list.empty()) throw std::invalid_argument("v_list must be nonempty");
  const PointEvaluation at(sys, w);
  double best = kNegInf;
  for (const Vector& v : v_list) best = std::max(best, at.aggregate_term(v));
  return best;
}

KkmAudit kkm_audit(const QhsSystem& sys, const PointList& v_list, int combos,
                   std::uint64_t seed, double tol) {
  if (v_list.empty()) throw std::invalid_argument("v_list must be nonempty");
  if (combos < 0) throw std::invalid_argument("combos must be nonnegative");
  for (const Vector& v : v_list) sys.admit(v);

  KkmAudit audit;
  audit.combos = combos;
  audit.worst = std::numeric_limits<double>::infinity();
  for (int c = 0; c < combos; ++c) {
    Stream rng(seed, {0xcc3, static_cast<std::uint64_t>(c)});
    std::vector<double> weights(v_list.size());
    double total = 0.0;
    for (double& wgt : weights) {
      wgt = -std::log(1.0 - rng.uniform());
      total += wgt;
    }
    Vector w = Vector::Zero(sys.dim());
    for (std::size_t k = 0; k < v_list.size(); ++k) {
      weights[k] /= total;
      w += weights[k] * v_list[k];
    }
    const double value = kkm_max_phi(sys, w, v_list);
    if (value < -tol) ++audit.violations;
    if (value < audit.worst) {
      audit.worst = value;
      audit.worst_point = w;
      audit.worst_weights = weights;
    }
  }
  if (combos == 0) audit.worst = 0.0;
  return audit;
}

KkmAuditSuite kkm_audit_suite(const QhsSystem& sys, int lists, int points, int combos,
                              std::uint64_t seed, double tol) {
  if (lists < 1 || points < 1) throw std::invalid_argument("audit needs lists >= 1 and points >= 1");
  KkmAuditSuite out;
  out.worst = -kNegInf;
  for (int l = 0; l < lists; ++l) {
    const auto tag = static_cast<std::uint64_t>(l);
    PointList v_list(static_cast<std::size_t>(points), Vector(sys.dim()));
    for (int i = 0; i < sys.players(); ++i) {
      const PointList block = sample_random(sys.player(i).K, points,
                                            substream_key(seed, {0xa0d, tag, static_cast<std::uint64_t>(i)}));
      for (int k = 0; k < points; ++k) {
        v_list[static_cast<std::size_t>(k)].segment(sys.block_offset(i), sys.block_dim(i)) =
            block[static_cast<std::size_t>(k)];
      }
    }
    KkmAudit a = kkm_audit(sys, v_list, combos, substream_key(seed, {0xa0e, tag}), tol);
    out.combos += a.combos;
    out.violations += a.violations;
    out.worst = std::min(out.worst, a.worst);
    out.v_lists.push_back(std::move(v_list));
    out.audits.push_back(std::move(a));
  }
  return out;
}

double core_diameter(const TruncationSpec& spec) {
  double total = 0.0;
  for (const ConvexSet& core : spec.K0) {
    const auto& [lo, hi] = core.bounding_box();
    total += (hi - lo).squaredNorm();
  }
  return std::sqrt(total);
}

void validate_truncation(const QhsSystem& sys, const TruncationSpec& spec) {
  if (static_cast<int>(spec.K0.size()) != sys.players()) {
    throw std::invalid_argument("truncation.K0: one core per player required");
  }
  if (spec.v0.size() != sys.dim()) throw std::invalid_argument("truncation.v0: wrong dimension");
  for (int i = 0; i < sys.players(); ++i) {
    const ConvexSet& core = spec.K0[static_cast<std::size_t>(i)];
    if (core.dim() != sys.block_dim(i) || !core.bounded()) {
      throw std::invalid_argument("truncation.K0[" + std::to_string(i) +
                                  "]: must be bounded with the player's dimension");
    }
    if (!core.contains(sys.block(spec.v0, i), 1e-9)) {
      throw std::invalid_argument("truncation.v0 must lie in K0");
    }
    for (const Vector& p : sample_grid(core, 3)) {
      if (!sys.player(i).K.contains(p, 1e-9)) {
        throw std::invalid_argument("truncation.K0[" + std::to_string(i) + "] must lie inside K");
      }
    }
  }
  if (spec.radii.empty()) throw std::invalid_argument("truncation.radii must be nonempty");
  for (std::size_t k = 0; k < spec.radii.size(); ++k) {
    if (!(spec.radii[k] > 0.0) || (k > 0 && !(spec.radii[k] > spec.radii[k - 1]))) {
      throw std::invalid_argument("truncation.radii must be positive and strictly increasing");
    }
  }
}

CoercivityCheck coercivity_check(const QhsSystem& sys, const TruncationSpec& spec,
                                 int sample_count, double radius, std::uint64_t seed) {
  validate_truncation(sys, spec);
  if (sample_count <= 0) throw std::invalid_argument("sample_count must be positive");
  if (!(radius > core_diameter(spec))) {
    throw std::invalid_argument("coercivity radius must exceed the K0 diameter");
  }
  CoercivityCheck check;
  check.radius = radius;
  check.worst_value = kNegInf;
  const long max_attempts = 1000L * sample_count;
  for (long attempt = 0; attempt < max_attempts && check.samples < sample_count; ++attempt) {
    Stream rng(seed, {0xc0e2, static_cast<std::uint64_t>(attempt)});
    Vector v = spec.v0 + rng.in_ball(sys.dim(), radius);
    for (int i = 0; i < sys.players(); ++i) {
      v.segment(sys.block_offset(i), sys.block_dim(i)) = sys.player(i).K.project(sys.block(v, i));
    }
    if ((v - spec.v0).norm() > radius || in_core(sys, spec, v, 1e-12)) continue;
    const double value = PointEvaluation(sys, v).coercivity_term(spec.v0);
    ++check.samples;
    if (value >= 0.0) {
      ++check.violations;
      if (static_cast<int>(check.witnesses.size()) < kMaxWitnesses) check.witnesses.push_back(v);
    }
    if (value > check.worst_value) {
      check.worst_value = value;
      check.worst_point = v;
    }
  }
  if (check.samples == 0) {
    throw std::invalid_argument("no samples found outside K0 within the given radius");
  }
  check.passed = check.violations == 0;
  return check;
}

TruncatedSolution truncated_solve(const QhsSystem& sys, const TruncationSpec& spec,
                                  const SolveOptions& opts) {
  opts.validate();
  validate_truncation(sys, spec);
  const double diameter = core_diameter(spec);
  std::vector<double> radii;
  for (double r : spec.radii) {
    if (r > diameter) radii.push_back(r);
  }
  if (radii.empty()) {
    throw std::invalid_argument("every truncation radius is below the K0 diameter (" +
                                std::to_string(diameter) + ")");
  }
  const CoercivityCheck check = coercivity_check(sys, spec, 100, radii.front(), opts.seed);
  if (!check.passed) {
    throw SolverFailure("coercivity condition fails at radius " + std::to_string(radii.front()) +
                        " (worst value " + std::to_string(check.worst_value) + ")");
  }

  std::string diagnostics;
  for (double radius : radii) {
    std::vector<ConvexSet> sets;
    for (int i = 0; i < sys.players(); ++i) {
      sets.push_back(sys.player(i).K.truncated(sys.block(spec.v0, i), radius));
    }
    const QhsSystem truncated = sys.with_sets(std::move(sets));
    Solution sol;
    if (opts.method == SolveMethod::Grid) {
      sol = brute_force_solve(truncated, opts);
    } else {
      auto br = best_response_solve(truncated, spec.v0, opts);
      sol = {std::move(br.point), std::move(br.report)};
    }
    if (!in_core(sys, spec, sol.point, 1e-9)) {
      diagnostics += " R=" + std::to_string(radius) + ": solution outside K0;";
      continue;
    }
    TruncatedSolution out{sol.point, sol.report, radius, false};
    if (!sol.report.verdict) {
      auto polished = best_response_solve(truncated, sol.point, opts);
      if (polished.report.verdict && in_core(sys, spec, polished.point, 1e-9)) {
        out.point = std::move(polished.point);
        out.report = std::move(polished.report);
        out.polished = true;
      }
    }
    return out;
  }
  throw SolverFailure("no truncation radius produced a solution inside K0:" + diagnostics);
}

}  // namespace qhs
