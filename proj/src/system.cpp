#include "qhs/system.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "qhs/random.hpp"

namespace qhs {

namespace {

std::string player_field(int i, const char* field) {
  return "players[" + std::to_string(i) + "]." + field;
}

}  // namespace

VectorField::VectorField(int out_dim, Evaluator evaluator)
    : out_dim_(out_dim), evaluator_(std::move(evaluator)) {
  if (out_dim_ <= 0) throw std::invalid_argument("VectorField output dim must be positive");
  if (!evaluator_) throw std::invalid_argument("VectorField needs an evaluator");
}

Vector VectorField::operator()(const Vector& u) const {
  Vector out = evaluator_(u);
  if (out.size() != out_dim_) throw std::invalid_argument("VectorField returned wrong dimension");
  return out;
}

QhsSystem::QhsSystem(std::vector<Player> players, std::optional<ScalarFn> J, ClarkeParams params)
    : players_(std::move(players)), J_(std::move(J)), params_(params) {
  params_.validate();
  const int n = static_cast<int>(players_.size());
  if (n == 0) throw std::invalid_argument("system needs at least one player");
  int t_off = 0;
  int s_off = 0;
  for (int i = 0; i < n; ++i) {
    const Player& p = players_[static_cast<std::size_t>(i)];
    const int d = p.K.dim();
    offsets_.push_back(dim_);
    T_offsets_.push_back(t_off);
    S_offsets_.push_back(s_off);
    dim_ += d;
    t_off += static_cast<int>(p.T.rows());
    s_off += static_cast<int>(p.S.rows());
    if (p.T.cols() != d || p.T.rows() == 0) {
      throw std::invalid_argument(player_field(i, "T") + ": expected e x " + std::to_string(d) +
                                  " matrix");
    }
    if (p.S.cols() != d) {
      throw std::invalid_argument(player_field(i, "S") + ": expected g x " + std::to_string(d) +
                                  " matrix");
    }
    if (!p.T.allFinite() || !p.S.allFinite()) {
      throw std::invalid_argument(player_field(i, "T/S") + ": entries must be finite");
    }
    if (p.F && p.F->out_dim() != d) {
      throw std::invalid_argument(player_field(i, "F") + ": output dim must equal dim X_i");
    }
  }
  for (int i = 0; i < n; ++i) {
    const ScalarFn& A = players_[static_cast<std::size_t>(i)].A;
    if (A.blocks() != n) {
      throw std::invalid_argument(player_field(i, "A") + ": must read all " + std::to_string(n) +
                                  " Y blocks");
    }
    for (int j = 0; j < n; ++j) {
      if (A.block_dim(j) != players_[static_cast<std::size_t>(j)].T.rows()) {
        throw std::invalid_argument(player_field(i, "A") + ": block " + std::to_string(j) +
                                    " does not match rows of T_" + std::to_string(j));
      }
    }
  }
  if (J_) {
    if (!J_->claims_regular()) throw std::invalid_argument("J: must be a regular function");
    if (J_->blocks() != n) throw std::invalid_argument("J: must read all Z blocks");
    for (int j = 0; j < n; ++j) {
      if (J_->block_dim(j) != players_[static_cast<std::size_t>(j)].S.rows()) {
        throw std::invalid_argument("J: block " + std::to_string(j) +
                                    " does not match rows of S_" + std::to_string(j));
      }
    }
  }
}

Vector QhsSystem::block(const Vector& u, int i) const {
  return u.segment(block_offset(i), block_dim(i));
}

Vector QhsSystem::with_block(const Vector& u, int i, const Vector& v_i) const {
  Vector out = u;
  out.segment(block_offset(i), block_dim(i)) = v_i;
  return out;
}

bool QhsSystem::bounded() const noexcept {
  return std::all_of(players_.begin(), players_.end(),
                     [](const Player& p) { return p.K.bounded(); });
}

Vector QhsSystem::apply_T(const Vector& u) const {
  Vector out(T_offsets_.back() + players_.back().T.rows());
  for (int i = 0; i < players(); ++i) {
    const Matrix& T = player(i).T;
    out.segment(T_offsets_[static_cast<std::size_t>(i)], T.rows()) = T * block(u, i);
  }
  return out;
}

Vector QhsSystem::apply_S(const Vector& u) const {
  Vector out(S_offsets_.back() + players_.back().S.rows());
  for (int i = 0; i < players(); ++i) {
    const Matrix& S = player(i).S;
    out.segment(S_offsets_[static_cast<std::size_t>(i)], S.rows()) = S * block(u, i);
  }
  return out;
}

Vector QhsSystem::admit_block(int i, const Vector& v_i) const {
  const ConvexSet& K = player(i).K;
  if (v_i.size() != K.dim()) {
    throw std::invalid_argument("block " + std::to_string(i) + " has dimension " +
                                std::to_string(v_i.size()) + ", expected " +
                                std::to_string(K.dim()));
  }
  const double excess = K.violation(v_i);
  if (excess <= kFeasibleTol) return v_i;
  if (excess <= kProjectTol) return K.project(v_i);
  throw std::invalid_argument("block " + std::to_string(i) + " is infeasible (violation " +
                              std::to_string(excess) + ")");
}

Vector QhsSystem::admit(const Vector& u) const {
  if (u.size() != dim_) {
    throw std::invalid_argument("joint point has dimension " + std::to_string(u.size()) +
                                ", expected " + std::to_string(dim_));
  }
  Vector out = u;
  for (int i = 0; i < players(); ++i) {
    out.segment(block_offset(i), block_dim(i)) = admit_block(i, block(u, i));
  }
  return out;
}

QhsSystem QhsSystem::with_sets(std::vector<ConvexSet> sets) const {
  if (static_cast<int>(sets.size()) != players()) {
    throw std::invalid_argument("with_sets: one set per player required");
  }
  std::vector<Player> copy = players_;
  for (std::size_t i = 0; i < copy.size(); ++i) {
    if (sets[i].dim() != copy[i].K.dim()) {
      throw std::invalid_argument("with_sets: dimension mismatch");
    }
    copy[i].K = std::move(sets[i]);
  }
  return QhsSystem(std::move(copy), J_, params_);
}

QhsSystem QhsSystem::with_params(const ClarkeParams& params) const {
  return QhsSystem(players_, J_, params);
}

PointEvaluation::PointEvaluation(const QhsSystem& sys, const Vector& u)
    : sys_(sys), u_(sys.admit(u)), Tu_(sys.apply_T(u_)), Su_(sys.apply_S(u_)) {
  F_.reserve(static_cast<std::size_t>(sys.players()));
  for (int i = 0; i < sys.players(); ++i) {
    const auto& F = sys.player(i).F;
    F_.push_back(F ? (*F)(u_) : Vector::Zero(sys.block_dim(i)));
  }
}

double PointEvaluation::a_part(int i, const Vector& d_i) const {
  const Player& p = sys_.player(i);
  return partial_clarke_dd(p.A, i, Tu_, p.T * d_i, sys_.params());
}

double PointEvaluation::f_part(int i, const Vector& d_i) const {
  return F_[static_cast<std::size_t>(i)].dot(d_i);
}

double PointEvaluation::j_partial(int i, const Vector& d_i) const {
  if (!sys_.J()) return 0.0;
  return partial_clarke_dd(*sys_.J(), i, Su_, sys_.player(i).S * d_i, sys_.params());
}

double PointEvaluation::player_term(int i, const Vector& v_i) const {
  const Vector d = sys_.admit_block(i, v_i) - sys_.block(u_, i);
  return a_part(i, d) + f_part(i, d) + j_partial(i, d);
}

double PointEvaluation::aggregate_term(const Vector& v) const {
  const Vector w = sys_.admit(v);
  const Vector d = w - u_;
  double total = 0.0;
  for (int i = 0; i < sys_.players(); ++i) {
    const Vector d_i = sys_.block(d, i);
    total += a_part(i, d_i) + f_part(i, d_i);
  }
  if (sys_.J()) total += clarke_dd(*sys_.J(), Su_, sys_.apply_S(w) - Su_, sys_.params());
  return total;
}

double PointEvaluation::coercivity_term(const Vector& v) const {
  const Vector w = sys_.admit(v);
  const Vector d = w - u_;
  double total = 0.0;
  for (int i = 0; i < sys_.players(); ++i) {
    const Vector d_i = sys_.block(d, i);
    total += a_part(i, d_i) + f_part(i, d_i) + j_partial(i, d_i);
  }
  return total;
}

double player_term(const QhsSystem& sys, int i, const Vector& u, const Vector& v_i) {
  if (i < 0 || i >= sys.players()) throw std::invalid_argument("player index out of range");
  return PointEvaluation(sys, u).player_term(i, v_i);
}

double aggregate_term(const QhsSystem& sys, const Vector& u, const Vector& v) {
  return PointEvaluation(sys, u).aggregate_term(v);
}

SampleFamily make_sample_family(const QhsSystem& sys, int resolution, int random_extra,
                                std::uint64_t seed) {
  SampleFamily family;
  for (int i = 0; i < sys.players(); ++i) {
    const ConvexSet& K = sys.player(i).K;
    PointList samples = sample_grid(K, resolution);
    PointList extra =
        sample_random(K, random_extra, substream_key(seed, {0x5a3b1e, static_cast<std::uint64_t>(i)}));
    samples.insert(samples.end(), extra.begin(), extra.end());
    family.push_back(std::move(samples));
  }
  return family;
}

namespace {

void check_family(const QhsSystem& sys, const SampleFamily& samples) {
  if (static_cast<int>(samples.size()) != sys.players()) {
    throw std::invalid_argument("need one sample list per player");
  }
  for (const auto& list : samples) {
    if (list.empty()) throw std::invalid_argument("empty sample list");
  }
}

}  // namespace

ResidualReport verify_qhs(const QhsSystem& sys, const Vector& u, const SampleFamily& samples,
                          double tol, std::uint64_t seed) {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  check_family(sys, samples);
  const PointEvaluation at(sys, u);
  ResidualReport report;
  report.tol = tol;
  report.seed = seed;
  report.overall_worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < sys.players(); ++i) {
    const PointList& list = samples[static_cast<std::size_t>(i)];
    PlayerResidual r;
    r.player = i;
    r.worst_violation = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < list.size(); ++k) {
      const double value = at.player_term(i, list[k]);
      if (value < r.worst_violation) {
        r.worst_violation = value;
        r.argmin_index = static_cast<int>(k);
      }
    }
    r.argmin_direction = list[static_cast<std::size_t>(r.argmin_index)];
    report.samples_used += static_cast<int>(list.size());
    report.overall_worst = std::min(report.overall_worst, r.worst_violation);
    report.per_player.push_back(std::move(r));
  }
  report.verdict = report.overall_worst >= -tol;
  return report;
}

double aggregate_worst(const QhsSystem& sys, const Vector& u, const SampleFamily& samples) {
  check_family(sys, samples);
  const PointEvaluation at(sys, u);
  const Vector& base = at.point();
  double worst = std::numeric_limits<double>::infinity();
  std::size_t longest = 0;
  for (int i = 0; i < sys.players(); ++i) {
    const PointList& list = samples[static_cast<std::size_t>(i)];
    longest = std::max(longest, list.size());
    for (const Vector& v_i : list) {
      worst = std::min(worst, at.aggregate_term(sys.with_block(base, i, v_i)));
    }
  }
  if (sys.players() > 1) {
    Vector v = base;
    for (std::size_t k = 0; k < longest; ++k) {
      for (int i = 0; i < sys.players(); ++i) {
        const PointList& list = samples[static_cast<std::size_t>(i)];
        v.segment(sys.block_offset(i), sys.block_dim(i)) = list[k % list.size()];
      }
      worst = std::min(worst, at.aggregate_term(v));
    }
  }
  return worst;
}

bool implication_check(const QhsSystem& sys, const Vector& u, const SampleFamily& samples,
                       double tol, double slack) {
  if (aggregate_worst(sys, u, samples) < -tol) return true;
  return verify_qhs(sys, u, samples, 2.0 * tol + slack).verdict;
}

}  // namespace qhs
