#include "qhs/run.hpp"

#include <chrono>
#include <sstream>

#include "qhs/errors.hpp"

namespace qhs {

namespace {

using nlohmann::json;

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

json to_json(const ResidualReport& r) {
  json players = json::array();
  for (const PlayerResidual& p : r.per_player) {
    players.push_back({{"player", p.player},
                       {"worst_violation", p.worst_violation},
                       {"argmin_direction", to_json(p.argmin_direction)},
                       {"argmin_index", p.argmin_index}});
  }
  return {{"per_player", players},
          {"overall_worst", r.overall_worst},
          {"tol", r.tol},
          {"verdict", r.verdict},
          {"samples_used", r.samples_used},
          {"seed", r.seed}};
}

json to_json(const SolveOptions& o) {
  return {{"method", to_string(o.method)}, {"resolution", o.resolution},
          {"max_iters", o.max_iters},      {"step", o.step},
          {"tol", o.tol},                  {"seed", o.seed},
          {"random_extra", o.random_extra}};
}

struct Failure {
  int code;
  std::string message;
};

const char* kUnboundedHint =
    "the feasible set is unbounded; add a truncation block (K0, v0, radii) to the config";

SolveOptions effective_options(const ProblemConfig& cfg, const RunOverrides& ov) {
  SolveOptions o = cfg.solver;
  if (ov.method) o.method = parse_method(*ov.method);
  if (ov.resolution) o.resolution = *ov.resolution;
  if (ov.tol) o.tol = *ov.tol;
  if (ov.seed) o.seed = *ov.seed;
  if (ov.max_iters) o.max_iters = *ov.max_iters;
  if (ov.step) o.step = *ov.step;
  o.validate();
  return o;
}

double usable_radius(const TruncationSpec& spec) {
  const double diameter = core_diameter(spec);
  for (double r : spec.radii) {
    if (r > diameter) return r;
  }
  throw std::invalid_argument("every truncation radius is below the K0 diameter");
}

// The system restricted to a box around v0 when K is unbounded.
QhsSystem bounded_view(const ProblemConfig& cfg) {
  const QhsSystem& sys = cfg.system;
  if (sys.bounded()) return sys;
  if (!cfg.truncation) throw Failure{kExitSolver, kUnboundedHint};
  const double r = usable_radius(*cfg.truncation);
  std::vector<ConvexSet> sets;
  for (int i = 0; i < sys.players(); ++i) {
    sets.push_back(sys.player(i).K.truncated(sys.block(cfg.truncation->v0, i), r));
  }
  return sys.with_sets(std::move(sets));
}

Vector default_start(const QhsSystem& sys) {
  Vector u(sys.dim());
  for (int i = 0; i < sys.players(); ++i) {
    u.segment(sys.block_offset(i), sys.block_dim(i)) =
        sys.player(i).K.project(Vector::Zero(sys.block_dim(i)));
  }
  return u;
}

void run_validate(const ProblemConfig& cfg, json& body) {
  const QhsSystem& sys = cfg.system;
  json dims = json::array();
  for (int i = 0; i < sys.players(); ++i) dims.push_back(sys.block_dim(i));
  body["summary"] = {{"players", sys.players()},
                     {"dims", dims},
                     {"bounded", sys.bounded()},
                     {"has_J", sys.J().has_value()},
                     {"has_truncation", cfg.truncation.has_value()}};
  body["verdict"] = true;
}

void run_verify(const ProblemConfig& cfg, const SolveOptions& o, const RunOverrides& ov,
                json& body) {
  if (!ov.at) throw Failure{kExitConfig, "verify needs a point (--at)"};
  const QhsSystem sys = bounded_view(cfg);
  const Vector u = sys.admit(parse_point(*ov.at));
  const SampleFamily family = make_sample_family(sys, o.resolution, o.random_extra, o.seed);
  const ResidualReport r = verify_qhs(sys, u, family, o.tol, o.seed);
  body["point"] = to_json(u);
  body["residual"] = to_json(r);
  body["verdict"] = r.verdict;
}

void put_solution(json& body, const Vector& point, const ResidualReport& r) {
  body["point"] = to_json(point);
  body["residual"] = to_json(r);
  body["verdict"] = r.verdict;
}

void run_solve(const ProblemConfig& cfg, SolveOptions o, const RunOverrides& ov, json& body,
               bool oracle) {
  const QhsSystem& sys = cfg.system;
  if (oracle && !ov.method) o.method = SolveMethod::Grid;
  if (!oracle && !ov.method) o.method = SolveMethod::BestResponse;
  body["options"] = to_json(o);
  if (!sys.bounded()) {
    if (!cfg.truncation) throw Failure{kExitSolver, kUnboundedHint};
    const TruncatedSolution s = truncated_solve(sys, *cfg.truncation, o);
    put_solution(body, s.point, s.report);
    body["solve"] = {{"radius", s.radius}, {"polished", s.polished}};
    return;
  }
  if (o.method == SolveMethod::Grid) {
    const Solution s = brute_force_solve(sys, o);
    put_solution(body, s.point, s.report);
    return;
  }
  const Vector start = ov.at ? sys.admit(parse_point(*ov.at)) : default_start(sys);
  const BestResponseResult s = best_response_solve(sys, start, o);
  put_solution(body, s.point, s.report);
  body["solve"] = {{"start", to_json(start)},
                   {"iterations", static_cast<int>(s.trace.size())},
                   {"moves", s.moves}};
}

void run_audit(const ProblemConfig& cfg, const RunOverrides& ov, json& body) {
  const QhsSystem sys = bounded_view(cfg);
  AuditConfig a = cfg.audit;
  if (ov.seed) a.seed = *ov.seed;
  if (ov.tol) a.tol = *ov.tol;
  const KkmAuditSuite suite = kkm_audit_suite(sys, a.lists, a.points, a.combos, a.seed, a.tol);
  json lists = json::array();
  for (std::size_t l = 0; l < suite.audits.size(); ++l) {
    const KkmAudit& r = suite.audits[l];
    json vs = json::array();
    for (const Vector& v : suite.v_lists[l]) vs.push_back(to_json(v));
    lists.push_back({{"v_list", vs},
                     {"combos", r.combos},
                     {"violations", r.violations},
                     {"worst", r.worst},
                     {"worst_point", to_json(r.worst_point)},
                     {"worst_weights", r.worst_weights}});
  }
  body["audit"] = {{"lists", lists},
                   {"combos", suite.combos},
                   {"violations", suite.violations},
                   {"worst", suite.worst},
                   {"tol", a.tol},
                   {"seed", a.seed}};
  body["seed"] = a.seed;
  body["verdict"] = suite.violations == 0;
}

void run_coercivity(const ProblemConfig& cfg, const RunOverrides& ov, json& body) {
  if (!cfg.truncation) {
    throw Failure{kExitConfig, "coercivity needs a truncation block (K0, v0, radii)"};
  }
  CoercivityConfig c = cfg.coercivity;
  if (ov.seed) c.seed = *ov.seed;
  const double radius = c.radius ? *c.radius : usable_radius(*cfg.truncation);
  const CoercivityCheck r = coercivity_check(cfg.system, *cfg.truncation, c.samples, radius, c.seed);
  json witnesses = json::array();
  for (const Vector& w : r.witnesses) witnesses.push_back(to_json(w));
  body["coercivity"] = {{"passed", r.passed},
                        {"worst_value", r.worst_value},
                        {"worst_point", to_json(r.worst_point)},
                        {"samples", r.samples},
                        {"violations", r.violations},
                        {"radius", r.radius},
                        {"witnesses", witnesses}};
  body["seed"] = c.seed;
  body["verdict"] = r.passed;
}

json base_body(const std::string& command) {
  return {{"report_version", kReportVersion},
          {"tool", {{"name", "qhs"}, {"version", kToolVersion}}},
          {"command", command},
          {"verdict", false}};
}

RunResult finish(json body, int code, std::string diagnostic,
                 std::chrono::steady_clock::time_point start) {
  body["exit_code"] = code;
  if (!diagnostic.empty()) body["message"] = diagnostic;
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return {code, json{{"body", std::move(body)}, {"timing", {{"wall_ms", ms}}}}, std::move(diagnostic)};
}

}  // namespace

std::vector<std::string> command_names() {
  return {"validate", "verify", "solve", "oracle", "audit", "coercivity"};
}

Vector parse_point(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (c == '(' || c == ')' || c == '[' || c == ']') continue;
    s.push_back(c == ',' ? ' ' : c);
  }
  std::istringstream in(s);
  std::vector<double> values;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !std::isfinite(x)) {
      throw std::invalid_argument("point '" + text + "': bad coordinate '" + tok + "'");
    }
    values.push_back(x);
  }
  if (values.empty()) throw std::invalid_argument("point '" + text + "' has no coordinates");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

RunResult run_command(const std::string& command, const ProblemConfig& cfg,
                      const RunOverrides& ov) {
  const auto start = std::chrono::steady_clock::now();
  json body = base_body(command);
  body["problem"] = cfg.name;
  body["config_hash"] = cfg.hash;
  try {
    const SolveOptions o = effective_options(cfg, ov);
    body["seed"] = o.seed;
    body["options"] = to_json(o);
    if (command == "validate") {
      run_validate(cfg, body);
    } else if (command == "verify") {
      run_verify(cfg, o, ov, body);
    } else if (command == "solve" || command == "oracle") {
      run_solve(cfg, o, ov, body, command == "oracle");
    } else if (command == "audit") {
      run_audit(cfg, ov, body);
    } else if (command == "coercivity") {
      run_coercivity(cfg, ov, body);
    } else {
      throw Failure{kExitConfig, "unknown command '" + command + "'"};
    }
  } catch (const Failure& f) {
    body["verdict"] = false;
    return finish(std::move(body), f.code, f.message, start);
  } catch (const SolverFailure& e) {
    body["verdict"] = false;
    return finish(std::move(body), kExitSolver, e.what(), start);
  } catch (const UnsupportedOperation& e) {
    body["verdict"] = false;
    return finish(std::move(body), kExitSolver, e.what(), start);
  } catch (const NumericDomainError& e) {
    body["verdict"] = false;
    return finish(std::move(body), kExitSolver, e.what(), start);
  } catch (const std::invalid_argument& e) {
    body["verdict"] = false;
    return finish(std::move(body), kExitConfig, e.what(), start);
  }
  const int code = body["verdict"].get<bool>() ? kExitOk : kExitFalse;
  return finish(std::move(body), code, "", start);
}

RunResult run_file(const std::string& command, const std::string& config_path,
                   const RunOverrides& ov) {
  try {
    const ProblemConfig cfg = load_config(config_path);
    return run_command(command, cfg, ov);
  } catch (const ConfigError& e) {
    json body = base_body(command);
    body["error"] = {{"path", e.path()}, {"reason", e.what()}};
    return finish(std::move(body), kExitConfig, e.what(), std::chrono::steady_clock::now());
  }
}

std::string render_report(const nlohmann::json& report) { return report.dump(2) + "\n"; }

}  // namespace qhs
