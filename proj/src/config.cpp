#include "qhs/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "qhs/errors.hpp"
#include "qhs/expr.hpp"
#include "qhs/instances.hpp"

namespace qhs {

namespace {

using nlohmann::json;

std::string at(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string at(const std::string& path, std::size_t index) {
  return path + "[" + std::to_string(index) + "]";
}

void only_keys(const json& obj, const std::string& path, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(at(path, key), "unknown field");
  }
}

const json& need(const json& obj, const std::string& path, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(at(path, key), "missing required field");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ConfigError(path, "expected a number");
}

double finite(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

long long integer(const json& v, const std::string& path, long long lo) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  const long long x = v.get<long long>();
  if (x < lo) throw ConfigError(path, "must be >= " + std::to_string(lo));
  return x;
}

std::uint64_t seed_value(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ConfigError(path, "expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

bool boolean(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
  return v.get<bool>();
}

Vector vec(const json& v, const std::string& path, bool allow_inf = false) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = allow_inf ? number(v[k], at(path, k)) : finite(v[k], at(path, k));
  }
  return out;
}

Vector vec_or_fill(const json& v, const std::string& path, int dim) {
  if (v.is_array()) {
    Vector out = vec(v, path, true);
    if (out.size() != dim) {
      throw ConfigError(path, "expected " + std::to_string(dim) + " entries, got " +
                                  std::to_string(out.size()));
    }
    return out;
  }
  return Vector::Constant(dim, number(v, path));
}

Matrix matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  if (cols == 0) throw ConfigError(at(path, 0), "expected a nonempty row");
  Matrix M(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    if (!v[r].is_array() || v[r].size() != cols) {
      throw ConfigError(at(path, r), "matrix is not rectangular");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          finite(v[r][c], at(at(path, r), c));
    }
  }
  return M;
}

Expr expression(const json& v, const std::string& path, int arity) {
  const std::string src = text(v, path);
  try {
    return Expr::parse(src, arity);
  } catch (const ParseError& e) {
    throw ConfigError(path, e.what());
  }
}

template <class Fn>
auto wrap(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  } catch (const UnsupportedOperation& e) {
    throw ConfigError(path, e.what());
  }
}

ConvexSet set_spec(const json& v, const std::string& path, int dim) {
  const std::string type = text(need(v, path, "type"), at(path, "type"));
  if (type == "box") {
    only_keys(v, path, {"type", "lo", "hi"});
    const Vector lo = vec_or_fill(need(v, path, "lo"), at(path, "lo"), dim);
    const Vector hi = vec_or_fill(need(v, path, "hi"), at(path, "hi"), dim);
    return wrap(path, [&] { return ConvexSet::box(lo, hi); });
  }
  if (type == "ball") {
    only_keys(v, path, {"type", "center", "radius"});
    const Vector c = vec(need(v, path, "center"), at(path, "center"));
    if (c.size() != dim) throw ConfigError(at(path, "center"), "dimension mismatch");
    const double r = finite(need(v, path, "radius"), at(path, "radius"));
    return wrap(path, [&] { return ConvexSet::ball(c, r); });
  }
  if (type == "simplex") {
    only_keys(v, path, {"type", "scale"});
    const double s = v.contains("scale") ? finite(v["scale"], at(path, "scale")) : 1.0;
    return wrap(path, [&] { return ConvexSet::simplex(dim, s); });
  }
  if (type == "halfspaces") {
    only_keys(v, path, {"type", "M", "b", "witness"});
    const Matrix M = matrix(need(v, path, "M"), at(path, "M"));
    const Vector b = vec(need(v, path, "b"), at(path, "b"));
    const Vector w = vec(need(v, path, "witness"), at(path, "witness"));
    if (M.cols() != dim) throw ConfigError(at(path, "M"), "expected " + std::to_string(dim) + " columns");
    return wrap(path, [&] { return ConvexSet::halfspaces(M, b, w); });
  }
  throw ConfigError(at(path, "type"), "unknown set type '" + type + "'");
}

struct IntegralSpec {
  QuadratureSpec quad;
  Expr integrand;
  bool regular = true;
};

std::optional<IntegralSpec> integral_spec(const json& doc) {
  if (!doc.contains("J") || !doc["J"].contains("integral")) return std::nullopt;
  const std::string path = "J.integral";
  const json& v = doc["J"]["integral"];
  only_keys(v, path, {"domain", "nodes", "rule", "integrand"});
  const Vector dom = vec(need(v, path, "domain"), at(path, "domain"));
  if (dom.size() != 2) throw ConfigError(at(path, "domain"), "expected [a, b]");
  QuadratureSpec quad{dom(0), dom(1),
                      static_cast<int>(integer(need(v, path, "nodes"), at(path, "nodes"), 1)),
                      QuadratureRule::Midpoint};
  if (v.contains("rule")) {
    quad.rule = wrap(at(path, "rule"), [&] { return parse_rule(text(v["rule"], at(path, "rule"))); });
  }
  wrap(path, [&] { quad.validate(); return 0; });
  const int blocks = static_cast<int>(doc.at("players").size());
  return IntegralSpec{quad, expression(need(v, path, "integrand"), at(path, "integrand"), blocks + 1),
                      true};
}

Matrix linear_map(const json& v, const std::string& path, int dim,
                  const std::optional<IntegralSpec>& integral) {
  if (v.is_string()) {
    if (v.get<std::string>() != "identity") throw ConfigError(path, "expected a matrix or \"identity\"");
    return Matrix::Identity(dim, dim);
  }
  if (v.is_object()) {
    only_keys(v, path, {"node_map"});
    if (!integral) throw ConfigError(path, "node_map requires an integral J");
    const int c = static_cast<int>(integer(need(v, path, "node_map"), at(path, "node_map"), 1));
    return polynomial_node_map(integral->quad, c);
  }
  return matrix(v, path);
}

ClarkeParams clarke_params(const json& doc) {
  ClarkeParams p;
  if (!doc.contains("clarke")) return p;
  const std::string path = "clarke";
  const json& v = doc["clarke"];
  only_keys(v, path, {"delta0", "shrink", "scales", "samples_per_scale", "seed"});
  if (v.contains("delta0")) p.delta0 = finite(v["delta0"], at(path, "delta0"));
  if (v.contains("shrink")) p.shrink = finite(v["shrink"], at(path, "shrink"));
  if (v.contains("scales")) p.scales = static_cast<int>(integer(v["scales"], at(path, "scales"), 2));
  if (v.contains("samples_per_scale")) {
    p.samples_per_scale =
        static_cast<int>(integer(v["samples_per_scale"], at(path, "samples_per_scale"), 1));
  }
  if (v.contains("seed")) p.seed = seed_value(v["seed"], at(path, "seed"));
  wrap(path, [&] { p.validate(); return 0; });
  return p;
}

SolveOptions solve_options(const json& doc) {
  SolveOptions o;
  if (!doc.contains("solver")) return o;
  const std::string path = "solver";
  const json& v = doc["solver"];
  only_keys(v, path, {"method", "resolution", "max_iters", "step", "tol", "seed", "random_extra"});
  if (v.contains("method")) {
    o.method = wrap(at(path, "method"), [&] { return parse_method(text(v["method"], at(path, "method"))); });
  }
  if (v.contains("resolution")) o.resolution = static_cast<int>(integer(v["resolution"], at(path, "resolution"), 2));
  if (v.contains("max_iters")) o.max_iters = static_cast<int>(integer(v["max_iters"], at(path, "max_iters"), 0));
  if (v.contains("step")) o.step = finite(v["step"], at(path, "step"));
  if (v.contains("tol")) o.tol = finite(v["tol"], at(path, "tol"));
  if (v.contains("seed")) o.seed = seed_value(v["seed"], at(path, "seed"));
  if (v.contains("random_extra")) {
    o.random_extra = static_cast<int>(integer(v["random_extra"], at(path, "random_extra"), 0));
  }
  wrap(path, [&] { o.validate(); return 0; });
  return o;
}

AuditConfig audit_config(const json& doc) {
  AuditConfig a;
  if (!doc.contains("audit")) return a;
  const std::string path = "audit";
  const json& v = doc["audit"];
  only_keys(v, path, {"lists", "points", "combos", "seed", "tol"});
  if (v.contains("lists")) a.lists = static_cast<int>(integer(v["lists"], at(path, "lists"), 1));
  if (v.contains("points")) a.points = static_cast<int>(integer(v["points"], at(path, "points"), 1));
  if (v.contains("combos")) a.combos = static_cast<int>(integer(v["combos"], at(path, "combos"), 1));
  if (v.contains("seed")) a.seed = seed_value(v["seed"], at(path, "seed"));
  if (v.contains("tol")) {
    a.tol = finite(v["tol"], at(path, "tol"));
    if (!(a.tol > 0.0)) throw ConfigError(at(path, "tol"), "must be > 0");
  }
  return a;
}

CoercivityConfig coercivity_config(const json& doc) {
  CoercivityConfig c;
  if (!doc.contains("coercivity")) return c;
  const std::string path = "coercivity";
  const json& v = doc["coercivity"];
  only_keys(v, path, {"samples", "radius", "seed"});
  if (v.contains("samples")) c.samples = static_cast<int>(integer(v["samples"], at(path, "samples"), 1));
  if (v.contains("radius")) {
    c.radius = finite(v["radius"], at(path, "radius"));
    if (!(*c.radius > 0.0)) throw ConfigError(at(path, "radius"), "must be > 0");
  }
  if (v.contains("seed")) c.seed = seed_value(v["seed"], at(path, "seed"));
  return c;
}

// Messages from QhsSystem start with the field path ("players[1].T: ...").
[[noreturn]] void rethrow_system_error(const std::invalid_argument& e) {
  const std::string msg = e.what();
  const auto colon = msg.find(": ");
  if (colon != std::string::npos && (msg.rfind("players[", 0) == 0 || msg.rfind("J", 0) == 0)) {
    throw ConfigError(msg.substr(0, colon), msg.substr(colon + 2));
  }
  throw ConfigError("players", msg);
}

}  // namespace

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ProblemConfig parse_config(const json& doc) {
  only_keys(doc, "", {"$schema", "schema_version", "name", "description", "players", "J",
                      "truncation", "solver", "clarke", "audit", "coercivity"});
  if (doc.contains("schema_version") && doc["schema_version"] != 1) {
    throw ConfigError("schema_version", "unsupported version (expected 1)");
  }
  const std::string name = text(need(doc, "", "name"), "name");
  if (doc.contains("description")) text(doc["description"], "description");

  const json& players = need(doc, "", "players");
  if (!players.is_array() || players.empty()) {
    throw ConfigError("players", "expected a nonempty array");
  }
  const ClarkeParams params = clarke_params(doc);
  if (doc.contains("J")) {
    only_keys(doc["J"], "J", {"expr", "integral", "regular"});
    if (doc["J"].contains("expr") == doc["J"].contains("integral")) {
      throw ConfigError("J", "give exactly one of expr or integral");
    }
  }
  const std::optional<IntegralSpec> integral = integral_spec(doc);

  // First pass: dims and linear maps, needed for expression arities.
  const std::size_t n = players.size();
  std::vector<int> dims(n);
  std::vector<Matrix> Ts(n), Ss(n);
  int y_dim = 0, z_dim = 0, x_dim = 0;
  std::vector<int> t_rows(n), s_rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string path = at("players", i);
    const json& p = players[i];
    only_keys(p, path, {"dim", "set", "T", "S", "A", "A_regular", "A_gradient", "F"});
    dims[i] = static_cast<int>(integer(need(p, path, "dim"), at(path, "dim"), 1));
    Ts[i] = linear_map(need(p, path, "T"), at(path, "T"), dims[i], std::nullopt);
    Ss[i] = p.contains("S") ? linear_map(p["S"], at(path, "S"), dims[i], integral)
                            : Matrix::Identity(dims[i], dims[i]);
    if (Ts[i].cols() != dims[i]) {
      throw ConfigError(at(path, "T"), "expected " + std::to_string(dims[i]) + " columns (dim X_" +
                                           std::to_string(i + 1) + "), got " +
                                           std::to_string(Ts[i].cols()));
    }
    if (Ss[i].cols() != dims[i]) {
      throw ConfigError(at(path, "S"), "expected " + std::to_string(dims[i]) + " columns (dim X_" +
                                           std::to_string(i + 1) + "), got " +
                                           std::to_string(Ss[i].cols()));
    }
    if (integral && Ss[i].rows() != integral->quad.nodes) {
      throw ConfigError(at(path, "S"), "an integral J needs one row per quadrature node");
    }
    t_rows[i] = static_cast<int>(Ts[i].rows());
    s_rows[i] = static_cast<int>(Ss[i].rows());
    y_dim += t_rows[i];
    z_dim += s_rows[i];
    x_dim += dims[i];
  }

  std::vector<Player> built;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string path = at("players", i);
    const json& p = players[i];
    ConvexSet K = set_spec(need(p, path, "set"), at(path, "set"), dims[i]);
    if (K.dim() != dims[i]) throw ConfigError(at(path, "set"), "dimension differs from dim");
    Expr a = expression(need(p, path, "A"), at(path, "A"), y_dim);
    bool regular = p.contains("A_regular") ? boolean(p["A_regular"], at(path, "A_regular")) : false;
    ScalarFn::DirectionalDerivative dd;
    if (p.contains("A_gradient")) {
      const json& g = p["A_gradient"];
      const std::string gp = at(path, "A_gradient");
      if (!g.is_array() || static_cast<int>(g.size()) != y_dim) {
        throw ConfigError(gp, "expected " + std::to_string(y_dim) + " expressions");
      }
      std::vector<Expr> grad;
      for (std::size_t k = 0; k < g.size(); ++k) grad.push_back(expression(g[k], at(gp, k), y_dim));
      const VectorField field = vector_field_from_exprs(std::move(grad));
      dd = [field](const Vector& u, const Vector& v) { return field(u).dot(v); };
      regular = true;
    }
    ScalarFn A = [&] {
      if (dd) {
        return ScalarFn(t_rows, [a](const Vector& y) {
          return a(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
        }, regular, dd);
      }
      return scalar_fn_from_expr(a, t_rows, regular);
    }();
    std::optional<VectorField> F;
    if (p.contains("F")) {
      const json& f = p["F"];
      const std::string fp = at(path, "F");
      if (!f.is_array() || static_cast<int>(f.size()) != dims[i]) {
        throw ConfigError(fp, "expected " + std::to_string(dims[i]) + " expressions");
      }
      std::vector<Expr> coords;
      for (std::size_t k = 0; k < f.size(); ++k) coords.push_back(expression(f[k], at(fp, k), x_dim));
      F = vector_field_from_exprs(std::move(coords));
    }
    built.push_back(Player{std::move(K), Ts[i], Ss[i], std::move(A), std::move(F)});
  }

  std::optional<ScalarFn> J;
  if (doc.contains("J")) {
    const json& j = doc["J"];
    const bool regular = j.contains("regular") ? boolean(j["regular"], "J.regular") : true;
    if (!regular) throw ConfigError("J.regular", "J must be a regular function");
    if (integral) {
      J = IntegralFunctional(integral->integrand, integral->quad, static_cast<int>(n), true)
              .as_scalar_fn();
    } else {
      J = scalar_fn_from_expr(expression(j["expr"], "J.expr", z_dim), s_rows, true);
    }
  }

  std::optional<QhsSystem> sys;
  try {
    sys.emplace(std::move(built), std::move(J), params);
  } catch (const std::invalid_argument& e) {
    rethrow_system_error(e);
  }

  std::optional<TruncationSpec> trunc;
  if (doc.contains("truncation")) {
    const std::string path = "truncation";
    const json& t = doc["truncation"];
    only_keys(t, path, {"K0", "v0", "radii"});
    const json& k0 = need(t, path, "K0");
    if (!k0.is_array() || k0.size() != n) {
      throw ConfigError(at(path, "K0"), "expected one set per player");
    }
    TruncationSpec spec;
    for (std::size_t i = 0; i < n; ++i) spec.K0.push_back(set_spec(k0[i], at(at(path, "K0"), i), dims[i]));
    spec.v0 = vec(need(t, path, "v0"), at(path, "v0"));
    const Vector radii = vec(need(t, path, "radii"), at(path, "radii"));
    spec.radii.assign(radii.data(), radii.data() + radii.size());
    wrap(path, [&] { validate_truncation(*sys, spec); return 0; });
    trunc = std::move(spec);
  }

  ProblemConfig cfg{name,
                    std::move(*sys),
                    std::move(trunc),
                    solve_options(doc),
                    audit_config(doc),
                    coercivity_config(doc),
                    fnv1a_hex(doc.dump())};
  return cfg;
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace qhs
