#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qhs/config.hpp"
#include "qhs/errors.hpp"
#include "qhs/instances.hpp"
#include "qhs/run.hpp"

namespace py = pybind11;
using namespace qhs;

namespace {

ScalarFn expr_fn(const std::string& text, int arity, bool regular) {
  Expr e = Expr::parse(text, arity);
  return ScalarFn(std::vector<int>(static_cast<std::size_t>(arity), 1),
                  [e](const Vector& x) {
                    return e(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
                  },
                  regular);
}

RunOverrides overrides_from(const std::map<std::string, std::string>& kv) {
  RunOverrides ov;
  for (const auto& [key, value] : kv) {
    if (key == "at") ov.at = value;
    else if (key == "method") ov.method = value;
    else if (key == "resolution") ov.resolution = std::stoi(value);
    else if (key == "tol") ov.tol = std::stod(value);
    else if (key == "seed") ov.seed = std::stoull(value);
    else if (key == "max_iters") ov.max_iters = std::stoi(value);
    else if (key == "step") ov.step = std::stod(value);
    else throw std::invalid_argument("unknown override '" + key + "'");
  }
  return ov;
}

}  // namespace

PYBIND11_MODULE(_qhs, m) {
  m.doc() = "Quasi-hemivariational system core";

  auto parse_error = py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<NumericDomainError>(m, "NumericDomainError", PyExc_ArithmeticError);
  py::register_exception<SolverFailure>(m, "SolverFailure", PyExc_RuntimeError);
  py::register_exception<UnsupportedOperation>(m, "UnsupportedOperation", PyExc_RuntimeError);
  (void)parse_error;

  py::class_<ClarkeParams>(m, "ClarkeParams")
      .def(py::init<>())
      .def_readwrite("delta0", &ClarkeParams::delta0)
      .def_readwrite("shrink", &ClarkeParams::shrink)
      .def_readwrite("scales", &ClarkeParams::scales)
      .def_readwrite("samples_per_scale", &ClarkeParams::samples_per_scale)
      .def_readwrite("seed", &ClarkeParams::seed);

  py::class_<Expr>(m, "Expr")
      .def_static("parse", &Expr::parse, py::arg("text"), py::arg("arity"))
      .def_property_readonly("arity", &Expr::arity)
      .def("__call__",
           [](const Expr& e, const std::vector<double>& x) { return e(std::span<const double>(x)); })
      .def("__str__", &Expr::to_string);

  m.def(
      "clarke_dd",
      [](const std::string& f, const Vector& u, const Vector& v, const ClarkeParams& p) {
        return clarke_dd(expr_fn(f, static_cast<int>(u.size()), false), u, v, p);
      },
      py::arg("f"), py::arg("u"), py::arg("v"), py::arg("params") = ClarkeParams{},
      "Clarke directional derivative of an expression in x1..xN.");
  m.def(
      "one_sided_dd",
      [](const std::string& f, const Vector& u, const Vector& v, const ClarkeParams& p) {
        return one_sided_dd(expr_fn(f, static_cast<int>(u.size()), false), u, v, p);
      },
      py::arg("f"), py::arg("u"), py::arg("v"), py::arg("params") = ClarkeParams{});
  m.def(
      "regularity_gap",
      [](const std::string& f, const Vector& u, const Vector& v, const ClarkeParams& p) {
        return regularity_gap(expr_fn(f, static_cast<int>(u.size()), false), u, v, p);
      },
      py::arg("f"), py::arg("u"), py::arg("v"), py::arg("params") = ClarkeParams{});

  py::class_<QhsSystem>(m, "QhsSystem")
      .def_property_readonly("players", &QhsSystem::players)
      .def_property_readonly("dim", &QhsSystem::dim)
      .def_property_readonly("bounded", &QhsSystem::bounded)
      .def("block_dim", &QhsSystem::block_dim);

  py::class_<PlayerResidual>(m, "PlayerResidual")
      .def_readonly("player", &PlayerResidual::player)
      .def_readonly("worst_violation", &PlayerResidual::worst_violation)
      .def_readonly("argmin_direction", &PlayerResidual::argmin_direction)
      .def_readonly("argmin_index", &PlayerResidual::argmin_index);

  py::class_<ResidualReport>(m, "ResidualReport")
      .def_readonly("per_player", &ResidualReport::per_player)
      .def_readonly("overall_worst", &ResidualReport::overall_worst)
      .def_readonly("tol", &ResidualReport::tol)
      .def_readonly("verdict", &ResidualReport::verdict)
      .def_readonly("samples_used", &ResidualReport::samples_used)
      .def_readonly("seed", &ResidualReport::seed);

  py::class_<SolveOptions>(m, "SolveOptions")
      .def(py::init<>())
      .def_property(
          "method", [](const SolveOptions& o) { return to_string(o.method); },
          [](SolveOptions& o, const std::string& s) { o.method = parse_method(s); })
      .def_readwrite("resolution", &SolveOptions::resolution)
      .def_readwrite("max_iters", &SolveOptions::max_iters)
      .def_readwrite("step", &SolveOptions::step)
      .def_readwrite("tol", &SolveOptions::tol)
      .def_readwrite("seed", &SolveOptions::seed)
      .def_readwrite("random_extra", &SolveOptions::random_extra);

  m.def("builtin_names", &builtin_names);
  m.def("bounded_builtin_names", &bounded_builtin_names);
  m.def("builtin", &builtin, py::arg("name"));
  m.def(
      "load_config", [](const std::string& path) { return load_config(path).system; },
      py::arg("path"), "Problem system described by a JSON config file.");

  m.def(
      "verify",
      [](const QhsSystem& sys, const Vector& u, int resolution, double tol, std::uint64_t seed,
         int random_extra) {
        return verify_qhs(sys, sys.admit(u), make_sample_family(sys, resolution, random_extra, seed),
                          tol, seed);
      },
      py::arg("system"), py::arg("u"), py::arg("resolution") = 21, py::arg("tol") = 1e-2,
      py::arg("seed") = 0, py::arg("random_extra") = 200);

  m.def(
      "brute_force_solve",
      [](const QhsSystem& sys, const SolveOptions& o) {
        const Solution s = brute_force_solve(sys, o);
        return py::make_tuple(s.point, s.report);
      },
      py::arg("system"), py::arg("options") = SolveOptions{});
  m.def(
      "best_response_solve",
      [](const QhsSystem& sys, const Vector& u0, const SolveOptions& o) {
        const BestResponseResult s = best_response_solve(sys, u0, o);
        return py::make_tuple(s.point, s.report);
      },
      py::arg("system"), py::arg("u0"), py::arg("options") = SolveOptions{});
  m.def(
      "kkm_audit_suite",
      [](const QhsSystem& sys, int lists, int points, int combos, std::uint64_t seed, double tol) {
        const KkmAuditSuite a = kkm_audit_suite(sys, lists, points, combos, seed, tol);
        return py::dict(py::arg("combos") = a.combos, py::arg("violations") = a.violations,
                        py::arg("worst") = a.worst);
      },
      py::arg("system"), py::arg("lists") = 5, py::arg("points") = 3, py::arg("combos") = 200,
      py::arg("seed") = 0, py::arg("tol") = 1e-2);

  m.def("command_names", &command_names);
  m.def(
      "run_file",
      [](const std::string& command, const std::string& path,
         const std::map<std::string, std::string>& kv) {
        const RunResult r = run_file(command, path, overrides_from(kv));
        return py::make_tuple(r.exit_code, r.report.dump());
      },
      py::arg("command"), py::arg("config_path"), py::arg("overrides") = std::map<std::string, std::string>{});
}
