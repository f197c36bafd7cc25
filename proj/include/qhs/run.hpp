#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhs/config.hpp"

namespace qhs {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitFalse = 1, kExitConfig = 2, kExitSolver = 3 };

/// Command-line overrides. --seed replaces the solver, audit and coercivity
/// seeds; --tol replaces the solver and audit tolerances.
struct RunOverrides {
  std::optional<std::string> at;
  std::optional<std::string> method;
  std::optional<int> resolution;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_iters;
  std::optional<double> step;
};

/// `report` is {"body": ..., "timing": {"wall_ms": ...}}; the body is a
/// pure function of the config and overrides.
struct RunResult {
  int exit_code = kExitOk;
  nlohmann::json report;
  std::string diagnostic;  // for stderr; empty on success
};

std::vector<std::string> command_names();

/// Parses "(1, 1)", "[1,1]" or "1,1".
Vector parse_point(const std::string& text);

RunResult run_command(const std::string& command, const ProblemConfig& config,
                      const RunOverrides& overrides);

/// Loads the config and runs; config problems become exit code 2 with an
/// error report.
RunResult run_file(const std::string& command, const std::string& config_path,
                   const RunOverrides& overrides);

/// Two-space indented JSON followed by a newline.
std::string render_report(const nlohmann::json& report);

}  // namespace qhs
