#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qhs/solvers.hpp"
#include "qhs/system.hpp"

namespace qhs {

/// Invalid problem description. The message starts with the offending
/// field path, e.g. "players[0].T: ...".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& reason)
      : std::invalid_argument(path.empty() ? reason : path + ": " + reason), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct AuditConfig {
  int lists = 5;    // independent v-lists
  int points = 3;   // points per v-list
  int combos = 200; // convex combinations per list
  std::uint64_t seed = 0;
  double tol = 1e-2;
};

struct CoercivityConfig {
  int samples = 100;
  std::optional<double> radius;  // defaults to the first truncation radius
  std::uint64_t seed = 0;
};

struct ProblemConfig {
  std::string name;
  QhsSystem system;
  std::optional<TruncationSpec> truncation;
  SolveOptions solver;
  AuditConfig audit;
  CoercivityConfig coercivity;
  std::string hash;  // FNV-1a of the canonical JSON text
};

/// Throws ConfigError (field path + reason; expression errors keep their
/// byte offset in the message).
ProblemConfig parse_config(const nlohmann::json& doc);

/// Reads and parses a UTF-8 JSON file. I/O and JSON syntax problems are
/// reported as ConfigError with an empty path.
ProblemConfig load_config(const std::string& path);

/// Hex FNV-1a 64 digest.
std::string fnv1a_hex(const std::string& text);

}  // namespace qhs
