#pragma once

#include <optional>
#include <string>

#include "qvi/problem_io.hpp"

namespace qvi {

enum class ProbeKind { Pseudo, Quasi, Coercivity };
ProbeKind parse_probe_kind(std::string_view text);

struct CommandOptions {
  std::string problem;  // path or builtin:<key>
  SolverOverrides overrides;
  bool timing = false;

  // verify
  std::optional<Vec> p, y, y_star, x;

  // probe
  ProbeKind probe = ProbeKind::Pseudo;
  std::optional<double> r_p, r_test;
};

struct CommandResult {
  int exit_code = 0;  // 0 solved/passed, 2 not solved or failed
  std::string report;
};

/// Input problems (unreadable file, schema errors, wrong candidate
/// dimensions, unsupported flag combinations) are thrown as Error; the caller
/// maps them to exit code 1.
CommandResult cmd_solve(const CommandOptions& opts);
CommandResult cmd_verify(const CommandOptions& opts);
CommandResult cmd_probe(const CommandOptions& opts);

/// A JSON array of numbers or constant expressions such as "-1/sqrt(2)".
Vec parse_vector_literal(const std::string& text, const std::string& what);

}  // namespace qvi
