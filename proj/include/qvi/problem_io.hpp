#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qvi/economy.hpp"
#include "qvi/gnep.hpp"
#include "qvi/qvi_engine.hpp"
#include "qvi/vi_solver.hpp"

namespace qvi {

enum class ProblemKind { Qvi, Economy, Gnep, Vi };

std::string_view kind_name(ProblemKind kind);

/// Solver settings a problem file or the command line may override.
struct SolverOverrides {
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<int> outer_max_iter;
  std::optional<int> outer_starts;
  std::optional<int> n_starts;
  std::optional<double> r_init;
  std::optional<double> r_max;
  std::optional<double> boundary_tol;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> cloud_size;
  std::optional<QviMode> mode;
};

/// Fields of `over` that are set replace those of `base`.
SolverOverrides merge(const SolverOverrides& base, const SolverOverrides& over);

SolverConfig make_solver_config(const SolverOverrides& o);
QviConfig make_qvi_config(const SolverOverrides& o);

struct Problem {
  ProblemKind kind = ProblemKind::Qvi;
  std::string name;
  std::string origin;  // file path or builtin:<key>
  std::string source;  // the exact text that was parsed
  SolverOverrides config;
  std::optional<QviProblem> qvi;
  std::optional<EconomyProblem> economy;
  std::optional<GnepProblem> gnep;
  std::optional<ViProblem> vi;
};

/// Parses a JSON problem document. Syntax errors carry line and column,
/// schema errors the JSON pointer of the offending field; unknown fields are
/// rejected. Both raise SchemaError.
Problem parse_problem(const std::string& text, const std::string& origin);

/// Reads a file, or a catalog entry when spec is "builtin:<key>".
Problem load_problem(const std::string& spec);

const std::vector<std::string>& builtin_keys();

/// Source text of a catalog entry; InvalidInput for an unknown key.
const std::string& builtin_source(const std::string& key);

}  // namespace qvi
