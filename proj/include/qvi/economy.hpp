#pragma once

#include <string>
#include <vector>

#include "qvi/expr.hpp"
#include "qvi/geometry.hpp"
#include "qvi/operators.hpp"
#include "qvi/qvi_engine.hpp"

namespace qvi {

struct Consumer {
  ConvexSet X;
  Vec endowment;
  expr::Expr utility;  // maximized; variables x1..xM
};

/// Pure exchange economy with prices in the closed unit ball.
struct EconomyProblem {
  std::string name;
  int goods = 0;
  std::vector<Consumer> consumers;
  /// Sampling setup of the adjusted normal operators.
  NormalConfig normals;

  /// Dimensions, and e_i in the interior of X_i (checked on a small ball).
  void validate() const;
  QuasiconvexFunctionHandle objective(std::size_t i) const;  // −u_i on X_i
  std::vector<Vec> split(const Vec& y) const;
};

/// S_i(p) = { y ∈ X_i : ⟨p, y⟩ ≤ ⟨p, e_i⟩ }.
ConvexSet budget_set(const EconomyProblem& E, std::size_t i, const Vec& p);

/// M_i(p) = { y ∈ X_i : ⟨p, y − e_i⟩ ≤ 1 − |p| }.
ConvexSet modified_budget_set(const EconomyProblem& E, std::size_t i, const Vec& p);

/// Star-mode QVI: g(y) = Σ (e_i − y_i), G = ∏ N^a_{−u_i} without 0,
/// M(p) = ∏ M_i(p), P = unit ball.
QviProblem compile_to_qvi(const EconomyProblem& E);

/// Σ (y_i − e_i).
Vec excess_demand(const EconomyProblem& E, const Vec& y);

struct WalrasOptions {
  double clearing_tol = 1e-9;
  double utility_tol = 1e-7;
  double budget_tol = 1e-9;
  std::size_t samples = 10000;  // per agent
  std::uint64_t seed = 1;
};

struct WalrasVerdict {
  bool equilibrium = false;
  std::string failed_condition;  // "clearing", "utility" or "budget"
  int agent = -1;
  Vec witness;
  double clearing_error = 0.0;
  std::vector<double> improvement;  // best u_i(z) − u_i(ȳ_i) found per agent
  std::vector<double> budget_excess;
  double price_norm = 0.0;
};

/// Checks market clearing, sampled utility maximization on S_i(p̄) (vertices,
/// random points, radial probes and a local ascent) and budget feasibility,
/// in that order.
WalrasVerdict verify_walrasian(const EconomyProblem& E, const Vec& p_bar, const Vec& y_bar,
                               const WalrasOptions& opts = {});

struct UtilityCoercivitySample {
  Vec p, y, z;
  bool strict = false;  // u(z) > u(y)
  bool weak = false;    // u(z) ≥ u(y) and d(z, S^<) ≤ d(y, S^<)
};

struct UtilityCoercivityReport {
  std::size_t agent = 0;
  double rho = 0.0;
  std::size_t tested = 0;
  std::size_t strict = 0;
  std::size_t weak_only = 0;
  std::vector<UtilityCoercivitySample> violations;
};

/// For sampled p ∈ P and y ∈ M_i(p) with |y| > rho, looks for z ∈ M_i(p) with
/// |z| ≤ rho and u(z) > u(y), falling back to the weak form.
UtilityCoercivityReport check_utility_coercivity(const EconomyProblem& E, std::size_t i, double rho,
                                                 std::size_t p_samples, std::size_t y_samples,
                                                 std::uint64_t seed = 1);

}  // namespace qvi
