#pragma once

#include <string>
#include <vector>

#include "qvi/expr.hpp"
#include "qvi/geometry.hpp"
#include "qvi/operators.hpp"
#include "qvi/qvi_engine.hpp"
#include "qvi/vi_solver.hpp"

namespace qvi {

struct GnepPlayer {
  int dim = 1;
  /// Minimized; an expression in the full strategy vector x1..xn.
  expr::Expr objective;
  /// Convex and C¹ in the own block: the player contributes ∇_i u_i instead
  /// of strict-sublevel normals.
  bool smooth = false;
};

/// Jointly convex generalized Nash game: player i picks x_i with
/// (x_{−i}, x_i) ∈ X and minimizes u_i(x_{−i}, ·).
struct GnepProblem {
  std::string name;
  ConvexSet X = ConvexSet::whole_space(1);
  std::vector<GnepPlayer> players;
  NormalConfig normals;

  int dim() const;
  std::vector<int> offsets() const;
  void validate() const;
  double objective(std::size_t i, const Vec& x) const;
  /// u_i(x_{−i}, ·) on the slice X_i(x_{−i}).
  QuasiconvexFunctionHandle block_objective(std::size_t i, const Vec& x) const;
  /// x with block i replaced by z.
  Vec replace_block(std::size_t i, const Vec& x, const Vec& z) const;
};

/// VI(F, X) with F the product over players of a unit strict-sublevel normal
/// of u_i(x_{−i}, ·) at x_i, or of ∇_i u_i for smooth players. Where x_i
/// already minimizes over its slice the block offers 0 and ±e_j.
ViProblem build_vi_reformulation(const GnepProblem& G);

/// The game as a QVI with a one-point price set, g ≡ 0 and M ≡ X.
QviProblem gnep_as_qvi(const GnepProblem& G);

struct GnepVerdict {
  bool equilibrium = false;
  int player = -1;                  // first failing player
  Vec witness;                      // its better block z_i
  std::vector<double> improvement;  // best u_i(x) − u_i(x_{−i}, z_i) found per player
};

struct GnepCandidate {
  QviStatus status = QviStatus::NoConvergence;
  Vec x;
  Vec x_star;  // certificate returned by the engine
  double residual = kInf;
  double r_final = 0.0;
  std::vector<RadiusRecord> history;
  std::vector<std::string> assumption_ledger;
  int iterations = 0;
  std::string message;
  GnepVerdict verdict;
};

struct GnepOptions {
  QviConfig engine;
  double verify_tol = 1e-7;
  std::size_t verify_samples = 10000;
};

/// Radius-growth solve of the reformulated VI, then an independent
/// verify_gnep at the result.
GnepCandidate solve_gnep(const GnepProblem& G, const GnepOptions& opts = {});

/// Searches each slice for a strictly better block: vertices, random points,
/// radial probes and a local descent from x_i. InfeasibleCandidate when x ∉ X.
GnepVerdict verify_gnep(const GnepProblem& G, const Vec& x, double tol = 1e-7, std::size_t samples = 10000,
                        std::uint64_t seed = 1);

/// Largest sampled Nikaido–Isoda value Σ_i [u_i(x) − u_i(x_{−i}, y_i)] over
/// unilateral deviations, clamped at 0.
double nikaido_isoda_gap(const GnepProblem& G, const Vec& x, std::size_t samples = 10000, std::uint64_t seed = 1);

struct GnepEscape {
  Vec y, z;
  /// true: every player strictly improves (or, smooth players, the gradient
  /// inequality holds); false: only ⟨y*, y − z⟩ ≥ 0 for all y* ∈ F(y).
  bool per_player = false;
};

struct GnepCoercivityReport {
  double r_prime = 0.0;
  double r_test = 0.0;
  std::size_t tested = 0;
  std::vector<GnepEscape> escapes;
  std::vector<Vec> violations;
};

/// Samples y ∈ X with r′ < |y| ≤ r_test and looks for z ∈ X with |z| < |y|
/// satisfying the per-player decrease, falling back to the summed form.
GnepCoercivityReport check_gnep_coercivity(const GnepProblem& G, double r_prime, double r_test, std::size_t samples,
                                           std::uint64_t seed = 1, double tol = 1e-9);

}  // namespace qvi
