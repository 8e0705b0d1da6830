#pragma once

#include <cstdint>
#include <vector>

#include "qvi/geometry.hpp"
#include "qvi/operators.hpp"

namespace qvi {

struct SolverConfig {
  double tol = 1e-8;
  int max_iter = 50000;
  int n_starts = 8;
  std::uint64_t seed = 42;
  double zero_tol = kZeroTol;
  /// Extragradient step bounds and backtracking ratio.
  double step_init = 1.0;
  double step_min = 1e-12;
  double step_max = 1e6;
  double nu = 0.9;
  ProjectionOptions proj;
};

struct ViProblem {
  SetValuedOperator F;
  ConvexSet K;
};

struct ViSolution {
  Vec x;
  Vec x_star;
  double residual = kInf;
  int iterations = 0;
  bool star = false;
  int start = 0;
  int branch = 0;
  bool converged = false;
};

/// min over selections x* ∈ F(x) of |x − P_K(x − step·x*)|. With star set,
/// only selections of norm ≥ zero_tol count (+inf if there are none).
/// InfeasiblePoint when x is farther than feas_tol from K.
double natural_residual(const ViProblem& P, const Vec& x, double step = 1.0, bool star = false,
                        double zero_tol = kZeroTol, Vec* certificate = nullptr, double feas_tol = 1e-7,
                        const ProjectionOptions& proj = {});

/// Thrown when no start reaches cfg.tol; carries the best candidate.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, ViSolution best) : Error(Errc::NoConvergence, what), best_(std::move(best)) {}
  const ViSolution& best() const { return best_; }

 private:
  ViSolution best_;
};

/// One extragradient run from x0 following selection `branch` (clamped to
/// the number of selections available at each point).
ViSolution extragradient_run(const ViProblem& P, const Vec& x0, int branch, bool star, int max_iter,
                             const SolverConfig& cfg);

/// Runs extragradient from every start (start 0 is P_K(0), the others are
/// seeded random points) and every selection branch. Results are ordered by
/// (start, branch). Requires a bounded K (NotCompact otherwise).
std::vector<ViSolution> solve_vi_all(const ViProblem& P, const SolverConfig& cfg, bool star = false);

/// Best residual over solve_vi_all (ties go to the earlier start).
ViSolution solve_vi(const ViProblem& P, const SolverConfig& cfg = {});

/// As solve_vi, with the certificate required to be a nonzero selection. Falls
/// back to restarts from a grid over K with residual polishing when the
/// random starts fail.
ViSolution solve_vi_star(const ViProblem& P, const SolverConfig& cfg = {});

struct MintyResult {
  bool pass = true;
  Vec v;
  Vec v_star;
  double value = 0.0;  // ⟨v*, v − x⟩ at the reported violation
  std::size_t checked = 0;
};

/// Samples v ∈ K (corners, center, grid, random points) and every selection
/// v* ∈ F(v); reports the first ⟨v*, v − x⟩ < −tol.
MintyResult check_minty(const ViProblem& P, const Vec& x, std::size_t samples, std::uint64_t seed = 1,
                        double tol = 1e-8);

/// Worst value of ⟨x*, v − x⟩ over `samples` sampled v ∈ K (negative values
/// violate the Stampacchia inequality).
double stampacchia_worst(const ViProblem& P, const Vec& x, const Vec& x_star, std::size_t samples,
                         std::uint64_t seed = 1);

}  // namespace qvi
