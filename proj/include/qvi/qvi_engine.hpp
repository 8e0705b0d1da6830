#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qvi/geometry.hpp"
#include "qvi/operators.hpp"
#include "qvi/vi_solver.hpp"

namespace qvi {

enum class QviMode { Pseudo, Star, Alternative };

std::string_view mode_name(QviMode mode);
QviMode parse_mode(std::string_view text);

/// One block y_i of the quantity variable with its own operator and
/// constraint map. Both may depend on the price p.
struct QviBlock {
  int dim = 0;
  std::function<SetValuedOperator(const Vec& p)> G;
  std::function<ConvexSet(const Vec& p)> M;
};

/// find (p̄, ȳ) ∈ P × M(p̄) and ȳ* ∈ G(ȳ) with
///   ⟨g(ȳ), p − p̄⟩ + ⟨ȳ*, z − ȳ⟩ ≥ 0 for all (p, z) ∈ P × M(p̄).
/// G and M are products over the blocks.
struct QviProblem {
  std::string name;
  ConvexSet P = ConvexSet::whole_space(1);
  std::function<Vec(const Vec& y)> g;
  bool g_affine = false;
  std::vector<QviBlock> blocks;
  QviMode mode = QviMode::Pseudo;
  /// Coercivity shell radius when the model knows one (0 otherwise).
  double r_p = 0.0;
  std::vector<std::string> assumptions;

  int dim_p() const { return P.dim(); }
  int dim_y() const;
  std::vector<int> block_offsets() const;
  SetValuedOperator G(const Vec& p) const;
  ConvexSet M(const Vec& p) const;
  /// Checks dimensions of g, G and M at p (DimensionMismatch).
  void validate(const Vec& p) const;
};

struct QviConfig {
  SolverConfig inner;
  double tol = 1e-8;  // on the certified joint residual
  int outer_max_iter = 300;
  int outer_starts = 4;
  /// Outer iterations without a residual improvement before a start gives up.
  int stall_limit = 60;
  double r_init = 0.0;  // 0 picks 2 * (1 + max(|P_M(p0)(0)|, r_p))
  double r_max = 0.0;   // 0 picks 2^10 * r_init
  double growth = 2.0;
  double boundary_tol = 1e-6;
  std::size_t cert_samples = 1000;
  std::uint64_t seed = 42;
};

enum class QviStatus { Certified, RadiusExceeded, NoConvergence };
std::string_view status_name(QviStatus status);

struct RadiusRecord {
  double r = 0.0;
  bool converged = false;      // outer iteration reached its tolerance at this radius
  double residual_joint = 0.0;  // certificate residual of the best candidate, truncation 2r
  double outer_residual = 0.0;
  double y_norm = 0.0;
  int outer_iterations = 0;
  Vec p, y;
};

struct QviSolution {
  QviStatus status = QviStatus::NoConvergence;
  Vec p_bar, y_bar, y_star;
  double residual_joint = kInf;
  double r_final = 0.0;
  double r_init = 0.0;
  double r_max = 0.0;
  QviMode mode = QviMode::Pseudo;
  std::vector<std::string> assumption_ledger;
  std::vector<RadiusRecord> history;
  int outer_iterations = 0;
  std::string message;
};

/// Inner problem VI(G(p), M(p) ∩ B̄(0, r)) (or VI* in star mode), solved block
/// by block with each block truncated to B̄(0, r). Among converged multistart
/// candidates the one of smallest norm is kept (lexicographic tie-break).
/// TruncationEmpty if some M_i(p) misses the ball; NoConvergence propagates.
ViSolution inner_solve(const QviProblem& Q, const Vec& p, double r, const SolverConfig& cfg, bool star);

struct CertifyResult {
  double residual = 0.0;     // max(0, −(price_term + quantity_term))
  double price_term = 0.0;   // min over P of ⟨g(ȳ), p − p̄⟩
  double quantity_term = 0.0;  // min over M(p̄) ∩ B̄(0, r_cert) of ⟨ȳ*, z − ȳ⟩
  Vec p_witness, z_witness;
};

/// Joint residual of a candidate. Each term is minimized by linear
/// minimization over the set (exact for boxes, balls, half-spaces and
/// products) and by sampled points; truncation is blockwise.
/// InfeasibleCandidate when p̄ ∉ P or ȳ ∉ M(p̄) beyond feas_tol.
CertifyResult certify_qvi(const QviProblem& Q, const Vec& p_bar, const Vec& y_bar, const Vec& y_star,
                          std::size_t samples, double r_cert, std::uint64_t seed = 1, double feas_tol = 1e-7);

/// Projected price iteration with the radius-growth loop. Returns a status
/// instead of throwing for RadiusExceeded and NoConvergence.
QviSolution outer_solve(const QviProblem& Q, const QviConfig& cfg = {});

/// The stacked view T(p, y) = {(g(y), y*) : y* ∈ G(p)(y)} with K(p, y) = P × M(p).
struct StackedForm {
  SetValuedOperator T;
  std::function<ConvexSet(const Vec& p)> K;
  int dim_p = 0;
  int dim_y = 0;
};
StackedForm stacked_form(const QviProblem& Q);

struct CoercivityEscape {
  Vec y, z;
  std::vector<double> values;  // ⟨y*, y − z⟩ per selection
};

struct CoercivityReport {
  Vec p;
  double r_p = 0.0;
  double r_test = 0.0;
  std::size_t tested_shell_points = 0;
  std::vector<CoercivityEscape> escapes;
  std::vector<Vec> violations;
};

/// Samples y ∈ M(p) with r_p < |y| ≤ r_test and searches z ∈ M(p), |z| < |y|,
/// with ⟨y*, y − z⟩ ≥ −tol for every selection y* ∈ G(p)(y).
CoercivityReport check_coercivity(const QviProblem& Q, const Vec& p, double r_p, double r_test,
                                  std::size_t samples, std::uint64_t seed = 1, double tol = 1e-9);

}  // namespace qvi
