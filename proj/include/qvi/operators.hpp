#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qvi/expr.hpp"
#include "qvi/geometry.hpp"

namespace qvi {

inline constexpr double kZeroTol = 1e-12;

/// A map x ⇉ R^m represented by finitely many selections at each point
/// (extreme selections for segment- or polytope-valued maps).
class SetValuedOperator {
 public:
  using Eval = std::function<std::vector<Vec>(const Vec&)>;

  SetValuedOperator() = default;
  SetValuedOperator(int dim_in, int dim_out, Eval eval, std::string name = {});

  /// Every row is one selection; each entry is an expression in x1..x_dim.
  static SetValuedOperator from_expressions(int dim, const std::vector<std::vector<expr::Expr>>& selections,
                                            std::string name = {});
  static SetValuedOperator from_strings(int dim, const std::vector<std::vector<std::string>>& selections,
                                        std::string name = {});
  static SetValuedOperator constant(const Vec& value, std::string name = {});
  static SetValuedOperator zero(int dim_in, int dim_out);

  int dim_in() const { return dim_in_; }
  int dim_out() const { return dim_out_; }
  const std::string& name() const { return name_; }
  bool exclude_zero() const { return exclude_zero_; }
  double zero_tol() const { return zero_tol_; }

  /// Selections at x. With exclude_zero, selections of norm < zero_tol are
  /// dropped and the list may come back empty.
  std::vector<Vec> evaluate(const Vec& x) const;

  /// Same operator in "G(x) \ {0}" mode.
  SetValuedOperator excluding_zero(double zero_tol = kZeroTol) const;

  /// Analytic properties (upper sign-continuity, dual lower semicontinuity,
  /// ...) that the model declares. Carried into reports; never checked.
  std::vector<std::string> assumptions;

 private:
  int dim_in_ = 0;
  int dim_out_ = 0;
  Eval eval_;
  std::string name_;
  bool exclude_zero_ = false;
  double zero_tol_ = kZeroTol;
};

/// G(x) = ∏ G_i(x_i) where x splits into consecutive blocks of the factor
/// input dimensions. Selections are all combinations of factor selections.
class ProductOperator {
 public:
  explicit ProductOperator(std::vector<SetValuedOperator> factors);

  const std::vector<SetValuedOperator>& factors() const { return factors_; }
  const std::vector<int>& offsets() const { return offsets_; }
  int dim() const { return dim_; }

  std::vector<Vec> evaluate(const Vec& x) const;
  SetValuedOperator as_operator(std::string name = {}) const;

 private:
  std::vector<SetValuedOperator> factors_;
  std::vector<int> offsets_;
  int dim_ = 0;
};

/// Cartesian product of selection lists, capped at `cap` combinations in
/// lexicographic order of the factor indices.
std::vector<Vec> combine_selections(const std::vector<std::vector<Vec>>& blocks, std::size_t cap = 256);

enum class GradientMode { Analytic, FiniteDifference };

/// A function to be minimized (−u for a utility u) together with the convex
/// domain its sublevel sets live in.
class QuasiconvexFunctionHandle {
 public:
  using Fn = std::function<double(const Vec&)>;
  using Grad = std::function<Vec(const Vec&)>;

  QuasiconvexFunctionHandle(Fn f, ConvexSet domain, GradientMode mode, Grad grad = {});
  static QuasiconvexFunctionHandle from_expr(const expr::Expr& f, ConvexSet domain);

  double value(const Vec& x) const { return f_(x); }
  const ConvexSet& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  GradientMode mode() const { return mode_; }

  struct Gradient {
    Vec g;
    bool smooth = false;
  };
  /// Gradient with a smoothness verdict from one-sided difference agreement.
  Gradient gradient(const Vec& x) const;

  /// Analytic gradient (branch chosen by the primal value at kinks); the
  /// central-difference gradient in FiniteDifference mode.
  Vec analytic_gradient(const Vec& x) const { return mode_ == GradientMode::Analytic ? grad_(x) : difference_gradient(x); }

  /// Central-difference gradient regardless of mode.
  Vec difference_gradient(const Vec& x) const;

  bool in_domain(const Vec& x, double tol = 1e-7) const { return contains(domain_, x, tol); }

 private:
  Fn f_;
  ConvexSet domain_;
  GradientMode mode_;
  Grad grad_;
};

struct NormalConfig {
  double sep_tol = 1e-7;
  double strict_tol = 1e-9;
  double dist_tol = 1e-9;
  std::size_t cloud_size = 10000;
  /// Radius of the region sampled around w; 0 picks 4 * max(1, |w|).
  double sample_radius = 0.0;
  std::uint64_t seed = 0x9d2c5680u;
};

/// True iff f(v) < f(w) - strict_tol. DomainViolation if v or w is outside the domain.
bool strict_sublevel_membership(const QuasiconvexFunctionHandle& f, const Vec& w, const Vec& v,
                                const NormalConfig& cfg = {});

/// Sampled points of the strict sublevel set {v in domain : f(v) < f(w) - strict_tol}.
/// Deterministic in (w, cfg.seed).
std::vector<Vec> strict_sublevel_cloud(const QuasiconvexFunctionHandle& f, const Vec& w, const NormalConfig& cfg);

struct NormalSelection {
  Vec n;
  bool is_argmin = false;
  /// "gradient", "difference-gradient", "coordinate", "nearest", "mean", "projection"
  std::string source;
  std::size_t validated_on = 0;
  double rho = 0.0;  // adjusted selections only
};

/// One unit vector of N^<_f(w) validated against strict-sublevel samples.
NormalSelection normal_selection_strict(const QuasiconvexFunctionHandle& f, const Vec& w,
                                        const NormalConfig& cfg = {});

/// One unit vector of the normal cone to the adjusted sublevel set
/// S_f(w) ∩ B̄(S^<_f(w), ρ_w), validated by sampling.
NormalSelection adjusted_normal_selection(const QuasiconvexFunctionHandle& f, const Vec& w,
                                          const NormalConfig& cfg = {});

/// ρ_w = d(w, S^<_f(w)): 0 where f is smooth with a nonzero gradient, the
/// refined sampled distance otherwise, +inf when no strict-sublevel point is found.
double strict_sublevel_distance(const QuasiconvexFunctionHandle& f, const Vec& w, const NormalConfig& cfg = {});

/// Checks ⟨n, v − w⟩ ≤ sep_tol on a fresh sample (seed mixed with salt) of
/// the strict or adjusted sublevel set. Returns the worst value found.
double validate_normal(const QuasiconvexFunctionHandle& f, const Vec& w, const Vec& n, bool adjusted,
                       const NormalConfig& cfg, std::uint64_t salt);

/// x ↦ N^a_f(x) (or N^<_f(x)) as a SetValuedOperator for the solvers. At an
/// argmin the unit coordinate directions that are normal to the level set
/// S_f(x) are returned instead, plus 0 when include_zero is set.
SetValuedOperator normal_operator(const QuasiconvexFunctionHandle& f, bool adjusted, const NormalConfig& cfg,
                                  bool include_zero = false);

struct ProbeResult {
  bool violation = false;
  Vec v, w, v_star, w_star;
  double antecedent = 0.0;  // ⟨v*, w − v⟩
  double consequent = 0.0;  // ⟨w*, w − v⟩
  std::size_t pairs_checked = 0;
};

struct ProbeConfig {
  std::size_t samples = 10000;  // ordered pairs examined
  double probe_tol = 1e-12;
  std::uint64_t seed = 1;
  int grid = 5;
};

/// Looks for v, w in S with ⟨v*, w − v⟩ ≥ 0 but ⟨w*, w − v⟩ < −probe_tol.
/// Structured points (corners, center, grid) are paired first, then random pairs.
ProbeResult probe_pseudomonotone(const SetValuedOperator& G, const ConvexSet& S, const ProbeConfig& cfg = {});

/// As probe_pseudomonotone with the strict antecedent ⟨v*, w − v⟩ > probe_tol.
ProbeResult probe_quasimonotone(const SetValuedOperator& G, const ConvexSet& S, const ProbeConfig& cfg = {});

/// Built-in operators: "identity", "negation", "square" (1-D, v ↦ v²),
/// "segment-G" (the 2-D map equal to (2,2) off the axis x2 = 0 and to the
/// segment {(s,s) : 1 ≤ s ≤ 2} on it).
SetValuedOperator catalog_operator(const std::string& key, int dim);

}  // namespace qvi
