#include "qvi/vi_solver.hpp"

#include <algorithm>

#include "qvi/rng.hpp"
#include "qvi/sampling.hpp"

namespace qvi {
namespace {

void check_problem(const ViProblem& P) {
  const int n = P.K.dim();
  if (P.F.dim_in() != n || P.F.dim_out() != n) {
    throw Error(Errc::DimensionMismatch, "vi: operator is " + std::to_string(P.F.dim_in()) + " -> " +
                                             std::to_string(P.F.dim_out()) + " but K has dimension " +
                                             std::to_string(n));
  }
}

std::vector<Vec> selections(const ViProblem& P, const Vec& x, bool star, double zero_tol) {
  std::vector<Vec> all = P.F.evaluate(x);
  if (!star) return all;
  std::vector<Vec> kept;
  for (Vec& s : all) {
    if (s.norm() >= zero_tol) kept.push_back(std::move(s));
  }
  return kept;
}

// Residual at a point known to be feasible, without the feasibility check.
double residual_at(const ViProblem& P, const Vec& x, bool star, double zero_tol, const ProjectionOptions& proj,
                   Vec* certificate) {
  double best = kInf;
  for (const Vec& s : selections(P, x, star, zero_tol)) {
    const double r = (x - project(P.K, x - s, proj)).norm();
    if (r < best) {
      best = r;
      if (certificate) *certificate = s;
    }
  }
  return best;
}

// Remembers the last few evaluations of F; extragradient revisits points when
// it checks residuals and backtracks.
class Evaluator {
 public:
  Evaluator(const ViProblem& P, bool star, double zero_tol) : P_(P), star_(star), zero_tol_(zero_tol) {}

  const std::vector<Vec>& at(const Vec& x) {
    for (const auto& [pt, sel] : memo_) {
      if (pt.size() == x.size() && pt == x) return sel;
    }
    if (memo_.size() == 4) memo_.erase(memo_.begin());
    memo_.emplace_back(x, selections(P_, x, star_, zero_tol_));
    return memo_.back().second;
  }

  bool branch(const Vec& x, int b, Vec& out) {
    const std::vector<Vec>& s = at(x);
    if (s.empty()) return false;
    out = s[std::min<std::size_t>(static_cast<std::size_t>(b), s.size() - 1)];
    return true;
  }

  double residual(const Vec& x, const ProjectionOptions& proj, Vec* certificate) {
    double best = kInf;
    for (const Vec& s : at(x)) {
      const double r = (x - project(P_.K, x - s, proj)).norm();
      if (r < best) {
        best = r;
        if (certificate) *certificate = s;
      }
    }
    return best;
  }

 private:
  const ViProblem& P_;
  bool star_;
  double zero_tol_;
  std::vector<std::pair<Vec, std::vector<Vec>>> memo_;
};

}  // namespace

ViSolution extragradient_run(const ViProblem& P, const Vec& x0, int branch, bool star, int max_iter,
                             const SolverConfig& cfg) {
  ViSolution out;
  out.star = star;
  out.branch = branch;
  Evaluator F(P, star, cfg.zero_tol);
  Vec x = x0;
  Vec best_x = x0;
  Vec cert;
  double best_r = F.residual(x, cfg.proj, &cert);
  Vec best_cert = cert;
  auto record = [&](const Vec& at, double r, const Vec& c) {
    if (r < best_r) {
      best_r = r;
      best_x = at;
      best_cert = c;
    }
  };
  double gamma = cfg.step_init;
  Vec fx, fy;
  int it = 0;
  for (; it < max_iter && best_r > cfg.tol; ++it) {
    if (!F.branch(x, branch, fx)) break;
    Vec y;
    double gap = 0.0;
    bool accepted = false;
    double ratio = 0.0;
    while (true) {
      y = project(P.K, x - gamma * fx, cfg.proj);
      gap = (x - y).norm();
      if (gap == 0.0) break;
      if (!F.branch(y, branch, fy)) break;
      ratio = gamma * (fx - fy).norm() / gap;
      if (ratio <= cfg.nu) {
        accepted = true;
        break;
      }
      // the trial point may already solve the problem (typically a corner
      // across a discontinuity of F)
      const double ry = F.residual(y, cfg.proj, &cert);
      record(y, ry, cert);
      if (best_r <= cfg.tol) break;
      if (gamma * 0.5 < cfg.step_min) {
        accepted = true;  // discontinuous selection: take the small step anyway
        break;
      }
      gamma *= 0.5;
    }
    if (best_r <= cfg.tol) break;
    // |x − P(x − F)| ≤ |x − P(x − γF)| / min(γ, 1) for the branch selection.
    const bool small = gap / std::min(gamma, 1.0) <= cfg.tol;
    if (small || (it % 25) == 24) {
      record(x, F.residual(x, cfg.proj, &cert), cert);
      if (best_r <= cfg.tol) break;
      if (gap == 0.0) break;  // branch is stuck at a point the other selections do not certify
    }
    if (!accepted) break;
    x = project(P.K, x - gamma * fy, cfg.proj);
    if (ratio < 0.5 * cfg.nu) gamma = std::min(gamma * 1.5, cfg.step_max);
  }
  record(x, F.residual(x, cfg.proj, &cert), cert);
  out.x = best_x;
  out.x_star = best_cert.size() ? best_cert : Vec::Zero(x.size());
  out.residual = best_r;
  out.iterations = it;
  out.converged = best_r <= cfg.tol;
  return out;
}

namespace {

std::vector<Vec> start_points(const ViProblem& P, const SolverConfig& cfg) {
  const Bounds box = bounding_box(P.K);
  if (!box.bounded()) throw Error(Errc::NotCompact, "vi: K must be bounded (" + P.K.describe() + ")");
  const int n = P.K.dim();
  std::vector<Vec> starts;
  starts.push_back(project(P.K, Vec::Zero(n), cfg.proj));
  for (int s = 1; s < std::max(cfg.n_starts, 1); ++s) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    Vec u(n);
    for (int j = 0; j < n; ++j) u[j] = rng.uniform(box.lower[j], box.upper[j]);
    starts.push_back(project(P.K, u, cfg.proj));
  }
  return starts;
}

int branch_count(const ViProblem& P, const Vec& x, bool star, double zero_tol) {
  return std::max<int>(1, static_cast<int>(selections(P, x, star, zero_tol).size()));
}

std::vector<ViSolution> run_from(const ViProblem& P, const std::vector<Vec>& starts, const SolverConfig& cfg,
                                 bool star, int max_iter) {
  std::vector<ViSolution> out;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const int branches = branch_count(P, starts[s], star, cfg.zero_tol);
    for (int b = 0; b < branches; ++b) {
      ViSolution sol = extragradient_run(P, starts[s], b, star, max_iter, cfg);
      sol.start = static_cast<int>(s);
      out.push_back(std::move(sol));
    }
  }
  return out;
}

const ViSolution* best_of(const std::vector<ViSolution>& sols) {
  const ViSolution* best = nullptr;
  for (const ViSolution& s : sols) {
    if (!best || s.residual < best->residual) best = &s;
  }
  return best;
}

}  // namespace

double natural_residual(const ViProblem& P, const Vec& x, double step, bool star, double zero_tol, Vec* certificate,
                        double feas_tol, const ProjectionOptions& proj) {
  check_problem(P);
  require_dim(x, P.K.dim(), "natural_residual");
  if (!(step > 0.0)) throw Error(Errc::InvalidInput, "natural_residual: step must be positive");
  if (!contains(P.K, x, feas_tol, proj)) {
    throw Error(Errc::InfeasiblePoint, "natural_residual: point is outside K (distance " +
                                           std::to_string(distance(P.K, x, proj)) + ")");
  }
  double best = kInf;
  for (const Vec& s : selections(P, x, star, zero_tol)) {
    const double r = (x - project(P.K, x - step * s, proj)).norm();
    if (r < best) {
      best = r;
      if (certificate) *certificate = s;
    }
  }
  return best;
}

std::vector<ViSolution> solve_vi_all(const ViProblem& P, const SolverConfig& cfg, bool star) {
  check_problem(P);
  return run_from(P, start_points(P, cfg), cfg, star, cfg.max_iter);
}

ViSolution solve_vi(const ViProblem& P, const SolverConfig& cfg) {
  const std::vector<ViSolution> all = solve_vi_all(P, cfg, false);
  const ViSolution& best = *best_of(all);
  if (!best.converged) {
    throw NoConvergence("solve_vi: best residual " + std::to_string(best.residual) + " after " +
                            std::to_string(cfg.max_iter) + " iterations per start",
                        best);
  }
  return best;
}

ViSolution solve_vi_star(const ViProblem& P, const SolverConfig& cfg) {
  std::vector<ViSolution> all = solve_vi_all(P, cfg, true);
  const ViSolution* best = best_of(all);
  if (best->converged) return *best;

  // Before the fallback: when plain solutions exist but none is certified by
  // a nonzero selection the star problem is reported as trivial-only.
  std::vector<ViSolution> plain = run_from(P, start_points(P, cfg), cfg, false, std::max(1, cfg.max_iter / 10));
  bool plain_converged = false;
  for (const ViSolution& s : plain) plain_converged = plain_converged || s.converged;
  if (plain_converged) {
    bool any_nonzero = false;
    for (const ViSolution& s : plain) {
      if (!s.converged) continue;
      const double r = residual_at(P, s.x, true, cfg.zero_tol, cfg.proj, nullptr);
      any_nonzero = any_nonzero || r <= cfg.tol;
    }
    if (!any_nonzero) {
      throw Error(Errc::OnlyTrivialCertificates,
                  "solve_vi_star: every converged candidate is certified only by a zero selection");
    }
  }

  // Grid restarts with a shorter budget, then polishing from the best point.
  const Bounds box = bounding_box(P.K);
  const Vec anchor = 0.5 * (box.lower + box.upper);
  const double spread = 0.5 * (box.upper - box.lower).norm() + 1.0;
  std::vector<Vec> grid = structured_points(P.K, anchor, spread, 7, cfg.proj);
  std::vector<ViSolution> restarts = run_from(P, grid, cfg, true, std::max(1, cfg.max_iter / 50));
  for (ViSolution& s : restarts) s.start += static_cast<int>(all.size());
  const ViSolution* grid_best = best_of(restarts);
  ViSolution cand = grid_best && grid_best->residual < best->residual ? *grid_best : *best;
  if (!cand.converged) {
    SolverConfig polish = cfg;
    polish.step_init = 1e-3;
    ViSolution p = extragradient_run(P, cand.x, cand.branch, true, cfg.max_iter, polish);
    p.start = cand.start;
    if (p.residual < cand.residual) cand = p;
  }
  if (!cand.converged) {
    throw NoConvergence("solve_vi_star: best residual " + std::to_string(cand.residual) + " after multistart, "
                            "grid restarts and polishing",
                        cand);
  }
  return cand;
}

MintyResult check_minty(const ViProblem& P, const Vec& x, std::size_t samples, std::uint64_t seed, double tol) {
  check_problem(P);
  MintyResult res;
  const Vec anchor = project(P.K, Vec::Zero(P.K.dim()));
  const double spread = 10.0 * std::max(1.0, anchor.norm());
  std::vector<Vec> pts = structured_points(P.K, anchor, spread, 5);
  Rng rng(seed);
  const Bounds box = clipped_box(P.K, anchor, spread);
  while (pts.size() < samples) {
    Vec u(P.K.dim());
    for (int j = 0; j < P.K.dim(); ++j) u[j] = rng.uniform(box.lower[j], box.upper[j]);
    pts.push_back(project(P.K, u));
  }
  if (pts.size() > samples) pts.resize(samples);
  for (const Vec& v : pts) {
    ++res.checked;
    for (const Vec& vs : P.F.evaluate(v)) {
      const double val = vs.dot(v - x);
      if (val < -tol) {
        res.pass = false;
        res.v = v;
        res.v_star = vs;
        res.value = val;
        return res;
      }
    }
  }
  return res;
}

double stampacchia_worst(const ViProblem& P, const Vec& x, const Vec& x_star, std::size_t samples,
                         std::uint64_t seed) {
  check_problem(P);
  const Vec anchor = project(P.K, Vec::Zero(P.K.dim()));
  const double spread = 10.0 * std::max(1.0, anchor.norm());
  const Bounds box = clipped_box(P.K, anchor, spread);
  Rng rng(seed);
  double worst = kInf;
  for (std::size_t i = 0; i < samples; ++i) {
    Vec u(P.K.dim());
    for (int j = 0; j < P.K.dim(); ++j) u[j] = rng.uniform(box.lower[j], box.upper[j]);
    worst = std::min(worst, x_star.dot(project(P.K, u) - x));
  }
  const LinearMin lm = min_linear(P.K, x_star, x);
  return std::min(worst, lm.value - x_star.dot(x));
}

}  // namespace qvi
