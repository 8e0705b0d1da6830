#include "qvi/qvi_engine.hpp"

#include <algorithm>
#include <optional>

#include "qvi/rng.hpp"
#include "qvi/sampling.hpp"

namespace qvi {

std::string_view mode_name(QviMode mode) {
  switch (mode) {
    case QviMode::Pseudo: return "pseudo";
    case QviMode::Star: return "star";
    case QviMode::Alternative: return "alternative";
  }
  return "?";
}

QviMode parse_mode(std::string_view text) {
  if (text == "pseudo") return QviMode::Pseudo;
  if (text == "star") return QviMode::Star;
  if (text == "alternative") return QviMode::Alternative;
  throw Error(Errc::InvalidInput, "unknown mode '" + std::string(text) + "' (pseudo, star, alternative)");
}

std::string_view status_name(QviStatus status) {
  switch (status) {
    case QviStatus::Certified: return "Certified";
    case QviStatus::RadiusExceeded: return "RadiusExceeded";
    case QviStatus::NoConvergence: return "NoConvergence";
  }
  return "?";
}

int QviProblem::dim_y() const {
  int n = 0;
  for (const QviBlock& b : blocks) n += b.dim;
  return n;
}

std::vector<int> QviProblem::block_offsets() const {
  std::vector<int> out;
  int off = 0;
  for (const QviBlock& b : blocks) {
    out.push_back(off);
    off += b.dim;
  }
  return out;
}

SetValuedOperator QviProblem::G(const Vec& p) const {
  if (blocks.size() == 1) return blocks[0].G(p);
  std::vector<SetValuedOperator> ops;
  for (const QviBlock& b : blocks) ops.push_back(b.G(p));
  return ProductOperator(std::move(ops)).as_operator(name + ".G");
}

ConvexSet QviProblem::M(const Vec& p) const {
  if (blocks.size() == 1) return blocks[0].M(p);
  std::vector<ConvexSet> sets;
  for (const QviBlock& b : blocks) sets.push_back(b.M(p));
  return ConvexSet::product(std::move(sets));
}

void QviProblem::validate(const Vec& p) const {
  require_dim(p, dim_p(), "qvi price");
  if (blocks.empty()) throw Error(Errc::InvalidInput, "qvi: no quantity blocks");
  if (!g) throw Error(Errc::InvalidInput, "qvi: missing g");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const QviBlock& b = blocks[i];
    const std::string tag = "qvi block " + std::to_string(i);
    if (b.dim <= 0 || !b.G || !b.M) throw Error(Errc::InvalidInput, tag + ": incomplete");
    const SetValuedOperator op = b.G(p);
    if (op.dim_in() != b.dim || op.dim_out() != b.dim) {
      throw Error(Errc::DimensionMismatch, tag + ": operator dimension does not match the block");
    }
    if (b.M(p).dim() != b.dim) throw Error(Errc::DimensionMismatch, tag + ": constraint set dimension");
  }
  const Vec gy = g(Vec::Zero(dim_y()));
  require_dim(gy, dim_p(), "qvi g(y)");
}

namespace {

bool smaller(const Vec& a, const Vec& b) {
  const double na = a.norm(), nb = b.norm();
  if (na != nb) return na < nb;
  return lex_less(a, b);
}

void append(Vec& out, const Vec& part) {
  Vec joined(out.size() + part.size());
  joined << out, part;
  out = std::move(joined);
}

Vec block_of(const Vec& y, int offset, int dim) { return y.segment(offset, dim); }

std::vector<Vec> sample_set(const ConvexSet& set, const Vec& anchor, double spread, std::size_t samples,
                            std::uint64_t seed) {
  std::vector<Vec> pts = structured_points(set, anchor, spread, 5);
  Rng rng(seed);
  const std::vector<Vec> extra = random_points(set, samples, rng, anchor, spread);
  pts.insert(pts.end(), extra.begin(), extra.end());
  return pts;
}

// min over the set of ⟨c, z − base⟩ with a witness.
double min_term(const ConvexSet& set, const Vec& c, const Vec& base, double spread, std::size_t samples,
                std::uint64_t seed, Vec& witness) {
  witness = base;
  if (c.norm() == 0.0) return 0.0;
  const LinearMin lm = min_linear(set, c, base);
  double best = lm.value - c.dot(base);
  if (lm.argmin.size()) witness = lm.argmin;
  if (!std::isfinite(best)) return best;
  for (const Vec& z : sample_set(set, base, spread, samples, seed)) {
    const double v = c.dot(z - base);
    if (v < best) {
      best = v;
      witness = z;
    }
  }
  return best;
}

struct OuterState {
  Vec p, y, y_star, gy;
  double R = kInf;
};

}  // namespace

ViSolution inner_solve(const QviProblem& Q, const Vec& p, double r, const SolverConfig& cfg, bool star) {
  if (!(r > 0.0)) throw Error(Errc::NonPositiveRadius, "inner_solve: radius must be positive");
  ViSolution out;
  out.x = Vec(0);
  out.x_star = Vec(0);
  out.star = star;
  out.converged = true;
  double sq = 0.0;
  bool failed = false;
  for (std::size_t i = 0; i < Q.blocks.size(); ++i) {
    const QviBlock& b = Q.blocks[i];
    const ConvexSet Mi = b.M(p);
    const Vec anchor = project(Mi, Vec::Zero(b.dim), cfg.proj);
    if (anchor.norm() > r * (1 + 1e-12)) {
      throw Error(Errc::TruncationEmpty, "inner_solve: block " + std::to_string(i) +
                                             " constraint set misses the ball of radius " + std::to_string(r));
    }
    const ViProblem vp{b.G(p), intersect_ball(Mi, r)};
    const std::vector<ViSolution> all = solve_vi_all(vp, cfg, star);
    const ViSolution* pick = nullptr;
    for (const ViSolution& s : all) {
      if (s.converged && (!pick || smaller(s.x, pick->x))) pick = &s;
    }
    ViSolution chosen;
    if (pick) {
      chosen = *pick;
    } else if (star) {
      try {
        chosen = solve_vi_star(vp, cfg);
      } catch (const NoConvergence& e) {
        chosen = e.best();
        failed = true;
      }
    } else {
      chosen = all.front();
      for (const ViSolution& s : all) {
        if (s.residual < chosen.residual) chosen = s;
      }
      failed = true;
    }
    append(out.x, chosen.x);
    append(out.x_star, chosen.x_star.size() == b.dim ? chosen.x_star : Vec(Vec::Zero(b.dim)));
    sq += chosen.residual * chosen.residual;
    out.iterations += chosen.iterations;
  }
  out.residual = std::sqrt(sq);
  out.converged = !failed;
  if (failed) throw NoConvergence("inner_solve: a block did not converge at radius " + std::to_string(r), out);
  return out;
}

CertifyResult certify_qvi(const QviProblem& Q, const Vec& p_bar, const Vec& y_bar, const Vec& y_star,
                          std::size_t samples, double r_cert, std::uint64_t seed, double feas_tol) {
  require_dim(p_bar, Q.dim_p(), "certify_qvi p");
  require_dim(y_bar, Q.dim_y(), "certify_qvi y");
  require_dim(y_star, Q.dim_y(), "certify_qvi y*");
  if (!contains(Q.P, p_bar, feas_tol)) {
    throw Error(Errc::InfeasibleCandidate, "certify_qvi: price is outside P");
  }
  const std::vector<int> offs = Q.block_offsets();
  for (std::size_t i = 0; i < Q.blocks.size(); ++i) {
    const Vec yi = block_of(y_bar, offs[i], Q.blocks[i].dim);
    if (!contains(Q.blocks[i].M(p_bar), yi, feas_tol)) {
      throw Error(Errc::InfeasibleCandidate, "certify_qvi: block " + std::to_string(i) + " is outside M(p)");
    }
  }
  CertifyResult res;
  const Vec gy = Q.g(y_bar);
  const Bounds pb = bounding_box(Q.P);
  const double p_spread = pb.bounded() ? (pb.upper - pb.lower).norm() + 1.0 : 10.0 * (1.0 + p_bar.norm());
  res.price_term = min_term(Q.P, gy, p_bar, p_spread, samples, mix_seed(seed, 0), res.p_witness);
  res.z_witness = y_bar;
  res.quantity_term = 0.0;
  for (std::size_t i = 0; i < Q.blocks.size(); ++i) {
    const int d = Q.blocks[i].dim;
    const ConvexSet Ki = intersect_ball(Q.blocks[i].M(p_bar), r_cert);
    Vec w;
    res.quantity_term += min_term(Ki, block_of(y_star, offs[i], d), block_of(y_bar, offs[i], d), r_cert, samples,
                                  mix_seed(seed, i + 1), w);
    res.z_witness.segment(offs[i], d) = w;
  }
  res.residual = std::max(0.0, -(res.price_term + res.quantity_term));
  return res;
}

StackedForm stacked_form(const QviProblem& Q) {
  StackedForm out;
  out.dim_p = Q.dim_p();
  out.dim_y = Q.dim_y();
  const int np = out.dim_p, ny = out.dim_y;
  const QviProblem copy = Q;
  out.T = SetValuedOperator(
      np + ny, np + ny,
      [copy, np, ny](const Vec& x) {
        const Vec p = x.head(np);
        const Vec y = x.tail(ny);
        const Vec gy = copy.g(y);
        std::vector<Vec> out;
        for (const Vec& s : copy.G(p).evaluate(y)) {
          Vec t(np + ny);
          t << gy, s;
          out.push_back(std::move(t));
        }
        return out;
      },
      Q.name + ".stacked");
  out.K = [copy](const Vec& p) {
    std::vector<ConvexSet> f{copy.P};
    for (const QviBlock& b : copy.blocks) f.push_back(b.M(p));
    return ConvexSet::product(std::move(f));
  };
  return out;
}

namespace {

class OuterRunner {
 public:
  OuterRunner(const QviProblem& Q, const QviConfig& cfg, double r) : Q_(Q), cfg_(cfg), r_(r) {}

  std::optional<OuterState> eval(const Vec& p) const {
    OuterState st;
    st.p = p;
    try {
      const ViSolution s = inner_solve(Q_, p, r_, cfg_.inner, Q_.mode == QviMode::Star);
      st.y = s.x;
      st.y_star = s.x_star;
    } catch (const NoConvergence&) {
      return std::nullopt;
    } catch (const Error& e) {
      if (e.code() == Errc::TruncationEmpty || e.code() == Errc::EmptySetSuspected) return std::nullopt;
      throw;
    }
    st.gy = Q_.g(st.y);
    st.R = (p - project(Q_.P, p - st.gy)).norm();
    return st;
  }

  // Projected price iteration with a backtracked step.
  std::optional<OuterState> price_iteration(const Vec& p0, int& iters) const {
    std::optional<OuterState> cur = eval(p0);
    iters = 0;
    if (!cur) return std::nullopt;
    OuterState best = *cur;
    double alpha = 1.0;
    int stall = 0;
    const double target = 0.1 * cfg_.tol;
    while (iters < cfg_.outer_max_iter && best.R > target && stall < cfg_.stall_limit) {
      ++iters;
      const Vec p_new = project(Q_.P, cur->p - alpha * cur->gy);
      std::optional<OuterState> next = eval(p_new);
      if (next && next->R < cur->R) {
        cur = next;
        alpha = std::min(2.0 * alpha, 1e6);
      } else if (alpha > 1e-6) {
        alpha *= 0.5;
      } else {
        // no decrease at any step size: take the short step and start over
        if (next) cur = next;
        alpha = 1.0;
      }
      if (cur->R < best.R) {
        best = *cur;
        stall = 0;
      } else {
        ++stall;
      }
    }
    if (best.R > target) polish(best, iters);
    return best;
  }

  // Extragradient on the price map p ↦ g(y(p)) from the best iterate.
  void polish(OuterState& best, int& iters) const {
    const SetValuedOperator gamma(Q_.dim_p(), Q_.dim_p(), [this](const Vec& p) {
      std::vector<Vec> out;
      if (std::optional<OuterState> st = eval(p)) out.push_back(st->gy);
      return out;
    });
    SolverConfig sc = cfg_.inner;
    sc.tol = 0.1 * cfg_.tol;
    const ViSolution run = extragradient_run(ViProblem{gamma, Q_.P}, best.p, 0, false, std::min(cfg_.outer_max_iter, 5), sc);
    iters += run.iterations;
    if (run.residual < best.R) {
      if (std::optional<OuterState> st = eval(run.x); st && st->R < best.R) best = *st;
    }
  }

  // Sequential VI iteration on the stacked problem over P × M_r(p_k).
  std::optional<OuterState> alternative_iteration(const Vec& p0, int& iters) const {
    const StackedForm S = stacked_form(Q_);
    const int np = Q_.dim_p();
    Vec p = p0;
    std::optional<OuterState> best;
    iters = 0;
    int stall = 0;
    while (iters < cfg_.outer_max_iter && stall < cfg_.stall_limit) {
      ++iters;
      std::vector<ConvexSet> f{Q_.P};
      for (const QviBlock& b : Q_.blocks) f.push_back(intersect_ball(b.M(p), r_));
      const ViProblem vp{S.T, ConvexSet::product(std::move(f))};
      ViSolution s;
      try {
        s = solve_vi(vp, cfg_.inner);
      } catch (const NoConvergence& e) {
        s = e.best();
      } catch (const Error& e) {
        if (e.code() == Errc::EmptySetSuspected) return best;
        throw;
      }
      OuterState st;
      st.p = s.x.head(np);
      st.y = s.x.tail(Q_.dim_y());
      st.y_star = s.x_star.tail(Q_.dim_y());
      st.gy = Q_.g(st.y);
      st.R = std::max((st.p - p).norm(), s.residual);
      if (!best || st.R < best->R) {
        best = st;
        stall = 0;
      } else {
        ++stall;
      }
      p = st.p;
      if (st.R <= 0.1 * cfg_.tol) break;
    }
    return best;
  }

 private:
  const QviProblem& Q_;
  const QviConfig& cfg_;
  double r_;
};

}  // namespace

QviSolution outer_solve(const QviProblem& Q, const QviConfig& cfg) {
  const Vec p0 = project(Q.P, Vec::Zero(Q.dim_p()));
  Q.validate(p0);
  const Bounds pb = bounding_box(Q.P);
  if (!pb.bounded()) throw Error(Errc::NotCompact, "outer_solve: P must be bounded");

  QviSolution out;
  out.mode = Q.mode;
  out.assumption_ledger = Q.assumptions;
  for (const QviBlock& b : Q.blocks) {
    for (const std::string& a : b.G(p0).assumptions) out.assumption_ledger.push_back(a);
  }
  const double anchor = project(Q.M(p0), Vec::Zero(Q.dim_y()), cfg.inner.proj).norm();
  out.r_init = cfg.r_init > 0 ? cfg.r_init : 2.0 * (1.0 + std::max(anchor, Q.r_p));
  out.r_max = cfg.r_max > 0 ? cfg.r_max : 1024.0 * out.r_init;
  if (!(cfg.growth > 1.0)) throw Error(Errc::InvalidInput, "outer_solve: growth factor must exceed 1");

  std::vector<Vec> starts{p0};
  for (int s = 1; s < std::max(1, cfg.outer_starts); ++s) {
    Rng rng(mix_seed(cfg.seed, 1000 + s));
    Vec u(Q.dim_p());
    for (int j = 0; j < Q.dim_p(); ++j) u[j] = rng.uniform(pb.lower[j], pb.upper[j]);
    starts.push_back(project(Q.P, u));
  }

  double r = out.r_init;
  std::optional<Vec> warm;  // best price of the previous radius
  while (true) {
    const OuterRunner runner(Q, cfg, r);
    RadiusRecord rec;
    rec.r = r;
    std::optional<OuterState> best;
    double best_cert = kInf;
    bool found = false;
    std::vector<Vec> tries = starts;
    if (warm) tries.insert(tries.begin(), *warm);
    for (const Vec& start : tries) {
      int iters = 0;
      std::optional<OuterState> st = Q.mode == QviMode::Alternative ? runner.alternative_iteration(start, iters)
                                                                     : runner.price_iteration(start, iters);
      rec.outer_iterations += iters;
      out.outer_iterations += iters;
      if (!st) continue;
      double cert = kInf;
      try {
        cert = certify_qvi(Q, st->p, st->y, st->y_star, cfg.cert_samples, 2.0 * r, cfg.seed).residual;
      } catch (const Error& e) {
        if (e.code() != Errc::InfeasibleCandidate) throw;
      }
      const bool ok = st->R <= 0.1 * cfg.tol && cert <= cfg.tol;
      if (!best || ok || (cert < best_cert)) {
        best = st;
        best_cert = cert;
      }
      if (ok) {
        found = true;
        break;
      }
    }
    if (best) {
      rec.converged = found;
      rec.residual_joint = best_cert;
      rec.outer_residual = best->R;
      rec.y_norm = best->y.norm();
      rec.p = best->p;
      rec.y = best->y;
      out.p_bar = best->p;
      out.y_bar = best->y;
      out.y_star = best->y_star;
      out.residual_joint = best_cert;
      warm = best->p;
    } else {
      rec.residual_joint = kInf;
      rec.outer_residual = kInf;
    }
    out.history.push_back(rec);
    out.r_final = r;
    if (found && best->y.norm() < r - cfg.boundary_tol) {
      out.status = QviStatus::Certified;
      out.message = "certified at truncation radius " + std::to_string(r);
      return out;
    }
    if (r * cfg.growth > out.r_max * (1 + 1e-12)) {
      out.status = QviStatus::RadiusExceeded;
      out.message = "no solution found up to truncation radius r_max = " + std::to_string(out.r_max);
      return out;
    }
    r *= cfg.growth;
  }
}

CoercivityReport check_coercivity(const QviProblem& Q, const Vec& p, double r_p, double r_test, std::size_t samples,
                                  std::uint64_t seed, double tol) {
  if (!(r_test > r_p)) throw Error(Errc::InvalidInput, "check_coercivity: r_test must exceed r_p");
  CoercivityReport rep;
  rep.p = p;
  rep.r_p = r_p;
  rep.r_test = r_test;
  const ConvexSet M = Q.M(p);
  const SetValuedOperator G = Q.G(p);
  const int n = M.dim();
  Vec origin_proj;
  try {
    origin_proj = project(M, Vec::Zero(n));
  } catch (const Error& e) {
    if (e.code() == Errc::EmptySetSuspected) throw Error(Errc::EmptyConstraintSet, "check_coercivity: M(p) is empty");
    throw;
  }
  if (origin_proj.norm() > r_test) return rep;
  const ConvexSet Mt = intersect_ball(M, r_test);

  std::vector<Vec> shell;
  for (const Vec& y : structured_points(Mt, Vec::Zero(n), r_test, 7)) {
    if (y.norm() > r_p && shell.size() < samples) shell.push_back(y);
  }
  Rng rng(seed);
  for (std::size_t attempt = 0; shell.size() < samples && attempt < 20 * samples; ++attempt) {
    const double rho = rng.uniform(r_p, r_test);
    const Vec y = project(Mt, rho * rng.on_unit_sphere(n));
    if (y.norm() > r_p) shell.push_back(y);
  }

  static constexpr double kRadial[] = {0.9, 0.5, 0.1, 0.0};
  for (const Vec& y : shell) {
    ++rep.tested_shell_points;
    const std::vector<Vec> sels = G.evaluate(y);
    std::vector<Vec> cands{origin_proj};
    for (double t : kRadial) cands.push_back(project(M, t * y));
    Rng local(point_seed(seed, y));
    for (int k = 0; k < 16; ++k) cands.push_back(project(M, y.norm() * local.in_unit_ball(n)));
    bool escaped = false;
    for (const Vec& z : cands) {
      if (!(z.norm() < y.norm() - 1e-12)) continue;
      std::vector<double> vals;
      bool ok = true;
      for (const Vec& s : sels) {
        vals.push_back(s.dot(y - z));
        ok = ok && vals.back() >= -tol;
      }
      if (ok) {
        rep.escapes.push_back({y, z, std::move(vals)});
        escaped = true;
        break;
      }
    }
    if (!escaped) rep.violations.push_back(y);
  }
  return rep;
}

}  // namespace qvi
