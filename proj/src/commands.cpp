#include "qvi/commands.hpp"

#include <chrono>
#include <cmath>

#include "json.hpp"
#include "qvi/report.hpp"
#include "qvi/rng.hpp"

namespace qvi {

ProbeKind parse_probe_kind(std::string_view text) {
  if (text == "pseudo") return ProbeKind::Pseudo;
  if (text == "quasi") return ProbeKind::Quasi;
  if (text == "coercivity") return ProbeKind::Coercivity;
  throw Error(Errc::InvalidInput, "unknown probe kind '" + std::string(text) + "' (pseudo, quasi, coercivity)");
}

Vec parse_vector_literal(const std::string& text, const std::string& what) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(Errc::InvalidInput, what + ": expected a JSON array, got '" + text + "'");
  }
  if (!j.is_array() || j.empty()) throw Error(Errc::InvalidInput, what + ": expected a non-empty JSON array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (j[i].is_number()) {
      v[k] = j[i].get<double>();
    } else if (j[i].is_string()) {
      try {
        v[k] = expr::Expr::parse(j[i].get<std::string>(), {0, 0}).eval(Vec());
      } catch (const Error& e) {
        throw Error(Errc::InvalidInput, what + "[" + std::to_string(i) + "]: " + e.what());
      }
    } else {
      throw Error(Errc::InvalidInput, what + "[" + std::to_string(i) + "]: expected a number or an expression");
    }
  }
  return v;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Session {
  Problem problem;
  SolverOverrides cfg;
  Report report;
  Clock::time_point start = Clock::now();
};

Session open(const CommandOptions& opts, const char* command) {
  Session s;
  s.problem = load_problem(opts.problem);
  s.cfg = merge(s.problem.config, opts.overrides);
  Report& r = s.report;
  r.text("format", "qvisolve-report 1");
  r.text("command", command);
  r.text("problem", s.problem.name);
  r.text("kind", std::string(kind_name(s.problem.kind)));
  r.text("origin", s.problem.origin);
  r.text("input_sha256", sha256_hex(s.problem.source));
  return s;
}

CommandResult close(Session& s, const CommandOptions& opts, bool pass, const std::string& status) {
  s.report.text("status", status);
  const int code = pass ? 0 : 2;
  s.report.integer("exit_code", code);
  if (opts.timing) {
    s.report.number("timing.seconds", std::chrono::duration<double>(Clock::now() - s.start).count());
  }
  return {code, s.report.str()};
}

void write_qvi_config(Report& r, const QviConfig& c) {
  r.integer("seed", static_cast<long long>(c.seed));
  r.number("config.tol", c.tol);
  r.number("config.inner_tol", c.inner.tol);
  r.integer("config.max_iter", c.inner.max_iter);
  r.integer("config.outer_max_iter", c.outer_max_iter);
  r.integer("config.outer_starts", c.outer_starts);
  r.integer("config.n_starts", c.inner.n_starts);
  r.number("config.boundary_tol", c.boundary_tol);
}

void write_solution(Report& r, const QviSolution& sol, const QviConfig& c) {
  r.text("engine.status", std::string(status_name(sol.status)));
  r.text("engine.message", sol.message);
  r.text("mode", std::string(mode_name(sol.mode)));
  r.number("r_init", sol.r_init);
  r.number("r_max", sol.r_max);
  r.number("r_final", sol.r_final);
  r.integer("outer_iterations", sol.outer_iterations);
  if (sol.p_bar.size() > 0) {
    r.vector("p_bar", sol.p_bar);
    r.vector("y_bar", sol.y_bar);
    r.vector("y_star", sol.y_star);
  }
  r.number("residual_joint", sol.residual_joint);
  r.number("r_cert", 2.0 * sol.r_final);
  r.integer("cert_samples", static_cast<long long>(c.cert_samples));
  r.integer("cert_seed", static_cast<long long>(c.seed));
  r.integer("history.count", static_cast<long long>(sol.history.size()));
  for (std::size_t i = 0; i < sol.history.size(); ++i) {
    const RadiusRecord& h = sol.history[i];
    const std::string k = "history." + std::to_string(i) + ".";
    r.number(k + "r", h.r);
    r.flag(k + "converged", h.converged);
    r.number(k + "residual_joint", h.residual_joint);
    r.number(k + "outer_residual", h.outer_residual);
    r.number(k + "y_norm", h.y_norm);
    r.integer(k + "outer_iterations", h.outer_iterations);
    if (h.p.size() > 0) {
      r.vector(k + "p", h.p);
      r.vector(k + "y", h.y);
    }
  }
  r.list("assumptions", sol.assumption_ledger);
}

QviProblem with_mode(QviProblem Q, const SolverOverrides& cfg) {
  if (cfg.mode) Q.mode = *cfg.mode;
  return Q;
}

void reject_mode(const SolverOverrides& cfg, const Problem& P) {
  if (cfg.mode) {
    throw Error(Errc::InvalidInput, "--mode applies to qvi and economy problems, not " + std::string(kind_name(P.kind)));
  }
}

std::size_t samples_or(const SolverOverrides& cfg, std::size_t fallback) { return cfg.samples ? *cfg.samples : fallback; }
std::uint64_t seed_of(const SolverOverrides& cfg) { return cfg.seed ? *cfg.seed : 42; }

void write_walras(Report& r, const std::string& prefix, const WalrasVerdict& v) {
  r.flag(prefix + "equilibrium", v.equilibrium);
  if (!v.equilibrium) {
    r.text(prefix + "failed_condition", v.failed_condition);
    r.integer(prefix + "agent", v.agent);
    if (v.witness.size() > 0) r.vector(prefix + "witness", v.witness);
  }
  r.number(prefix + "clearing_error", v.clearing_error);
  r.number(prefix + "price_norm", v.price_norm);
  r.vector(prefix + "improvement", Eigen::Map<const Vec>(v.improvement.data(), static_cast<Eigen::Index>(v.improvement.size())));
  r.vector(prefix + "budget_excess",
           Eigen::Map<const Vec>(v.budget_excess.data(), static_cast<Eigen::Index>(v.budget_excess.size())));
}

void write_gnep_verdict(Report& r, const GnepVerdict& v) {
  r.flag("verdict.equilibrium", v.equilibrium);
  if (!v.equilibrium) {
    r.integer("verdict.player", v.player);
    r.vector("verdict.witness", v.witness);
  }
  r.vector("verdict.improvement",
           Eigen::Map<const Vec>(v.improvement.data(), static_cast<Eigen::Index>(v.improvement.size())));
}

const Vec& need(const std::optional<Vec>& v, const char* flag) {
  if (!v) throw Error(Errc::InvalidInput, std::string("verify: ") + flag + " is required for this problem kind");
  return *v;
}

void need_dim(const Vec& v, int n, const char* flag) {
  if (v.size() != n) {
    throw Error(Errc::DimensionMismatch, std::string("verify: ") + flag + " has " + std::to_string(v.size()) +
                                             " entries, expected " + std::to_string(n));
  }
}

// Points probed are limited to a ball when the set is unbounded.
ConvexSet probe_region(const ConvexSet& S, double r_test) {
  return bounding_box(S).bounded() ? S : intersect_ball(S, r_test);
}

void write_probe(Report& r, const ProbeResult& res) {
  r.flag("probe.violation", res.violation);
  r.integer("probe.pairs_checked", static_cast<long long>(res.pairs_checked));
  if (res.violation) {
    r.vector("probe.v", res.v);
    r.vector("probe.w", res.w);
    r.vector("probe.v_star", res.v_star);
    r.vector("probe.w_star", res.w_star);
    r.number("probe.antecedent", res.antecedent);
    r.number("probe.consequent", res.consequent);
  }
}

}  // namespace

CommandResult cmd_solve(const CommandOptions& opts) {
  Session s = open(opts, "solve");
  Report& r = s.report;
  const Problem& P = s.problem;
  switch (P.kind) {
    case ProblemKind::Qvi:
    case ProblemKind::Economy: {
      const QviConfig c = make_qvi_config(s.cfg);
      write_qvi_config(r, c);
      const QviProblem Q = with_mode(P.kind == ProblemKind::Qvi ? *P.qvi : compile_to_qvi(*P.economy), s.cfg);
      const QviSolution sol = outer_solve(Q, c);
      write_solution(r, sol, c);
      bool pass = sol.status == QviStatus::Certified;
      if (P.kind == ProblemKind::Economy && sol.y_bar.size() > 0) {
        const std::vector<Vec> parts = P.economy->split(sol.y_bar);
        for (std::size_t i = 0; i < parts.size(); ++i) r.vector("agent." + std::to_string(i) + ".y", parts[i]);
        // the star-mode solve is looser than a standalone verification
        WalrasOptions w;
        w.clearing_tol = 1e-4;
        w.utility_tol = 1e-3;
        w.budget_tol = 1e-6;
        w.samples = samples_or(s.cfg, w.samples);
        w.seed = c.seed;
        try {
          const WalrasVerdict v = verify_walrasian(*P.economy, sol.p_bar, sol.y_bar, w);
          write_walras(r, "walras.", v);
          pass = pass && v.equilibrium;
        } catch (const Error& e) {
          r.text("walras.error", e.what());
          pass = false;
        }
      }
      return close(s, opts, pass, pass ? "solved" : std::string(status_name(sol.status)));
    }
    case ProblemKind::Gnep: {
      reject_mode(s.cfg, P);
      GnepOptions g;
      g.engine = make_qvi_config(s.cfg);
      g.verify_samples = samples_or(s.cfg, g.verify_samples);
      write_qvi_config(r, g.engine);
      const GnepCandidate c = solve_gnep(*P.gnep, g);
      QviSolution sol;
      sol.status = c.status;
      sol.message = c.message;
      sol.mode = QviMode::Pseudo;
      sol.r_init = c.history.empty() ? 0.0 : c.history.front().r;
      sol.r_max = sol.r_init * 1024.0;
      if (g.engine.r_max > 0) sol.r_max = g.engine.r_max;
      sol.r_final = c.r_final;
      sol.outer_iterations = c.iterations;
      if (c.x.size() > 0) {
        sol.p_bar = Vec::Zero(1);
        sol.y_bar = c.x;
        sol.y_star = c.x_star;
      }
      sol.residual_joint = c.residual;
      sol.history = c.history;
      sol.assumption_ledger = c.assumption_ledger;
      write_solution(r, sol, g.engine);
      bool pass = c.status == QviStatus::Certified && c.verdict.equilibrium;
      if (c.x.size() > 0 && !c.verdict.improvement.empty()) {
        r.vector("x", c.x);
        write_gnep_verdict(r, c.verdict);
        r.number("nikaido_isoda_gap", nikaido_isoda_gap(*P.gnep, c.x, g.verify_samples, g.engine.seed));
      } else {
        pass = false;
      }
      return close(s, opts, pass, pass ? "solved" : std::string(status_name(c.status)));
    }
    case ProblemKind::Vi: {
      reject_mode(s.cfg, P);
      const SolverConfig c = make_solver_config(s.cfg);
      r.integer("seed", static_cast<long long>(c.seed));
      r.number("config.tol", c.tol);
      r.integer("config.max_iter", c.max_iter);
      r.integer("config.n_starts", c.n_starts);
      ViSolution sol;
      bool converged = true;
      try {
        sol = solve_vi(*P.vi, c);
      } catch (const NoConvergence& e) {
        sol = e.best();
        converged = false;
      }
      r.vector("x", sol.x);
      r.vector("x_star", sol.x_star);
      r.number("residual", sol.residual);
      r.integer("iterations", sol.iterations);
      r.integer("start", sol.start);
      r.integer("branch", sol.branch);
      r.list("assumptions", P.vi->F.assumptions);
      return close(s, opts, converged, converged ? "solved" : "NoConvergence");
    }
  }
  throw Error(Errc::InvalidInput, "solve: unsupported problem kind");
}

CommandResult cmd_verify(const CommandOptions& opts) {
  Session s = open(opts, "verify");
  Report& r = s.report;
  const Problem& P = s.problem;
  const std::uint64_t seed = seed_of(s.cfg);
  r.integer("seed", static_cast<long long>(seed));
  switch (P.kind) {
    case ProblemKind::Qvi:
    case ProblemKind::Economy: {
      if (P.kind == ProblemKind::Economy && !opts.y_star) {
        const Vec& p = need(opts.p, "--p");
        const Vec& y = need(opts.y, "--y");
        need_dim(p, P.economy->goods, "--p");
        need_dim(y, P.economy->goods * static_cast<int>(P.economy->consumers.size()), "--y");
        WalrasOptions w;
        w.samples = samples_or(s.cfg, w.samples);
        w.seed = seed;
        r.vector("p_bar", p);
        r.vector("y_bar", y);
        const WalrasVerdict v = verify_walrasian(*P.economy, p, y, w);
        r.integer("samples", static_cast<long long>(w.samples));
        write_walras(r, "walras.", v);
        return close(s, opts, v.equilibrium, v.equilibrium ? "equilibrium" : "failed");
      }
      // a QVI certificate, also usable on the compiled economy when --y-star is given
      const QviProblem Q = with_mode(P.kind == ProblemKind::Qvi ? *P.qvi : compile_to_qvi(*P.economy), s.cfg);
      const QviConfig c = make_qvi_config(s.cfg);
      const Vec& p = need(opts.p, "--p");
      const Vec& y = need(opts.y, "--y");
      need_dim(p, Q.dim_p(), "--p");
      need_dim(y, Q.dim_y(), "--y");
      if (opts.y_star) need_dim(*opts.y_star, Q.dim_y(), "--y-star");
      double anchor = 0.0;
      try {
        anchor = project(Q.M(p), Vec::Zero(Q.dim_y())).norm();
      } catch (const Error&) {
      }
      const double r_cert = s.cfg.r_init ? 2.0 * *s.cfg.r_init : 2.0 * (1.0 + std::max({anchor, Q.r_p, y.norm()}));
      r.text("mode", std::string(mode_name(Q.mode)));
      r.vector("p_bar", p);
      r.vector("y_bar", y);
      r.number("r_cert", r_cert);
      r.integer("cert_samples", static_cast<long long>(c.cert_samples));
      r.integer("cert_seed", static_cast<long long>(seed));

      std::vector<Vec> certs;
      if (opts.y_star) {
        certs.push_back(*opts.y_star);
      } else {
        try {
          for (const Vec& v : Q.G(p).evaluate(y)) {
            if (Q.mode != QviMode::Star || v.norm() >= kZeroTol) certs.push_back(v);
          }
        } catch (const Error& e) {
          r.text("certificate.error", e.what());
        }
      }
      std::optional<CertifyResult> best;
      Vec best_star;
      try {
        for (const Vec& v : certs) {
          const CertifyResult cr = certify_qvi(Q, p, y, v, c.cert_samples, r_cert, seed);
          if (!best || cr.residual < best->residual) {
            best = cr;
            best_star = v;
          }
        }
      } catch (const Error& e) {
        if (e.code() != Errc::InfeasibleCandidate) throw;
        r.text("certificate.error", e.what());
        return close(s, opts, false, "failed");
      }
      if (!best) {
        r.text("certificate.error", "no admissible selection of G at the candidate");
        return close(s, opts, false, "failed");
      }
      r.vector("y_star", best_star);
      r.number("residual_joint", best->residual);
      r.number("price_term", best->price_term);
      r.number("quantity_term", best->quantity_term);
      if (best->p_witness.size() > 0) r.vector("p_witness", best->p_witness);
      if (best->z_witness.size() > 0) r.vector("z_witness", best->z_witness);
      r.number("tol", c.tol);
      const bool pass = best->residual <= c.tol;
      return close(s, opts, pass, pass ? "certified" : "failed");
    }
    case ProblemKind::Gnep: {
      reject_mode(s.cfg, P);
      const Vec& x = opts.x ? *opts.x : need(opts.y, "--x");
      need_dim(x, P.gnep->dim(), "--x");
      const std::size_t samples = samples_or(s.cfg, 10000);
      r.vector("x", x);
      r.integer("samples", static_cast<long long>(samples));
      GnepVerdict v;
      try {
        v = verify_gnep(*P.gnep, x, 1e-7, samples, seed);
      } catch (const Error& e) {
        if (e.code() != Errc::InfeasibleCandidate) throw;
        r.text("verdict.error", e.what());
        return close(s, opts, false, "failed");
      }
      write_gnep_verdict(r, v);
      r.number("nikaido_isoda_gap", nikaido_isoda_gap(*P.gnep, x, samples, seed));
      return close(s, opts, v.equilibrium, v.equilibrium ? "equilibrium" : "failed");
    }
    case ProblemKind::Vi: {
      reject_mode(s.cfg, P);
      const Vec& x = opts.x ? *opts.x : need(opts.y, "--x");
      need_dim(x, P.vi->K.dim(), "--x");
      const SolverConfig c = make_solver_config(s.cfg);
      r.vector("x", x);
      Vec cert;
      double res = kInf;
      try {
        res = natural_residual(*P.vi, x, 1.0, false, c.zero_tol, &cert);
      } catch (const Error& e) {
        if (e.code() != Errc::InfeasiblePoint) throw;
        r.text("residual.error", e.what());
        return close(s, opts, false, "failed");
      }
      r.number("residual", res);
      if (cert.size() > 0) r.vector("x_star", cert);
      r.number("tol", c.tol);
      const bool pass = res <= c.tol;
      return close(s, opts, pass, pass ? "solution" : "failed");
    }
  }
  throw Error(Errc::InvalidInput, "verify: unsupported problem kind");
}

CommandResult cmd_probe(const CommandOptions& opts) {
  Session s = open(opts, "probe");
  Report& r = s.report;
  const Problem& P = s.problem;
  const std::uint64_t seed = seed_of(s.cfg);
  const double r_test = opts.r_test.value_or(10.0);
  r.integer("seed", static_cast<long long>(seed));
  r.text("probe.kind", opts.probe == ProbeKind::Pseudo ? "pseudo" : opts.probe == ProbeKind::Quasi ? "quasi" : "coercivity");

  if (opts.probe != ProbeKind::Coercivity) {
    ProbeConfig pc;
    pc.samples = samples_or(s.cfg, pc.samples);
    pc.seed = seed;
    SetValuedOperator T;
    ConvexSet K = ConvexSet::whole_space(1);
    if (P.kind == ProblemKind::Qvi || P.kind == ProblemKind::Economy) {
      // the stacked operator (g, G) over P × M(p0)
      const QviProblem Q = P.kind == ProblemKind::Qvi ? *P.qvi : compile_to_qvi(*P.economy);
      const StackedForm st = stacked_form(Q);
      const Vec p0 = project(Q.P, Vec::Zero(Q.dim_p()));
      T = st.T;
      K = st.K(p0);
      r.vector("probe.p0", p0);
    } else if (P.kind == ProblemKind::Gnep) {
      const ViProblem v = build_vi_reformulation(*P.gnep);
      T = v.F;
      K = v.K;
    } else {
      T = P.vi->F;
      K = P.vi->K;
    }
    const ConvexSet region = probe_region(K, r_test);
    r.integer("probe.samples", static_cast<long long>(pc.samples));
    const ProbeResult res =
        opts.probe == ProbeKind::Pseudo ? probe_pseudomonotone(T, region, pc) : probe_quasimonotone(T, region, pc);
    write_probe(r, res);
    return close(s, opts, !res.violation, res.violation ? "violation" : "no_violation");
  }

  switch (P.kind) {
    case ProblemKind::Qvi: {
      const QviProblem& Q = *P.qvi;
      const double r_p = opts.r_p.value_or(Q.r_p > 0 ? Q.r_p : 1.0);
      const std::size_t samples = samples_or(s.cfg, 1000);
      r.number("coercivity.r_p", r_p);
      r.number("coercivity.r_test", r_test);
      r.integer("coercivity.samples", static_cast<long long>(samples));
      // p0 plus a few seeded prices
      std::vector<Vec> prices{project(Q.P, Vec::Zero(Q.dim_p()))};
      const Bounds b = bounding_box(Q.P);
      Rng rng(seed);
      for (int k = 0; k < 4; ++k) {
        Vec u(Q.dim_p());
        for (int j = 0; j < Q.dim_p(); ++j) {
          const double lo = std::isfinite(b.lower[j]) ? b.lower[j] : -1.0;
          const double hi = std::isfinite(b.upper[j]) ? b.upper[j] : 1.0;
          u[j] = rng.uniform(lo, hi);
        }
        prices.push_back(project(Q.P, u));
      }
      std::size_t violations = 0;
      for (std::size_t k = 0; k < prices.size(); ++k) {
        const CoercivityReport rep = check_coercivity(Q, prices[k], r_p, r_test, samples, mix_seed(seed, k));
        const std::string key = "coercivity.price." + std::to_string(k) + ".";
        r.vector(key + "p", prices[k]);
        r.integer(key + "tested", static_cast<long long>(rep.tested_shell_points));
        r.integer(key + "escapes", static_cast<long long>(rep.escapes.size()));
        r.integer(key + "violations", static_cast<long long>(rep.violations.size()));
        if (!rep.violations.empty()) r.vector(key + "first_violation", rep.violations.front());
        violations += rep.violations.size();
      }
      r.integer("coercivity.violations", static_cast<long long>(violations));
      return close(s, opts, violations == 0, violations == 0 ? "no_violation" : "violation");
    }
    case ProblemKind::Economy: {
      const EconomyProblem& E = *P.economy;
      double emax = 0.0;
      for (const Consumer& c : E.consumers) emax = std::max(emax, c.endowment.norm());
      const double rho = opts.r_p.value_or(1.0 + emax);
      const std::size_t samples = samples_or(s.cfg, 100);
      r.number("coercivity.rho", rho);
      r.integer("coercivity.samples", static_cast<long long>(samples));
      std::size_t violations = 0;
      for (std::size_t i = 0; i < E.consumers.size(); ++i) {
        const UtilityCoercivityReport rep = check_utility_coercivity(E, i, rho, 10, samples, mix_seed(seed, i));
        const std::string key = "coercivity.agent." + std::to_string(i) + ".";
        r.integer(key + "tested", static_cast<long long>(rep.tested));
        r.integer(key + "strict", static_cast<long long>(rep.strict));
        r.integer(key + "weak_only", static_cast<long long>(rep.weak_only));
        r.integer(key + "violations", static_cast<long long>(rep.violations.size()));
        if (!rep.violations.empty()) {
          r.vector(key + "first_violation.p", rep.violations.front().p);
          r.vector(key + "first_violation.y", rep.violations.front().y);
        }
        violations += rep.violations.size();
      }
      r.integer("coercivity.violations", static_cast<long long>(violations));
      return close(s, opts, violations == 0, violations == 0 ? "no_violation" : "violation");
    }
    case ProblemKind::Gnep: {
      const double r_p = opts.r_p.value_or(2.0);
      const std::size_t samples = samples_or(s.cfg, 300);
      const GnepCoercivityReport rep = check_gnep_coercivity(*P.gnep, r_p, r_test, samples, seed);
      std::size_t summed = 0;
      for (const GnepEscape& e : rep.escapes) summed += e.per_player ? 0 : 1;
      r.number("coercivity.r_p", r_p);
      r.number("coercivity.r_test", r_test);
      r.integer("coercivity.tested", static_cast<long long>(rep.tested));
      r.integer("coercivity.escapes", static_cast<long long>(rep.escapes.size()));
      r.integer("coercivity.summed_only", static_cast<long long>(summed));
      r.integer("coercivity.violations", static_cast<long long>(rep.violations.size()));
      if (!rep.violations.empty()) r.vector("coercivity.first_violation", rep.violations.front());
      const bool ok = rep.violations.empty();
      return close(s, opts, ok, ok ? "no_violation" : "violation");
    }
    case ProblemKind::Vi:
      throw Error(Errc::InvalidInput, "probe: coercivity applies to qvi, economy and gnep problems");
  }
  throw Error(Errc::InvalidInput, "probe: unsupported problem kind");
}

}  // namespace qvi
