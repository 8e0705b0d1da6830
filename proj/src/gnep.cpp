#include "qvi/gnep.hpp"

#include <memory>
#include <optional>

#include "qvi/rng.hpp"
#include "qvi/sampling.hpp"

namespace qvi {

int GnepProblem::dim() const {
  int n = 0;
  for (const GnepPlayer& p : players) n += p.dim;
  return n;
}

std::vector<int> GnepProblem::offsets() const {
  std::vector<int> out;
  int off = 0;
  for (const GnepPlayer& p : players) {
    out.push_back(off);
    off += p.dim;
  }
  return out;
}

void GnepProblem::validate() const {
  if (players.empty()) throw Error(Errc::InvalidInput, "gnep: no players");
  for (std::size_t i = 0; i < players.size(); ++i) {
    if (players[i].dim <= 0) {
      throw Error(Errc::InvalidInput, "gnep player " + std::to_string(i + 1) + ": block dimension must be positive");
    }
  }
  const int n = dim();
  if (X.dim() != n) throw Error(Errc::DimensionMismatch, "gnep: shared set dimension differs from the sum of blocks");
  for (std::size_t i = 0; i < players.size(); ++i) {
    const expr::Declaration d = players[i].objective.declaration();
    if (d.n_x != n || d.n_p != 0) {
      throw Error(Errc::DimensionMismatch,
                  "gnep player " + std::to_string(i + 1) + ": objective must use x1..x" + std::to_string(n) + " only");
    }
  }
}

double GnepProblem::objective(std::size_t i, const Vec& x) const { return players.at(i).objective.eval(x); }

QuasiconvexFunctionHandle GnepProblem::block_objective(std::size_t i, const Vec& x) const {
  const int off = offsets().at(i);
  const int d = players[i].dim;
  return QuasiconvexFunctionHandle::from_expr(players[i].objective.restrict_block(x, off, d), slice(X, x, off, d));
}

Vec GnepProblem::replace_block(std::size_t i, const Vec& x, const Vec& z) const {
  Vec out = x;
  out.segment(offsets().at(i), players.at(i).dim) = z;
  return out;
}

ViProblem build_vi_reformulation(const GnepProblem& G) {
  G.validate();
  const auto game = std::make_shared<const GnepProblem>(G);
  const int n = G.dim();
  SetValuedOperator F(
      n, n,
      [game](const Vec& x) {
        const std::vector<int> offs = game->offsets();
        std::vector<std::vector<Vec>> blocks;
        for (std::size_t i = 0; i < game->players.size(); ++i) {
          const GnepPlayer& pl = game->players[i];
          const Vec xi = x.segment(offs[i], pl.dim);
          if (pl.smooth) {
            blocks.push_back({pl.objective.gradient(x).segment(offs[i], pl.dim)});
            continue;
          }
          NormalSelection s;
          try {
            s = normal_selection_strict(game->block_objective(i, x), xi, game->normals);
          } catch (const Error& e) {
            if (e.code() != Errc::NoValidatedNormal && e.code() != Errc::DomainViolation) throw;
            throw Error(e.code(), "player " + std::to_string(i + 1) + ": " + e.what());
          }
          if (!s.is_argmin) {
            blocks.push_back({s.n});
            continue;
          }
          // x_i is optimal on its slice: T_i is the whole unit ball
          std::vector<Vec> ball{Vec::Zero(pl.dim)};
          for (int j = 0; j < pl.dim; ++j) {
            ball.push_back(Vec::Unit(pl.dim, j));
            ball.push_back(-Vec::Unit(pl.dim, j));
          }
          blocks.push_back(std::move(ball));
        }
        return combine_selections(blocks);
      },
      G.name + ".T");
  F.assumptions = {"objectives quasiconvex in the own block (declared)", "objectives continuous (declared)"};
  return ViProblem{F, G.X};
}

QviProblem gnep_as_qvi(const GnepProblem& G) {
  const ViProblem vp = build_vi_reformulation(G);
  QviProblem Q;
  Q.name = G.name;
  Q.mode = QviMode::Pseudo;
  Q.P = ConvexSet::box(Vec::Zero(1), Vec::Zero(1));
  Q.g = [](const Vec&) { return Vec(Vec::Zero(1)); };
  Q.g_affine = true;
  QviBlock b;
  b.dim = G.dim();
  const SetValuedOperator F = vp.F;
  const ConvexSet X = vp.K;
  b.G = [F](const Vec&) { return F; };
  b.M = [X](const Vec&) { return X; };
  Q.blocks.push_back(std::move(b));
  return Q;
}

namespace {

// Best decrease of u_i found on the slice through x.
double player_gain(const GnepProblem& G, std::size_t i, const Vec& x, std::size_t samples, std::uint64_t seed,
                   Vec& witness) {
  const int off = G.offsets()[i];
  const int d = G.players[i].dim;
  const ConvexSet S = slice(G.X, x, off, d);
  const double spread = 10.0 * (1.0 + x.norm());
  auto value = [&](const Vec& z) { return -G.objective(i, G.replace_block(i, x, z)); };
  return best_gain(value, S, x.segment(off, d), spread, samples, seed, witness);
}

void require_feasible(const GnepProblem& G, const Vec& x, const char* what) {
  require_dim(x, G.dim(), what);
  if (!contains(G.X, x, 1e-7)) throw Error(Errc::InfeasibleCandidate, std::string(what) + ": point is outside X");
}

}  // namespace

GnepVerdict verify_gnep(const GnepProblem& G, const Vec& x, double tol, std::size_t samples, std::uint64_t seed) {
  G.validate();
  require_feasible(G, x, "verify_gnep");
  GnepVerdict v;
  for (std::size_t i = 0; i < G.players.size(); ++i) {
    Vec w;
    const double gain = player_gain(G, i, x, samples, mix_seed(seed, i), w);
    v.improvement.push_back(gain);
    if (v.player < 0 && gain > tol) {
      v.player = static_cast<int>(i);
      v.witness = w;
    }
  }
  v.equilibrium = v.player < 0;
  return v;
}

double nikaido_isoda_gap(const GnepProblem& G, const Vec& x, std::size_t samples, std::uint64_t seed) {
  G.validate();
  require_feasible(G, x, "nikaido_isoda_gap");
  double gap = 0.0;
  for (std::size_t i = 0; i < G.players.size(); ++i) {
    Vec w;
    gap += std::max(0.0, player_gain(G, i, x, samples, mix_seed(seed, i), w));
  }
  return gap;
}

GnepCandidate solve_gnep(const GnepProblem& G, const GnepOptions& opts) {
  const QviProblem Q = gnep_as_qvi(G);
  const QviSolution sol = outer_solve(Q, opts.engine);
  GnepCandidate c;
  c.status = sol.status;
  c.x = sol.y_bar;
  c.x_star = sol.y_star;
  c.residual = sol.residual_joint;
  c.r_final = sol.r_final;
  c.history = sol.history;
  c.assumption_ledger = sol.assumption_ledger;
  c.iterations = sol.outer_iterations;
  c.message = sol.message;
  if (c.x.size() == G.dim() && contains(G.X, c.x, 1e-7)) {
    c.verdict = verify_gnep(G, c.x, opts.verify_tol, opts.verify_samples, opts.engine.seed);
  }
  return c;
}

GnepCoercivityReport check_gnep_coercivity(const GnepProblem& G, double r_prime, double r_test, std::size_t samples,
                                           std::uint64_t seed, double tol) {
  if (!(r_test > r_prime)) throw Error(Errc::InvalidInput, "check_gnep_coercivity: r_test must exceed r_prime");
  const ViProblem vp = build_vi_reformulation(G);
  GnepCoercivityReport rep;
  rep.r_prime = r_prime;
  rep.r_test = r_test;
  const int n = G.dim();
  const Vec origin_proj = project(G.X, Vec::Zero(n));
  if (origin_proj.norm() > r_test) return rep;
  const ConvexSet Xt = intersect_ball(G.X, r_test);

  std::vector<Vec> shell;
  for (const Vec& y : structured_points(Xt, Vec::Zero(n), r_test, 7)) {
    if (y.norm() > r_prime && shell.size() < samples) shell.push_back(y);
  }
  Rng rng(seed);
  for (std::size_t attempt = 0; shell.size() < samples && attempt < 20 * samples; ++attempt) {
    const Vec y = project(Xt, rng.uniform(r_prime, r_test) * rng.on_unit_sphere(n));
    if (y.norm() > r_prime) shell.push_back(y);
  }

  const std::vector<int> offs = G.offsets();
  auto per_player = [&](const Vec& y, const Vec& z) {
    for (std::size_t i = 0; i < G.players.size(); ++i) {
      const GnepPlayer& pl = G.players[i];
      if (pl.smooth) {
        const Vec gi = pl.objective.gradient(y).segment(offs[i], pl.dim);
        if (gi.dot(y.segment(offs[i], pl.dim) - z.segment(offs[i], pl.dim)) < -tol) return false;
      } else {
        const double uz = G.objective(i, G.replace_block(i, y, z.segment(offs[i], pl.dim)));
        if (!(uz < G.objective(i, y) - G.normals.strict_tol)) return false;
      }
    }
    return true;
  };

  static constexpr double kRadial[] = {0.9, 0.5, 0.1, 0.0};
  for (const Vec& y : shell) {
    ++rep.tested;
    std::vector<Vec> cands{origin_proj};
    for (double t : kRadial) cands.push_back(project(G.X, t * y));
    Rng local(point_seed(seed, y));
    for (int k = 0; k < 16; ++k) cands.push_back(project(G.X, y.norm() * local.in_unit_ball(n)));

    std::optional<Vec> summed;
    std::vector<Vec> sels;
    bool have_sels = false;
    bool found = false;
    for (const Vec& z : cands) {
      if (!(z.norm() < y.norm() - 1e-12)) continue;
      if (per_player(y, z)) {
        rep.escapes.push_back({y, z, true});
        found = true;
        break;
      }
      if (summed) continue;
      if (!have_sels) {
        sels = vp.F.evaluate(y);
        have_sels = true;
      }
      bool ok = true;
      for (const Vec& s : sels) ok = ok && s.dot(y - z) >= -tol;
      if (ok) summed = z;
    }
    if (found) continue;
    if (summed) {
      rep.escapes.push_back({y, *summed, false});
    } else {
      rep.violations.push_back(y);
    }
  }
  return rep;
}

}  // namespace qvi
