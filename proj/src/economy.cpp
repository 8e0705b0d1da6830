#include "qvi/economy.hpp"

#include <algorithm>
#include <memory>

#include "qvi/rng.hpp"
#include "qvi/sampling.hpp"

namespace qvi {

void EconomyProblem::validate() const {
  if (goods <= 0) throw Error(Errc::InvalidInput, "economy: number of goods must be positive");
  if (consumers.empty()) throw Error(Errc::InvalidInput, "economy: no consumers");
  for (std::size_t i = 0; i < consumers.size(); ++i) {
    const Consumer& c = consumers[i];
    const std::string tag = "economy consumer " + std::to_string(i + 1);
    if (c.X.dim() != goods) throw Error(Errc::DimensionMismatch, tag + ": consumption set dimension");
    require_dim(c.endowment, goods, (tag + " endowment").c_str());
    const expr::Declaration d = c.utility.declaration();
    if (d.n_x != goods || d.n_p != 0) {
      throw Error(Errc::DimensionMismatch, tag + ": utility must use x1..x" + std::to_string(goods) + " only");
    }
    const double eps = 1e-6 * std::max(1.0, c.endowment.norm());
    bool inside = contains(c.X, c.endowment, 0.0);
    for (int j = 0; j < goods && inside; ++j) {
      for (double s : {1.0, -1.0}) inside = inside && contains(c.X, c.endowment + s * eps * Vec::Unit(goods, j), 0.0);
    }
    if (!inside) throw Error(Errc::InvalidInput, tag + ": endowment is not in the interior of the consumption set");
  }
}

QuasiconvexFunctionHandle EconomyProblem::objective(std::size_t i) const {
  const Consumer& c = consumers.at(i);
  const expr::Expr neg(expr::Node{expr::Op::Neg, 0.0, 0, {c.utility.root()}}, c.utility.declaration());
  return QuasiconvexFunctionHandle::from_expr(neg, c.X);
}

std::vector<Vec> EconomyProblem::split(const Vec& y) const {
  require_dim(y, goods * static_cast<int>(consumers.size()), "allocation");
  std::vector<Vec> out;
  for (std::size_t i = 0; i < consumers.size(); ++i) out.push_back(y.segment(static_cast<int>(i) * goods, goods));
  return out;
}

ConvexSet budget_set(const EconomyProblem& E, std::size_t i, const Vec& p) {
  require_dim(p, E.goods, "price");
  const Consumer& c = E.consumers.at(i);
  return ConvexSet::intersection({c.X, ConvexSet::half_space(p, p.dot(c.endowment))});
}

ConvexSet modified_budget_set(const EconomyProblem& E, std::size_t i, const Vec& p) {
  require_dim(p, E.goods, "price");
  const Consumer& c = E.consumers.at(i);
  return ConvexSet::intersection({c.X, ConvexSet::half_space(p, p.dot(c.endowment) + 1.0 - p.norm())});
}

Vec excess_demand(const EconomyProblem& E, const Vec& y) {
  Vec z = Vec::Zero(E.goods);
  const std::vector<Vec> parts = E.split(y);
  for (std::size_t i = 0; i < parts.size(); ++i) z += parts[i] - E.consumers[i].endowment;
  return z;
}

QviProblem compile_to_qvi(const EconomyProblem& E) {
  E.validate();
  QviProblem Q;
  Q.name = E.name;
  Q.mode = QviMode::Star;
  Q.P = ConvexSet::ball(Vec::Zero(E.goods), 1.0);
  std::vector<Vec> ends;
  for (const Consumer& c : E.consumers) ends.push_back(c.endowment);
  const int m = E.goods;
  // same summation order as excess_demand, so g(y) = 0 exactly when it clears
  Q.g = [ends, m](const Vec& y) {
    Vec out = Vec::Zero(m);
    for (std::size_t i = 0; i < ends.size(); ++i) out += ends[i] - y.segment(static_cast<int>(i) * m, m);
    return out;
  };
  Q.g_affine = true;
  const auto econ = std::make_shared<const EconomyProblem>(E);
  for (std::size_t i = 0; i < E.consumers.size(); ++i) {
    SetValuedOperator G = normal_operator(E.objective(i), true, E.normals).excluding_zero();
    G.assumptions = {"quasiconcave utility (declared)", "non-satiation checked near candidates only"};
    QviBlock b;
    b.dim = m;
    b.G = [G](const Vec&) { return G; };
    b.M = [econ, i](const Vec& p) { return modified_budget_set(*econ, i, p); };
    Q.blocks.push_back(std::move(b));
  }
  return Q;
}

namespace {

double utility(const Consumer& c, const Vec& y) { return c.utility.eval(y); }

}  // namespace

WalrasVerdict verify_walrasian(const EconomyProblem& E, const Vec& p_bar, const Vec& y_bar,
                               const WalrasOptions& opts) {
  E.validate();
  require_dim(p_bar, E.goods, "price");
  if (p_bar.norm() == 0.0) throw Error(Errc::InvalidInput, "verify_walrasian: price must be nonzero");
  const std::vector<Vec> ys = E.split(y_bar);
  WalrasVerdict v;
  v.price_norm = p_bar.norm();
  v.clearing_error = excess_demand(E, y_bar).norm();

  std::string first;
  int first_agent = -1;
  Vec first_witness;
  if (v.clearing_error > opts.clearing_tol) {
    first = "clearing";
    first_witness = excess_demand(E, y_bar);
  }
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const ConvexSet S = budget_set(E, i, p_bar);
    Vec w;
    const Consumer& c = E.consumers[i];
    const double spread = 10.0 * (1.0 + ys[i].norm() + c.endowment.norm());
    const double gain = best_gain([&c](const Vec& z) { return utility(c, z); }, S, ys[i], spread, opts.samples,
                                  mix_seed(opts.seed, i), w);
    v.improvement.push_back(gain);
    if (first.empty() && gain > opts.utility_tol) {
      first = "utility";
      first_agent = static_cast<int>(i);
      first_witness = w;
    }
  }
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const Consumer& c = E.consumers[i];
    const double over = std::max(p_bar.dot(ys[i] - c.endowment), distance(c.X, ys[i]));
    v.budget_excess.push_back(std::max(0.0, over));
    if (first.empty() && over > opts.budget_tol * std::max(1.0, ys[i].norm())) {
      first = "budget";
      first_agent = static_cast<int>(i);
      first_witness = ys[i];
    }
  }
  v.equilibrium = first.empty();
  v.failed_condition = first;
  v.agent = first_agent;
  v.witness = first_witness;
  return v;
}

UtilityCoercivityReport check_utility_coercivity(const EconomyProblem& E, std::size_t i, double rho,
                                                 std::size_t p_samples, std::size_t y_samples,
                                                 std::uint64_t seed) {
  E.validate();
  if (!(rho > 0.0)) throw Error(Errc::InvalidInput, "check_utility_coercivity: rho must be positive");
  const Consumer& c = E.consumers.at(i);
  const QuasiconvexFunctionHandle f = E.objective(i);
  const int m = E.goods;
  UtilityCoercivityReport rep;
  rep.agent = i;
  rep.rho = rho;
  Rng rng(seed);
  const double r_test = std::max(4.0 * rho, rho + 10.0);
  for (std::size_t ps = 0; ps < p_samples; ++ps) {
    Vec p = ps == 0 ? Vec(Vec::Zero(m)) : (ps % 2 ? rng.on_unit_sphere(m) : rng.in_unit_ball(m));
    const ConvexSet Mi = modified_budget_set(E, i, p);
    const ConvexSet shell_set = intersect_ball(Mi, r_test);
    std::vector<Vec> small{c.endowment, project(Mi, Vec::Zero(m))};
    for (int k = 0; k < 16; ++k) small.push_back(project(Mi, rho * rng.in_unit_ball(m)));
    std::size_t found = 0;
    for (std::size_t attempt = 0; found < y_samples && attempt < 20 * y_samples; ++attempt) {
      const Vec y = project(shell_set, rng.uniform(rho, r_test) * rng.on_unit_sphere(m));
      if (!(y.norm() > rho)) continue;
      ++found;
      ++rep.tested;
      const double uy = utility(c, y);
      UtilityCoercivitySample s{p, y, Vec(), false, false};
      for (const Vec& z : small) {
        if (z.norm() > rho || !contains(Mi, z, 1e-9)) continue;
        if (utility(c, z) > uy) {
          s.strict = true;
          s.z = z;
          break;
        }
      }
      if (!s.strict) {
        const double dy = strict_sublevel_distance(f, y, E.normals);
        for (const Vec& z : small) {
          if (z.norm() > rho || !contains(Mi, z, 1e-9)) continue;
          if (utility(c, z) >= uy - 1e-12 && strict_sublevel_distance(f, z, E.normals) <= dy + 1e-9) {
            s.weak = true;
            s.z = z;
            break;
          }
        }
      }
      if (s.strict) {
        ++rep.strict;
      } else if (s.weak) {
        ++rep.weak_only;
      } else {
        rep.violations.push_back(std::move(s));
      }
    }
  }
  return rep;
}

}  // namespace qvi
