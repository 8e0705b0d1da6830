#include "doctest.h"

#include "qvi/operators.hpp"
#include "qvi/rng.hpp"

using namespace qvi;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v1(double a) { return Vec::Constant(1, a); }

const ConvexSet& x1_set() {
  static const ConvexSet s = ConvexSet::box(v2(-kInf, 0), v2(0, kInf));
  return s;
}

// −u for the capped l1 utility: min(|x1| + |x2|, 3/2).
QuasiconvexFunctionHandle capped_cost() {
  return QuasiconvexFunctionHandle::from_expr(
      expr::Expr::parse("-piecewise(abs(x1)+abs(x2) <= 1.5, -(abs(x1)+abs(x2)), -1.5)", {2, 0}), x1_set());
}

QuasiconvexFunctionHandle sq_norm(const ConvexSet& domain) {
  return QuasiconvexFunctionHandle::from_expr(expr::Expr::parse("x1^2 + x2^2", {2, 0}), domain);
}

double seg_dist(const Vec& p, const Vec& a, const Vec& b) {
  const double t = std::clamp((p - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
  return (a + t * (b - a) - p).norm();
}

// Distance to the closed triangle conv{(0,0), (-1.5,0), (0,1.5)}, which is the closure of
// the strict sublevel set of the capped cost at level 3/2 within X_1.
double triangle_distance(const Vec& p) {
  if (p[0] <= 0 && p[1] >= 0 && -p[0] + p[1] <= 1.5) return 0.0;
  const Vec a = v2(0, 0), b = v2(-1.5, 0), c = v2(0, 1.5);
  return std::min({seg_dist(p, a, b), seg_dist(p, b, c), seg_dist(p, c, a)});
}

}  // namespace

TEST_CASE("strict sublevel membership") {
  const auto f = sq_norm(ConvexSet::whole_space(2));
  CHECK(strict_sublevel_membership(f, v2(1, 0), v2(0, 0)));
  CHECK_FALSE(strict_sublevel_membership(f, v2(0, 0), v2(1, 0)));
  const auto cost = capped_cost();
  // u_1(v) = -0.5 > u_1(w) = -1.5
  CHECK(strict_sublevel_membership(cost, v2(0, 1.5), v2(0, 0.5)));
  try {
    strict_sublevel_membership(cost, v2(0, 1.5), v2(1, 1));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DomainViolation);
  }
}

TEST_CASE("strict normal selections") {
  const auto f = sq_norm(ConvexSet::whole_space(2));
  const NormalSelection s = normal_selection_strict(f, v2(1, 0));
  CHECK((s.n - v2(1, 0)).norm() <= 1e-12);
  CHECK(s.source == "gradient");

  const auto cost = capped_cost();
  const NormalSelection k = normal_selection_strict(cost, v2(0, 0.5));
  CHECK_FALSE(k.is_argmin);
  CHECK((k.n - v2(0, 1)).norm() <= 1e-9);
  // fresh validation on 10^3 strict-sublevel samples
  NormalConfig fresh;
  fresh.cloud_size = 1000;
  CHECK(validate_normal(cost, v2(0, 0.5), k.n, false, fresh, 7) <= fresh.sep_tol);

  const auto flat = QuasiconvexFunctionHandle::from_expr(expr::Expr::parse("3 + 0*x1", {2, 0}), ConvexSet::whole_space(2));
  CHECK(normal_selection_strict(flat, v2(0.3, -2)).is_argmin);
}

TEST_CASE("adjusted normal selections") {
  const auto f = sq_norm(ConvexSet::whole_space(2));
  CHECK((adjusted_normal_selection(f, v2(0, -2)).n - v2(0, -1)).norm() <= 1e-12);

  const auto cost = capped_cost();
  const NormalSelection k = adjusted_normal_selection(cost, v2(0, 0.5));
  NormalConfig fresh;
  fresh.cloud_size = 2000;
  CHECK(validate_normal(cost, v2(0, 0.5), k.n, true, fresh, 3) <= fresh.sep_tol);
  CHECK(k.n[1] > 0.0);  // points away from better bundles

  try {
    adjusted_normal_selection(cost, v2(0, 0));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ArgminPoint);
  }
}

TEST_CASE("adjusted normal on the utility plateau against a brute-force grid") {
  const auto cost = capped_cost();
  const Vec w = v2(-0.25, 2.0);  // on the plateau; nearest strict point is the corner (0, 1.5)
  const double rho = triangle_distance(w);
  REQUIRE(rho > 0.3);
  const NormalSelection s = adjusted_normal_selection(cost, w);
  CHECK(s.rho == doctest::Approx(rho).epsilon(1e-6));
  int members = 0;
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 200; ++j) {
      const Vec v = v2(-3.0 + 3.0 * i / 199.0, 3.0 * j / 199.0);  // inside X_1
      if (cost.value(v) > cost.value(w) + 1e-9 || triangle_distance(v) > rho + 1e-9) continue;
      ++members;
      CHECK(s.n.dot(v - w) <= 1e-7);
    }
  }
  CHECK(members > 1000);
}

TEST_CASE("normal selections of a convex differentiable function follow the gradient") {
  const auto f = QuasiconvexFunctionHandle::from_expr(
      expr::Expr::parse("(x1 - 1)^2 + 3*x2^2 + x1*x2", {2, 0}), ConvexSet::whole_space(2));
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const Vec w = 3.0 * rng.normal_vec(2);
    const Vec g = v2(2 * (w[0] - 1) + w[1], 6 * w[1] + w[0]);
    if (g.norm() < 1e-3) continue;
    CHECK(normal_selection_strict(f, w).n.dot(g / g.norm()) >= 1 - 1e-6);
    CHECK(adjusted_normal_selection(f, w).n.dot(g / g.norm()) >= 1 - 1e-6);
  }
}

TEST_CASE("validated kink normals survive resampling") {
  const auto cost = capped_cost();
  NormalConfig cfg;
  cfg.cloud_size = 500;
  for (const Vec& w : {v2(0, 0.5), v2(-0.5, 0), v2(-0.7, 0), v2(0, 1.2), v2(-0.3, 1.2), v2(-2, 2)}) {
    const NormalSelection s = adjusted_normal_selection(cost, w, cfg);
    for (std::uint64_t salt = 1; salt <= 3; ++salt) CHECK(validate_normal(cost, w, s.n, true, cfg, salt) <= cfg.sep_tol);
  }
}

TEST_CASE("normal operator at an argmin") {
  const auto cost = capped_cost();
  const SetValuedOperator op = normal_operator(cost, true, NormalConfig{});
  const auto at_zero = op.evaluate(v2(0, 0));
  CHECK(at_zero.size() == 4);  // the level set is {0}; every coordinate direction is normal to it
  const SetValuedOperator strict = normal_operator(cost, false, NormalConfig{}, true);
  const auto with_zero = strict.evaluate(v2(0, 0));
  CHECK(with_zero.back().isZero());
}

TEST_CASE("pseudomonotonicity probe") {
  const ConvexSet seg = ConvexSet::box(v1(-1), v1(1));
  const ProbeResult sq = probe_pseudomonotone(catalog_operator("square", 1), seg);
  REQUIRE(sq.violation);
  CHECK(sq.v_star.dot(sq.w - sq.v) >= 0.0);
  CHECK(sq.w_star.dot(sq.w - sq.v) < 0.0);

  const ConvexSet rect = ConvexSet::box(v2(1, -1), v2(5, 1));
  const SetValuedOperator stacked = SetValuedOperator::from_strings(2, {{"x2 + 1", "x2^2 + 2"}});
  const ProbeResult st = probe_pseudomonotone(stacked, rect);
  REQUIRE(st.violation);
  CHECK(st.v == v2(5, -1));
  CHECK(st.w == v2(1, 1));
  CHECK(st.antecedent == 6.0);
  CHECK(st.consequent == -2.0);

  CHECK_FALSE(probe_pseudomonotone(catalog_operator("identity", 1), seg).violation);
}

TEST_CASE("quasimonotonicity probe") {
  const ConvexSet seg = ConvexSet::box(v1(-1), v1(1));
  CHECK_FALSE(probe_quasimonotone(catalog_operator("square", 1), seg).violation);
  const ProbeResult neg = probe_quasimonotone(catalog_operator("negation", 1), seg);
  REQUIRE(neg.violation);
  CHECK(neg.v_star.dot(neg.w - neg.v) > 0.0);
  CHECK(neg.w_star.dot(neg.w - neg.v) < 0.0);
  CHECK_FALSE(probe_quasimonotone(SetValuedOperator::constant(v1(0.7)), seg).violation);

  // brute force over a 100-point grid agrees that negation has violating pairs
  int violating = 0;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      const double v = -1 + 2.0 * i / 99, w = -1 + 2.0 * j / 99;
      if (-v * (w - v) > 0 && -w * (w - v) < 0) ++violating;
    }
  }
  CHECK(violating > 0);
}

TEST_CASE("reported probe counterexamples re-evaluate as violations") {
  Rng rng(8);
  const ConvexSet box = ConvexSet::box(v2(-2, -1), v2(1, 3));
  const SetValuedOperator ops[] = {
      SetValuedOperator::from_strings(2, {{"x2", "-x1"}, {"x1^2", "x2"}}),
      SetValuedOperator::from_strings(2, {{"x1*x2", "x1 - x2^3"}}),
      SetValuedOperator::from_strings(2, {{"-x1", "-x2"}}),
  };
  for (const auto& op : ops) {
    for (bool pseudo : {true, false}) {
      ProbeConfig cfg;
      cfg.seed = rng.next();
      const ProbeResult r = pseudo ? probe_pseudomonotone(op, box, cfg) : probe_quasimonotone(op, box, cfg);
      if (!r.violation) continue;
      const Vec d = r.w - r.v;
      bool v_ok = false, w_ok = false;
      for (const Vec& s : op.evaluate(r.v)) v_ok = v_ok || s == r.v_star;
      for (const Vec& s : op.evaluate(r.w)) w_ok = w_ok || s == r.w_star;
      CHECK(v_ok);
      CHECK(w_ok);
      CHECK(pseudo ? r.v_star.dot(d) >= 0 : r.v_star.dot(d) > 0);
      CHECK(r.w_star.dot(d) < 0);
    }
  }
}

TEST_CASE("product operators concatenate factor selections") {
  const SetValuedOperator a = SetValuedOperator::from_strings(1, {{"x1"}, {"2*x1"}});
  const SetValuedOperator b = SetValuedOperator::from_strings(2, {{"x1 + x2", "1"}});
  const ProductOperator prod({a, b});
  CHECK(prod.dim() == 3);
  for (int i = -2; i <= 2; ++i) {
    for (int j = -2; j <= 2; ++j) {
      const Vec x = (Vec(3) << i, j, 0.5 * i * j).finished();
      const auto sel = prod.evaluate(x);
      const auto sa = a.evaluate(x.segment(0, 1));
      const auto sb = b.evaluate(x.segment(1, 2));
      REQUIRE(sel.size() == sa.size() * sb.size());
      std::size_t k = 0;
      for (const Vec& pa : sa) {
        for (const Vec& pb : sb) {
          CHECK(sel[k].segment(0, 1) == pa);
          CHECK(sel[k].segment(1, 2) == pb);
          ++k;
        }
      }
    }
  }
}

TEST_CASE("exclude_zero drops vanishing selections") {
  const SetValuedOperator op = SetValuedOperator::from_strings(2, {{"x1", "x2"}, {"1", "0"}}).excluding_zero();
  CHECK(op.evaluate(v2(0, 0)).size() == 1);
  CHECK(op.evaluate(v2(1, 0)).size() == 2);
  for (const Vec& s : op.evaluate(v2(1e-13, 0))) CHECK(s.norm() >= kZeroTol);
}

TEST_CASE("segment-valued catalog operator") {
  const SetValuedOperator g = catalog_operator("segment-G", 2);
  CHECK(g.evaluate(v2(0.3, 1)).size() == 1);
  const auto on_axis = g.evaluate(v2(0.3, 0));
  REQUIRE(on_axis.size() == 2);
  CHECK(on_axis[0] == v2(1, 1));
  CHECK(on_axis[1] == v2(2, 2));
  CHECK_THROWS_AS(catalog_operator("nope", 2), Error);
}
