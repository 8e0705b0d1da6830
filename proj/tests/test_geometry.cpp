#include "doctest.h"

#include "qvi/geometry.hpp"
#include "qvi/rng.hpp"

using namespace qvi;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

ConvexSet triangle() {
  return ConvexSet::polyhedron({{v2(-1, 0), 0.0}, {v2(0, -1), 0.0}, {v2(1, 1), 1.0}}, 2);
}

ConvexSet hyperbola() {
  return ConvexSet::sublevel(expr::Expr::parse("norm2(x1 - x2, 2) - x1 - x2", {2, 0}), 2);
}

ConvexSet parabola_region() {
  return ConvexSet::intersection({ConvexSet::half_space(v2(-1, 0), 0.0),
                                  ConvexSet::sublevel(expr::Expr::parse("x1^2 - 3*x2 - 4", {2, 0}), 2)});
}

// Brute-force projection onto the triangle {x >= 0, x1 + x2 <= 1}: candidates are the
// interior point, the projections onto each edge segment, and the vertices.
Vec triangle_oracle(const Vec& x) {
  if (x[0] >= 0 && x[1] >= 0 && x[0] + x[1] <= 1) return x;
  const Vec verts[3] = {v2(0, 0), v2(1, 0), v2(0, 1)};
  Vec best = verts[0];
  for (int i = 0; i < 3; ++i) {
    const Vec a = verts[i];
    const Vec b = verts[(i + 1) % 3];
    const double t = std::clamp((x - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
    const Vec c = a + t * (b - a);
    if ((c - x).norm() < (best - x).norm()) best = c;
  }
  return best;
}

std::vector<ConvexSet> zoo() {
  std::vector<ConvexSet> sets;
  sets.push_back(ConvexSet::box(v2(0, -1), v2(2, 3)));
  sets.push_back(ConvexSet::box(v2(-kInf, 0), v2(0, kInf)));
  sets.push_back(ConvexSet::ball(v2(0.5, -0.5), 1.5));
  sets.push_back(ConvexSet::half_space(v2(1, 2), 0.5));
  sets.push_back(triangle());
  sets.push_back(intersect_ball(ConvexSet::half_space(v2(0, -1), 0.0), 1.0));
  sets.push_back(ConvexSet::intersection({ConvexSet::box(v2(-kInf, 0), v2(0, kInf)),
                                          ConvexSet::half_space(v2(-1, -1), 0.5), ConvexSet::ball(v2(0, 0), 3)}));
  sets.push_back(hyperbola());
  sets.push_back(intersect_ball(parabola_region(), 4.0));
  sets.push_back(ConvexSet::product({ConvexSet::ball(Vec::Zero(1), 1.0), ConvexSet::box(v2(0, 0), v2(1, 1))}));
  return sets;
}

}  // namespace

TEST_CASE("closed-form projections") {
  const ConvexSet ball = ConvexSet::ball(Vec::Zero(2), 1.0);
  CHECK(project(ball, v2(0.3, 0.4)) == v2(0.3, 0.4));
  CHECK((project(ball, v2(3, 4)) - v2(0.6, 0.8)).norm() <= 1e-15);
  const ConvexSet box = ConvexSet::box(v2(0, 0), v2(1, 1));
  CHECK(project(box, v2(-1, 0.5)) == v2(0, 0.5));
  const ConvexSet h = ConvexSet::half_space(v2(1, 1), 1.0);
  CHECK((project(h, v2(1, 1)) - v2(0.5, 0.5)).norm() <= 1e-15);
  CHECK(project(ConvexSet::half_space(v2(0, 0), 0.0), v2(5, 5)) == v2(5, 5));
  CHECK_THROWS_AS(project(ConvexSet::half_space(v2(0, 0), -1.0), v2(5, 5)), Error);
}

TEST_CASE("polyhedron projection matches the edge oracle") {
  const ConvexSet tri = triangle();
  CHECK((project(tri, v2(1, 1)) - v2(0.5, 0.5)).norm() <= 1e-9);
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const Vec x = 3.0 * rng.normal_vec(2);
    CHECK((project(tri, x) - triangle_oracle(x)).norm() <= 1e-8);
  }
}

TEST_CASE("sublevel projection on the hyperbola region") {
  // {x1 x2 >= 1, x > 0}; the projection of the origin is (1,1).
  const ConvexSet hyp = hyperbola();
  CHECK((project(hyp, v2(0, 0)) - v2(1, 1)).norm() <= 1e-9);
  CHECK(project(hyp, v2(2, 3)) == v2(2, 3));
  // (4, 0) projects to (t, 1/t); minimizing (t-4)^2 + t^-2 gives t^4 - 4t^3 - 1 = 0.
  double lo = 3.0, hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid * mid * mid * mid - 4 * mid * mid * mid - 1 > 0 ? hi : lo) = mid;
  }
  CHECK((project(hyp, v2(4, 0)) - v2(lo, 1 / lo)).norm() <= 1e-8);
}

TEST_CASE("contains") {
  CHECK(contains(ConvexSet::box(v2(0, 0), v2(1, 1)), v2(0.5, 0.5), 1e-9));
  CHECK_FALSE(contains(ConvexSet::ball(Vec::Zero(2), 1.0), v2(2, 0), 1e-9));
  CHECK(contains(ConvexSet::half_space(v2(1, 1), 1.0), v2(0.5, 0.5), 1e-9));
  CHECK_THROWS_AS(contains(ConvexSet::ball(Vec::Zero(2), 1.0), Vec::Zero(3), 1e-9), Error);
}

TEST_CASE("intersect_ball") {
  const ConvexSet ray = ConvexSet::box(Vec::Zero(1), Vec::Constant(1, kInf));
  const ConvexSet seg = intersect_ball(ray, 2.0);
  for (double t = -1.0; t <= 3.0; t += 0.125) {
    CHECK(contains(seg, Vec::Constant(1, t), 1e-9) == (t >= 0 && t <= 2));
  }
  const ConvexSet disc = intersect_ball(ConvexSet::ball(Vec::Zero(2), 1.0), 2.0);
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const Vec x = 1.5 * rng.in_unit_ball(2);
    CHECK(contains(disc, x, 1e-9) == (x.norm() <= 1.0));
  }
  const ConvexSet half_disc = intersect_ball(ConvexSet::half_space(v2(0, -1), 0.0), 1.0);
  CHECK(contains(half_disc, v2(0, 0.5), 1e-9));
  CHECK_FALSE(contains(half_disc, v2(0, -0.5), 1e-9));
  CHECK_FALSE(contains(half_disc, v2(1.2, 0), 1e-9));
  CHECK_THROWS_AS(intersect_ball(ray, 0.0), Error);
  try {
    intersect_ball(ray, -1.0);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonPositiveRadius);
  }
}

TEST_CASE("intersect_ball membership agrees with the defining conjunction") {
  Rng rng(21);
  for (const ConvexSet& set : zoo()) {
    if (set.dim() != 2) continue;
    const ConvexSet cut = intersect_ball(set, 1.7);
    for (int i = 0; i < 200; ++i) {
      const Vec x = 3.0 * rng.normal_vec(2);
      // keep clear of the boundary where the tolerance decides
      const double d_set = distance(set, x);
      if (std::abs(x.norm() - 1.7) < 1e-6 || (d_set > 0 && d_set < 1e-6)) continue;
      CHECK(contains(cut, x, 1e-8) == (d_set <= 1e-8 && x.norm() <= 1.7));
    }
  }
}

TEST_CASE("projection properties across set types") {
  Rng rng(1234);
  const double tol = 1e-10;
  for (const ConvexSet& set : zoo()) {
    INFO(set.describe());
    const int n = set.dim();
    std::vector<Vec> inside;
    for (int i = 0; i < 40; ++i) inside.push_back(project(set, 4.0 * rng.normal_vec(n)));
    for (int i = 0; i < 100; ++i) {
      const Vec x = 4.0 * rng.normal_vec(n);
      const Vec y = 4.0 * rng.normal_vec(n);
      const Vec px = project(set, x);
      const Vec py = project(set, y);
      CHECK((project(set, px) - px).norm() <= 10 * tol);
      CHECK((px - py).norm() <= (x - y).norm() + 2 * tol + 1e-9);
      for (const Vec& z : inside) CHECK((x - px).dot(z - px) <= 1e-7);
    }
  }
}

TEST_CASE("bounding boxes") {
  const Bounds tri = bounding_box(triangle());
  CHECK(tri.bounded());
  CHECK(tri.upper[0] == doctest::Approx(1.0));
  CHECK(tri.lower[1] == doctest::Approx(0.0));
  CHECK_FALSE(bounding_box(ConvexSet::half_space(v2(1, 1), 0.0)).bounded());
  CHECK(bounding_box(intersect_ball(hyperbola(), 3.0)).bounded());
}

TEST_CASE("linear minimization") {
  const Vec c = v2(1, 2);
  const LinearMin box = min_linear(ConvexSet::box(v2(-1, 0), v2(1, 1)), c, Vec::Zero(2));
  CHECK(box.exact);
  CHECK(box.value == -1);
  const LinearMin ball = min_linear(ConvexSet::ball(Vec::Zero(2), 1.0), c, Vec::Zero(2));
  CHECK(ball.value == doctest::Approx(-std::sqrt(5.0)));
  CHECK(min_linear(ConvexSet::half_space(v2(1, 1), 1.0), c, Vec::Zero(2)).value == -kInf);
  CHECK(min_linear(ConvexSet::half_space(v2(-1, -2), 1.0), c, Vec::Zero(2)).value == doctest::Approx(-1.0));
  const LinearMin tri = min_linear(triangle(), v2(-1, -2), v2(0.2, 0.2));
  CHECK(tri.value == doctest::Approx(-2.0).epsilon(1e-9));
  const LinearMin disc = min_linear(intersect_ball(ConvexSet::box(v2(-5, -5), v2(5, 5)), 1.0), c, Vec::Zero(2));
  CHECK(disc.value == doctest::Approx(-std::sqrt(5.0)).epsilon(1e-7));
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(ConvexSet::box(v2(1, 0), v2(0, 1)), Error);
  CHECK_THROWS_AS(ConvexSet::ball(Vec::Zero(2), -1.0), Error);
  CHECK_THROWS_AS(ConvexSet::intersection({ConvexSet::ball(Vec::Zero(2), 1.0), ConvexSet::ball(Vec::Zero(3), 1.0)}),
                  Error);
  CHECK_THROWS_AS(project(ConvexSet::ball(Vec::Zero(2), 1.0), Vec::Zero(3)), Error);
}

TEST_CASE("empty intersections surface as EmptySetSuspected") {
  const ConvexSet empty = ConvexSet::intersection(
      {ConvexSet::ball(v2(0, 0), 1.0), ConvexSet::ball(v2(3, 0), 1.0)});
  try {
    project(empty, v2(1.5, 0), {1e-10, 500});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptySetSuspected);
  }
}
