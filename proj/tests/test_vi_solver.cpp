#include "doctest.h"

#include <Eigen/Dense>

#include "qvi/rng.hpp"
#include "qvi/vi_solver.hpp"

using namespace qvi;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

SetValuedOperator affine(const Mat& A, const Vec& b) {
  return SetValuedOperator(static_cast<int>(b.size()), static_cast<int>(b.size()),
                           [A, b](const Vec& x) { return std::vector<Vec>{A * x + b}; });
}

// VI(Ax + b, box) by enumerating which coordinates sit at the lower bound, the
// upper bound or are free, then checking the sign conditions.
Vec box_kkt(const Mat& A, const Vec& b, const Vec& lo, const Vec& hi) {
  const int n = static_cast<int>(b.size());
  int total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  for (int code = 0; code < total; ++code) {
    std::vector<int> state(n);
    for (int i = 0, c = code; i < n; ++i, c /= 3) state[i] = c % 3;
    Vec x = Vec::Zero(n);
    std::vector<int> free;
    for (int i = 0; i < n; ++i) {
      if (state[i] == 0) x[i] = lo[i];
      if (state[i] == 1) x[i] = hi[i];
      if (state[i] == 2) free.push_back(i);
    }
    if (!free.empty()) {
      const int k = static_cast<int>(free.size());
      Mat Aff(k, k);
      Vec rhs(k);
      for (int r = 0; r < k; ++r) {
        rhs[r] = -b[free[r]];
        for (int j = 0; j < n; ++j) {
          if (state[j] != 2) rhs[r] -= A(free[r], j) * x[j];
        }
        for (int c = 0; c < k; ++c) Aff(r, c) = A(free[r], free[c]);
      }
      const Vec sol = Aff.partialPivLu().solve(rhs);
      for (int r = 0; r < k; ++r) x[free[r]] = sol[r];
    }
    const Vec F = A * x + b;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (x[i] < lo[i] - 1e-12 || x[i] > hi[i] + 1e-12) ok = false;
      if (state[i] == 0 && F[i] < -1e-12) ok = false;
      if (state[i] == 1 && F[i] > 1e-12) ok = false;
    }
    if (ok) return x;
  }
  FAIL("no KKT point");
  return Vec();
}

// VI(Ax + b, ball(0, r)) for symmetric positive definite A: x(mu) = -(A + mu I)^-1 b
// has decreasing norm in mu, so bisect on the multiplier.
Vec ball_kkt(const Mat& A, const Vec& b, double r) {
  const int n = static_cast<int>(b.size());
  auto x_of = [&](double mu) -> Vec { return (A + mu * Mat::Identity(n, n)).ldlt().solve(-b); };
  if (x_of(0).norm() <= r) return x_of(0);
  double lo = 0.0, hi = 1.0;
  while (x_of(hi).norm() > r) hi *= 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (x_of(mid).norm() > r ? lo : hi) = mid;
  }
  return x_of(hi);
}

Mat random_spd(Rng& rng, int n) {
  Mat B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = rng.normal();
  return B * B.transpose() + 0.5 * Mat::Identity(n, n);
}

}  // namespace

TEST_CASE("natural residual examples") {
  const ViProblem id{catalog_operator("identity", 2), ConvexSet::ball(Vec::Zero(2), 1.0)};
  CHECK(natural_residual(id, Vec::Zero(2)) == 0.0);
  const ViProblem cst{SetValuedOperator::constant(v2(1, 1)), ConvexSet::box(v2(0, 0), v2(1, 1))};
  CHECK(natural_residual(cst, v2(0, 0)) == 0.0);
  CHECK(natural_residual(cst, v2(1, 1), 1.0) == doctest::Approx(std::sqrt(2.0)));
  try {
    natural_residual(cst, v2(2, 0));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InfeasiblePoint);
  }
}

TEST_CASE("solve_vi examples") {
  const ViProblem shifted{affine(Mat::Identity(2, 2), v2(-0.3, -0.4)), ConvexSet::ball(Vec::Zero(2), 1.0)};
  const ViSolution s1 = solve_vi(shifted);
  CHECK((s1.x - v2(0.3, 0.4)).norm() <= 1e-7);
  CHECK(s1.residual <= 1e-8);

  const ViProblem boxed{affine(2 * Mat::Identity(2, 2), v2(-2, -2)), ConvexSet::box(v2(0, 0), v2(3, 3))};
  const ViSolution s2 = solve_vi(boxed);
  CHECK((s2.x - v2(1, 1)).norm() <= 1e-7);

  // segment-valued G on [0,1] x [0,r]: every selection is a positive vector,
  // so the origin corner solves it
  const ViProblem seg{catalog_operator("segment-G", 2), ConvexSet::box(v2(0, 0), v2(1, 2))};
  const ViSolution s3 = solve_vi(seg);
  CHECK(s3.x.norm() <= 1e-8);
  CHECK(s3.residual == 0.0);
}

TEST_CASE("solve_vi requires a bounded set") {
  const ViProblem open{catalog_operator("identity", 2), ConvexSet::half_space(v2(1, 0), 0.0)};
  try {
    solve_vi(open);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotCompact);
  }
}

TEST_CASE("star solutions") {
  const ViProblem cst{SetValuedOperator::constant(v2(2, 2)), ConvexSet::box(v2(0, 0), v2(1, 1))};
  const ViSolution s = solve_vi_star(cst);
  CHECK(s.star);
  CHECK(s.x.norm() <= 1e-9);
  CHECK(s.x_star == v2(2, 2));

  const ViProblem zero{SetValuedOperator::zero(2, 2), ConvexSet::box(v2(0, 0), v2(1, 1))};
  try {
    solve_vi_star(zero);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OnlyTrivialCertificates);
  }
}

TEST_CASE("non-convergence carries the best candidate") {
  // a rotation field needs many extragradient steps; one is not enough
  const ViProblem rot{affine((Mat(2, 2) << 0, 1, -1, 0).finished(), v2(0.3, 0.1)), ConvexSet::ball(v2(0, 0), 1.0)};
  SolverConfig cfg;
  cfg.max_iter = 1;
  cfg.n_starts = 2;
  try {
    solve_vi(rot, cfg);
    FAIL("no error");
  } catch (const NoConvergence& e) {
    CHECK(e.code() == Errc::NoConvergence);
    CHECK(e.best().residual > cfg.tol);
    CHECK(e.best().x.size() == 2);
  }
}

TEST_CASE("minty check examples") {
  const ViProblem id{catalog_operator("identity", 2), ConvexSet::ball(Vec::Zero(2), 1.0)};
  CHECK(check_minty(id, Vec::Zero(2), 1000).pass);
  const MintyResult bad = check_minty(id, v2(1, 0), 1000);
  CHECK_FALSE(bad.pass);
  CHECK(bad.value < 0);
  CHECK(bad.v_star.dot(bad.v - v2(1, 0)) == bad.value);
  const ViProblem cst{SetValuedOperator::constant(v2(1, 1)), ConvexSet::box(v2(0, 0), v2(1, 1))};
  CHECK(check_minty(cst, v2(0, 0), 1000).pass);
}

TEST_CASE("affine strongly monotone VIs match the KKT oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 4;
    const Mat A = random_spd(rng, n);
    const Vec b = 2.0 * rng.normal_vec(n);
    Vec expected;
    ConvexSet K = ConvexSet::whole_space(n);
    if (trial % 2 == 0) {
      Vec lo(n), hi(n);
      for (int i = 0; i < n; ++i) {
        lo[i] = rng.uniform(-2, 0);
        hi[i] = lo[i] + rng.uniform(0.5, 2);
      }
      K = ConvexSet::box(lo, hi);
      expected = box_kkt(A, b, lo, hi);
    } else {
      const double r = rng.uniform(0.3, 1.5);
      K = ConvexSet::ball(Vec::Zero(n), r);
      expected = ball_kkt(A, b, r);
    }
    const ViProblem P{affine(A, b), K};
    const ViSolution s = solve_vi(P);
    INFO("trial " << trial);
    CHECK((s.x - expected).norm() <= 1e-6);
    CHECK(s.residual <= 1e-8);
    // sampled Stampacchia inequality and Minty check (monotone, so pseudomonotone)
    CHECK(stampacchia_worst(P, s.x, s.x_star, 1000, trial) >= -1e-7);
    CHECK(check_minty(P, s.x, 500, trial, 1e-7).pass);
  }
}

TEST_CASE("solutions are deterministic in the seed") {
  Rng rng(5);
  const Mat A = random_spd(rng, 3);
  const Vec b = rng.normal_vec(3);
  const ViProblem P{affine(A, b), ConvexSet::ball(Vec::Zero(3), 0.5)};
  SolverConfig cfg;
  cfg.seed = 99;
  const ViSolution a = solve_vi(P, cfg);
  const ViSolution c = solve_vi(P, cfg);
  CHECK(a.x == c.x);
  CHECK(a.residual == c.residual);
  CHECK(a.iterations == c.iterations);
  const std::vector<ViSolution> all = solve_vi_all(P, cfg);
  CHECK(all.size() == 8);
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1].start <= all[i].start);
}
