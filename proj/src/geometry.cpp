#include "qvi/geometry.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <sstream>

namespace qvi {

namespace {

bool is_zero(const Vec& v) { return (v.array() == 0.0).all(); }

void check_same_dim(const std::vector<ConvexSet>& sets, const char* what) {
  if (sets.empty()) throw Error(Errc::InvalidSet, std::string(what) + " needs at least one member");
  for (const auto& s : sets) {
    if (s.dim() != sets.front().dim()) {
      throw Error(Errc::DimensionMismatch, std::string(what) + " members must share one dimension");
    }
  }
}

Vec project_half_space(const HalfSpace& h, const Vec& x) {
  const double sq = h.normal.squaredNorm();
  if (sq == 0.0) {
    if (h.offset >= 0.0) return x;
    throw Error(Errc::EmptySetSuspected, "half-space with zero normal and negative offset is empty");
  }
  const double excess = h.normal.dot(x) - h.offset;
  if (excess <= 0.0) return x;
  return x - (excess / sq) * h.normal;
}

Vec project_box(const Box& b, const Vec& x) { return x.cwiseMax(b.lower).cwiseMin(b.upper); }

Vec project_ball(const Ball& b, const Vec& x) {
  const Vec d = x - b.center;
  const double norm = d.norm();
  if (norm <= b.radius) return x;
  return b.center + d * (b.radius / norm);
}

// Gradient of c by forward mode, Hessian by central differences of that gradient.
Mat numeric_hessian(const expr::Expr& c, const Vec& y) {
  const Eigen::Index n = y.size();
  Mat h(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-5 * std::max(1.0, std::abs(y[j]));
    Vec up = y, down = y;
    up[j] += step;
    down[j] -= step;
    h.col(j) = (c.gradient(up) - c.gradient(down)) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

// argmin_y 1/2 |y - x|^2 + lambda c(y), by damped Newton from a warm start.
Vec penalized_argmin(const expr::Expr& c, const Vec& x, double lambda, Vec y) {
  const Eigen::Index n = x.size();
  auto phi = [&](const Vec& z) { return 0.5 * (z - x).squaredNorm() + lambda * c.eval(z); };
  double value = phi(y);
  for (int it = 0; it < 200; ++it) {
    const Vec grad = (y - x) + lambda * c.gradient(y);
    if (grad.norm() <= 1e-14 * (1.0 + x.norm() + lambda)) break;
    const Mat hess = Mat::Identity(n, n) + lambda * numeric_hessian(c, y);
    Eigen::LLT<Mat> llt(hess);
    Vec dir = llt.info() == Eigen::Success ? Vec(-llt.solve(grad)) : Vec(-grad);
    if (dir.dot(grad) >= 0.0) dir = -grad;
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k) {
      const Vec trial = y + t * dir;
      const double tv = phi(trial);
      if (tv <= value + 1e-4 * t * grad.dot(dir)) {
        y = trial;
        value = tv;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved || (t * dir).norm() <= 1e-16 * (1.0 + y.norm())) break;
  }
  return y;
}

// argmin 1/2 |z - x|^2 subject to <a_i, z> <= b_i, by a primal active-set method
// started from a feasible z.
Vec project_onto_cuts(const std::vector<HalfSpace>& cuts, const Vec& x, Vec z) {
  const Eigen::Index n = x.size();
  std::vector<std::size_t> work;
  const double scale = 1.0 + x.norm() + z.norm();
  for (std::size_t it = 0; it < 20 * cuts.size() + 100; ++it) {
    Mat A(static_cast<Eigen::Index>(work.size()), n);
    for (std::size_t k = 0; k < work.size(); ++k) A.row(static_cast<Eigen::Index>(k)) = cuts[work[k]].normal.transpose();
    const Vec r = x - z;
    Vec lambda = Vec::Zero(static_cast<Eigen::Index>(work.size()));
    Vec step = r;
    if (!work.empty()) {
      const Eigen::LDLT<Mat> gram(A * A.transpose());
      lambda = gram.solve(A * r);
      step = r - A.transpose() * lambda;
    }
    if (step.norm() <= 1e-15 * scale) {
      Eigen::Index worst = -1;
      for (Eigen::Index k = 0; k < lambda.size(); ++k) {
        if (lambda[k] < -1e-14 * scale && (worst < 0 || lambda[k] < lambda[worst])) worst = k;
      }
      if (worst < 0) return z;
      work.erase(work.begin() + worst);
      continue;
    }
    double alpha = 1.0;
    std::optional<std::size_t> blocking;
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      if (std::find(work.begin(), work.end(), i) != work.end()) continue;
      const double slope = cuts[i].normal.dot(step);
      if (slope <= 1e-15 * cuts[i].normal.norm() * step.norm()) continue;
      const double room = std::max(0.0, cuts[i].offset - cuts[i].normal.dot(z)) / slope;
      if (room < alpha) {
        alpha = room;
        blocking = i;
      }
    }
    z += alpha * step;
    if (blocking) work.push_back(*blocking);
  }
  return z;
}

// Outer approximation of {c <= 0} by supporting half-spaces at boundary points
// between a strictly feasible q and the current iterate. Exact after finitely
// many cuts when c is piecewise affine.
Vec project_sublevel_cuts(const expr::Expr& c, const Vec& x, const Vec& q, const ProjectionOptions& opts) {
  std::vector<HalfSpace> cuts;
  Vec y = x;
  Vec b = q;
  for (int k = 0; k < 200; ++k) {
    // boundary point on [q, y]
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
      const double mid = 0.5 * (lo + hi);
      (c.eval(q + mid * (y - q)) <= 0.0 ? lo : hi) = mid;
    }
    b = q + lo * (y - q);
    if ((y - b).norm() <= 0.01 * opts.tol) return b;
    const Vec g = c.gradient(b);
    if (g.norm() == 0.0) break;
    cuts.push_back({g, g.dot(b)});
    y = project_onto_cuts(cuts, x, b);
    if (c.eval(y) <= 0.0) return y;
  }
  return b;
}

Vec project_sublevel(const Sublevel& s, const Vec& x, const ProjectionOptions& opts) {
  const expr::Expr& c = s.constraint;
  const double c0 = c.eval(x);
  if (c0 <= 0.0) return x;

  // h(lambda) = c(y(lambda)) is nonincreasing; bracket its root.
  double lo = 0.0, h_lo = c0;
  Vec y_lo = x;
  double hi = 1.0;
  Vec y_hi = penalized_argmin(c, x, hi, x);
  double h_hi = c.eval(y_hi);
  while (h_hi > 0.0) {
    lo = hi;
    h_lo = h_hi;
    y_lo = y_hi;
    hi *= 4.0;
    if (hi > 1e14) throw Error(Errc::EmptySetSuspected, "sublevel set {c <= 0} appears empty");
    y_hi = penalized_argmin(c, x, hi, y_hi);
    h_hi = c.eval(y_hi);
  }
  if (h_hi == 0.0) return y_hi;
  const Vec inner = y_hi;

  // Illinois regula falsi with a bisection safeguard.
  int side = 0;
  for (int it = 0; it < 300; ++it) {
    if ((y_hi - y_lo).norm() <= 0.1 * opts.tol || hi - lo <= 1e-16 * hi) break;
    double mid = (lo * h_hi - hi * h_lo) / (h_hi - h_lo);
    if (!(mid > lo && mid < hi) || it % 4 == 3) mid = 0.5 * (lo + hi);
    const Vec y_mid = penalized_argmin(c, x, mid, y_hi);
    const double h_mid = c.eval(y_mid);
    if (h_mid > 0.0) {
      lo = mid;
      h_lo = h_mid;
      y_lo = y_mid;
      if (side == -1) h_hi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      h_hi = h_mid;
      y_hi = y_mid;
      if (h_mid == 0.0) break;
      if (side == 1) h_lo *= 0.5;
      side = 1;
    }
  }
  // The multiplier path is reliable where c is smooth; at a kink, or when the
  // residual x - y is not along the gradient, switch to cutting planes.
  const expr::GradientEstimate ge = expr::numeric_gradient(c, y_hi);
  const Vec d = x - y_hi;
  const bool aligned = ge.gradient.norm() > 0 && d.dot(ge.gradient) >= (1 - 1e-8) * d.norm() * ge.gradient.norm();
  if (ge.smooth && aligned) return y_hi;
  const Vec alt = project_sublevel_cuts(c, x, inner, opts);
  return (alt - x).norm() < (y_hi - x).norm() ? alt : y_hi;
}

void flatten_members(const ConvexSet& set, std::vector<const ConvexSet*>& out) {
  if (const auto* in = set.as<Intersection>()) {
    for (const auto& m : in->members) flatten_members(m, out);
  } else {
    out.push_back(&set);
  }
}

Vec project_dykstra(const std::vector<const ConvexSet*>& members, const Vec& x, const ProjectionOptions& opts);

// For S ∩ B(c, r): the multiplier mu of the ball constraint turns the problem into
// P_S((x + mu c) / (1 + mu)), and |P_S(.) - c| is monotone in mu, so bisect on
// s = 1 / (1 + mu). Tangential intersections that stall Dykstra are handled exactly.
Vec project_with_ball(const std::vector<const ConvexSet*>& rest, const Ball& ball, const Vec& x,
                      const ProjectionOptions& opts) {
  auto inner = [&](const Vec& z) { return project_dykstra(rest, z, opts); };
  const Vec full = inner(x);
  if ((full - ball.center).norm() <= ball.radius) return full;
  const Vec at_center = inner(ball.center);
  if ((at_center - ball.center).norm() > ball.radius + opts.tol) {
    throw Error(Errc::EmptySetSuspected, "intersection with the ball appears empty");
  }
  double lo = 0.0, hi = 1.0;
  Vec best = at_center;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double s = 0.5 * (lo + hi);
    const Vec y = inner(ball.center + s * (x - ball.center));
    if ((y - ball.center).norm() <= ball.radius) {
      lo = s;
      best = y;
    } else {
      hi = s;
    }
    if ((hi - lo) * (x - ball.center).norm() <= 0.01 * opts.tol) break;
  }
  return best;
}

// Box ∩ {<a, x> <= b}: x(l) = clamp(x - l a) makes <a, x(l)> piecewise linear and
// nonincreasing in l, so the multiplier is found exactly between breakpoints.
Vec project_box_half_space(const Box& box, const HalfSpace& h, const Vec& x) {
  auto at = [&](double l) { return project_box(box, x - l * h.normal); };
  auto phi = [&](double l) { return h.normal.dot(at(l)) - h.offset; };
  double lo = 0.0, f_lo = phi(0.0);
  if (f_lo <= 0.0) return at(0.0);
  std::vector<double> breaks;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double a = h.normal[j];
    if (a == 0.0) continue;
    for (double bound : {box.lower[j], box.upper[j]}) {
      if (!std::isfinite(bound)) continue;
      const double l = (x[j] - bound) / a;
      if (l > 0.0) breaks.push_back(l);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  for (double l : breaks) {
    const double f = phi(l);
    if (f <= 0.0) return at(lo + (l - lo) * f_lo / (f_lo - f));
    lo = l;
    f_lo = f;
  }
  const double slope = phi(lo + 1.0) - f_lo;
  if (slope < 0.0) return at(lo + f_lo / -slope);
  throw Error(Errc::EmptySetSuspected, "box and half-space do not intersect");
}

// Members that are boxes plus at most one proper half-space.
bool box_half_space_case(const std::vector<const ConvexSet*>& members, Box& box, const HalfSpace*& h) {
  h = nullptr;
  bool have_box = false;
  for (const ConvexSet* m : members) {
    if (const auto* b = m->as<Box>()) {
      if (!have_box) {
        box = *b;
        have_box = true;
      } else {
        box.lower = box.lower.cwiseMax(b->lower);
        box.upper = box.upper.cwiseMin(b->upper);
      }
    } else if (const auto* hs = m->as<HalfSpace>()) {
      if (is_zero(hs->normal) && hs->offset >= 0.0) continue;
      if (h) return false;
      h = hs;
    } else {
      return false;
    }
  }
  if (!have_box) return false;
  if ((box.lower.array() > box.upper.array()).any()) {
    throw Error(Errc::EmptySetSuspected, "intersection of boxes is empty");
  }
  return true;
}

Vec project_dykstra(const std::vector<const ConvexSet*>& members, const Vec& x, const ProjectionOptions& opts) {
  if (members.size() == 1) return project(*members.front(), x, opts);
  Box merged;
  const HalfSpace* hs = nullptr;
  if (box_half_space_case(members, merged, hs)) {
    if (!hs) return project_box(merged, x);
    if (is_zero(hs->normal)) throw Error(Errc::EmptySetSuspected, "half-space with zero normal and negative offset is empty");
    return project_box_half_space(merged, *hs, x);
  }
  std::size_t balls = 0, ball_at = 0;
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (members[j]->as<Ball>()) {
      ++balls;
      ball_at = j;
    }
  }
  if (balls == 1) {
    std::vector<const ConvexSet*> rest;
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (j != ball_at) rest.push_back(members[j]);
    }
    return project_with_ball(rest, *members[ball_at]->as<Ball>(), x, opts);
  }
  const std::size_t k = members.size();
  // A member's projection that already lies in the others is the answer.
  for (std::size_t j = 0; j < k; ++j) {
    const Vec y = project(*members[j], x, opts);
    const double tol = opts.tol * std::max(1.0, y.norm());
    bool inside = true;
    for (std::size_t i = 0; i < k && inside; ++i) {
      if (i != j) inside = (y - project(*members[i], y, opts)).norm() <= tol;
    }
    if (inside) return y;
  }
  std::vector<Vec> increments(k, Vec::Zero(x.size()));
  Vec current = x;
  double change = kInf;
  for (int sweep = 0; sweep < opts.max_iter; ++sweep) {
    const Vec previous = current;
    for (std::size_t j = 0; j < k; ++j) {
      const Vec shifted = current + increments[j];
      current = project(*members[j], shifted, opts);
      increments[j] = shifted - current;
    }
    change = (current - previous).norm();
    if (change <= opts.tol) {
      // rounding in the members' projections grows with the iterate's magnitude
      const double tol = opts.tol * std::max(1.0, current.norm());
      bool feasible = true;
      for (std::size_t j = 0; j + 1 < k && feasible; ++j) {
        feasible = (current - project(*members[j], current, opts)).norm() <= tol;
      }
      if (feasible) return current;
    }
  }
  std::ostringstream msg;
  msg << "Dykstra did not converge in " << opts.max_iter << " sweeps (last change " << change << ")";
  throw Error(Errc::EmptySetSuspected, msg.str());
}

void tighten_with_face(const HalfSpace& h, Bounds& b) {
  const Eigen::Index n = h.normal.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double aj = h.normal[j];
    if (aj == 0.0) continue;
    // a_j x_j <= offset - sum_{k != j} a_k x_k <= offset - sum_k min(a_k x_k)
    double rest = 0.0;
    for (Eigen::Index k = 0; k < n && std::isfinite(rest); ++k) {
      if (k == j || h.normal[k] == 0.0) continue;
      const double ak = h.normal[k];
      rest += ak > 0.0 ? ak * b.lower[k] : ak * b.upper[k];
    }
    if (!std::isfinite(rest)) continue;
    const double limit = (h.offset - rest) / aj;
    if (aj > 0.0) {
      b.upper[j] = std::min(b.upper[j], limit);
    } else {
      b.lower[j] = std::max(b.lower[j], limit);
    }
  }
}

void collect_faces(const ConvexSet& set, std::vector<HalfSpace>& faces) {
  if (const auto* h = set.as<HalfSpace>()) {
    faces.push_back(*h);
  } else if (const auto* poly = set.as<Polyhedron>()) {
    faces.insert(faces.end(), poly->faces.begin(), poly->faces.end());
  } else if (const auto* in = set.as<Intersection>()) {
    for (const auto& m : in->members) collect_faces(m, faces);
  }
}

// Faces of a set built only from boxes, half-spaces and polyhedra.
bool polyhedral_faces(const ConvexSet& set, std::vector<HalfSpace>& faces) {
  if (const auto* b = set.as<Box>()) {
    const Eigen::Index n = b->lower.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isfinite(b->upper[i])) faces.push_back({Vec::Unit(n, i), b->upper[i]});
      if (std::isfinite(b->lower[i])) faces.push_back({-Vec::Unit(n, i), -b->lower[i]});
    }
    return true;
  }
  if (set.as<HalfSpace>() || set.as<Polyhedron>()) {
    collect_faces(set, faces);
    return true;
  }
  if (const auto* in = set.as<Intersection>()) {
    for (const auto& m : in->members) {
      if (!polyhedral_faces(m, faces)) return false;
    }
    return true;
  }
  return false;
}

// Moves an approximate LP minimizer onto the vertex spanned by its nearly active faces.
void snap_to_vertex(const std::vector<HalfSpace>& faces, const Vec& c, LinearMin& best) {
  const Eigen::Index n = c.size();
  const double scale = 1.0 + best.argmin.lpNorm<Eigen::Infinity>();
  std::vector<const HalfSpace*> active;
  for (const auto& f : faces) {
    const double nn = f.normal.norm();
    if (nn > 0 && std::abs(f.normal.dot(best.argmin) - f.offset) <= 1e-6 * scale * nn) active.push_back(&f);
  }
  if (static_cast<Eigen::Index>(active.size()) < n) return;
  Mat a(static_cast<Eigen::Index>(active.size()), n);
  Vec b(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    a.row(i) = active[static_cast<std::size_t>(i)]->normal.transpose();
    b[i] = active[static_cast<std::size_t>(i)]->offset;
  }
  Eigen::ColPivHouseholderQR<Mat> qr(a);
  if (qr.rank() < n) return;
  const Vec v = qr.solve(b);
  for (const auto& f : faces) {
    if (f.normal.dot(v) - f.offset > 1e-12 * scale * std::max(1.0, f.normal.norm())) return;
  }
  if (c.dot(v) <= best.value + 1e-6 * scale * c.norm()) {
    best.value = c.dot(v);
    best.argmin = v;
  }
}

Bounds intersect_bounds(const Bounds& a, const Bounds& b) {
  return {a.lower.cwiseMax(b.lower), a.upper.cwiseMin(b.upper)};
}

}  // namespace

ConvexSet ConvexSet::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size()) throw Error(Errc::DimensionMismatch, "box bounds differ in length");
  if (lower.size() == 0) throw Error(Errc::InvalidSet, "box must have positive dimension");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i] || lower[i] == kInf ||
        upper[i] == -kInf) {
      throw Error(Errc::InvalidSet, "box bounds must satisfy lower <= upper in coordinate " + std::to_string(i));
    }
  }
  const int dim = static_cast<int>(lower.size());
  return ConvexSet(Box{std::move(lower), std::move(upper)}, dim);
}

ConvexSet ConvexSet::ball(Vec center, double radius) {
  if (center.size() == 0) throw Error(Errc::InvalidSet, "ball must have positive dimension");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw Error(Errc::NonPositiveRadius, "ball radius must be >= 0");
  if (!center.allFinite()) throw Error(Errc::InvalidSet, "ball center must be finite");
  const int dim = static_cast<int>(center.size());
  return ConvexSet(Ball{std::move(center), radius}, dim);
}

ConvexSet ConvexSet::half_space(Vec normal, double offset) {
  if (normal.size() == 0) throw Error(Errc::InvalidSet, "half-space must have positive dimension");
  if (!normal.allFinite() || !std::isfinite(offset)) throw Error(Errc::InvalidSet, "half-space data must be finite");
  const int dim = static_cast<int>(normal.size());
  return ConvexSet(HalfSpace{std::move(normal), offset}, dim);
}

ConvexSet ConvexSet::polyhedron(std::vector<HalfSpace> faces, int dim) {
  if (dim <= 0) throw Error(Errc::InvalidSet, "polyhedron must have positive dimension");
  for (const auto& f : faces) {
    if (f.normal.size() != dim) throw Error(Errc::DimensionMismatch, "polyhedron face has wrong dimension");
    if (!f.normal.allFinite() || !std::isfinite(f.offset)) {
      throw Error(Errc::InvalidSet, "polyhedron face data must be finite");
    }
  }
  return ConvexSet(Polyhedron{std::move(faces)}, dim);
}

ConvexSet ConvexSet::intersection(std::vector<ConvexSet> members) {
  check_same_dim(members, "intersection");
  const int dim = members.front().dim();
  return ConvexSet(Intersection{std::move(members)}, dim);
}

ConvexSet ConvexSet::product(std::vector<ConvexSet> factors) {
  if (factors.empty()) throw Error(Errc::InvalidSet, "product needs at least one factor");
  int dim = 0;
  for (const auto& f : factors) dim += f.dim();
  return ConvexSet(Product{std::move(factors)}, dim);
}

ConvexSet ConvexSet::sublevel(expr::Expr constraint, int dim) {
  if (dim <= 0) throw Error(Errc::InvalidSet, "sublevel set must have positive dimension");
  if (constraint.declaration().n_x != dim) {
    throw Error(Errc::DimensionMismatch, "sublevel constraint declared over a different dimension");
  }
  if (constraint.uses_p()) throw Error(Errc::InvalidSet, "sublevel constraint may not reference p");
  return ConvexSet(Sublevel{std::move(constraint)}, dim);
}

ConvexSet ConvexSet::whole_space(int dim) {
  return box(Vec::Constant(dim, -kInf), Vec::Constant(dim, kInf));
}

std::string ConvexSet::describe() const {
  std::ostringstream out;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        auto list = [&](const char* name, const std::vector<ConvexSet>& sets) {
          out << name << "(";
          for (std::size_t i = 0; i < sets.size(); ++i) out << (i ? ", " : "") << sets[i].describe();
          out << ")";
        };
        if constexpr (std::is_same_v<T, Box>) {
          out << "box[" << dim_ << "]";
        } else if constexpr (std::is_same_v<T, Ball>) {
          out << "ball[" << dim_ << "]";
        } else if constexpr (std::is_same_v<T, HalfSpace>) {
          out << "halfspace[" << dim_ << "]";
        } else if constexpr (std::is_same_v<T, Polyhedron>) {
          out << "polyhedron[" << dim_ << ", " << s.faces.size() << " faces]";
        } else if constexpr (std::is_same_v<T, Intersection>) {
          list("intersection", s.members);
        } else if constexpr (std::is_same_v<T, Product>) {
          list("product", s.factors);
        } else {
          out << "sublevel[" << dim_ << "](" << s.constraint.print() << " <= 0)";
        }
      },
      shape_);
  return out.str();
}

Vec project(const ConvexSet& set, const Vec& x, const ProjectionOptions& opts) {
  require_dim(x, set.dim(), "project");
  if (!x.allFinite()) throw Error(Errc::InvalidInput, "cannot project a non-finite point");
  return std::visit(
      [&](const auto& s) -> Vec {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return project_box(s, x);
        } else if constexpr (std::is_same_v<T, Ball>) {
          return project_ball(s, x);
        } else if constexpr (std::is_same_v<T, HalfSpace>) {
          return project_half_space(s, x);
        } else if constexpr (std::is_same_v<T, Polyhedron>) {
          if (s.faces.empty()) return x;
          if (s.faces.size() == 1) return project_half_space(s.faces.front(), x);
          std::vector<ConvexSet> owned;
          owned.reserve(s.faces.size());
          for (const auto& f : s.faces) owned.push_back(ConvexSet::half_space(f.normal, f.offset));
          std::vector<const ConvexSet*> members;
          for (const auto& m : owned) members.push_back(&m);
          return project_dykstra(members, x, opts);
        } else if constexpr (std::is_same_v<T, Intersection>) {
          std::vector<const ConvexSet*> members;
          flatten_members(set, members);
          return project_dykstra(members, x, opts);
        } else if constexpr (std::is_same_v<T, Product>) {
          Vec out(x.size());
          Eigen::Index offset = 0;
          for (const auto& f : s.factors) {
            out.segment(offset, f.dim()) = project(f, x.segment(offset, f.dim()), opts);
            offset += f.dim();
          }
          return out;
        } else {
          return project_sublevel(s, x, opts);
        }
      },
      set.shape());
}

double distance(const ConvexSet& set, const Vec& x, const ProjectionOptions& opts) {
  return (x - project(set, x, opts)).norm();
}

bool contains(const ConvexSet& set, const Vec& x, double tol, const ProjectionOptions& opts) {
  return distance(set, x, opts) <= tol;
}

ConvexSet intersect_ball(const ConvexSet& set, double radius) {
  if (!(radius > 0.0)) throw Error(Errc::NonPositiveRadius, "truncation radius must be positive");
  return ConvexSet::intersection({set, ConvexSet::ball(Vec::Zero(set.dim()), radius)});
}

Bounds bounding_box(const ConvexSet& set) {
  const int n = set.dim();
  Bounds all{Vec::Constant(n, -kInf), Vec::Constant(n, kInf)};
  return std::visit(
      [&](const auto& s) -> Bounds {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return {s.lower, s.upper};
        } else if constexpr (std::is_same_v<T, Ball>) {
          return {s.center.array() - s.radius, s.center.array() + s.radius};
        } else if constexpr (std::is_same_v<T, Product>) {
          Bounds out = all;
          Eigen::Index offset = 0;
          for (const auto& f : s.factors) {
            const Bounds fb = bounding_box(f);
            out.lower.segment(offset, f.dim()) = fb.lower;
            out.upper.segment(offset, f.dim()) = fb.upper;
            offset += f.dim();
          }
          return out;
        } else if constexpr (std::is_same_v<T, Sublevel>) {
          return all;
        } else {
          Bounds out = all;
          if constexpr (std::is_same_v<T, Intersection>) {
            for (const auto& m : s.members) out = intersect_bounds(out, bounding_box(m));
          }
          std::vector<HalfSpace> faces;
          collect_faces(set, faces);
          for (int round = 0; round < 4; ++round) {
            for (const auto& f : faces) tighten_with_face(f, out);
          }
          return out;
        }
      },
      set.shape());
}

LinearMin min_linear(const ConvexSet& set, const Vec& c, const Vec& anchor, const ProjectionOptions& opts) {
  require_dim(c, set.dim(), "min_linear");
  require_dim(anchor, set.dim(), "min_linear");
  if (const auto* b = set.as<Box>()) {
    LinearMin out{0.0, Vec(c.size()), true};
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      double z;
      if (c[i] > 0.0) {
        z = b->lower[i];
      } else if (c[i] < 0.0) {
        z = b->upper[i];
      } else {
        z = std::clamp(anchor[i], b->lower[i], b->upper[i]);
      }
      out.argmin[i] = z;
      if (c[i] != 0.0) out.value += c[i] * z;
    }
    return out;
  }
  if (const auto* b = set.as<Ball>()) {
    const double norm = c.norm();
    if (norm == 0.0) return {0.0, project(set, anchor, opts), true};
    const Vec z = b->center - (b->radius / norm) * c;
    return {c.dot(z), z, true};
  }
  if (const auto* h = set.as<HalfSpace>()) {
    const Vec z0 = project(set, anchor, opts);
    if (is_zero(c)) return {0.0, z0, true};
    // bounded only when c = -mu * normal with mu > 0
    const double nn = h->normal.squaredNorm();
    const double mu = nn > 0.0 ? -c.dot(h->normal) / nn : 0.0;
    if (mu > 0.0 && (c + mu * h->normal).norm() <= 1e-12 * c.norm()) {
      const Vec z = z0 - (h->normal.dot(z0) - h->offset) / nn * h->normal;
      return {c.dot(z), z, true};
    }
    return {-kInf, z0, true};
  }
  if (const auto* p = set.as<Product>()) {
    LinearMin out{0.0, Vec(c.size()), true};
    Eigen::Index offset = 0;
    for (const auto& f : p->factors) {
      const LinearMin part = min_linear(f, c.segment(offset, f.dim()), anchor.segment(offset, f.dim()), opts);
      out.value += part.value;
      out.argmin.segment(offset, f.dim()) = part.argmin;
      out.exact = out.exact && part.exact;
      offset += f.dim();
    }
    return out;
  }

  const Vec base = project(set, anchor, opts);
  LinearMin out{c.dot(base), base, false};
  const double norm = c.norm();
  if (norm == 0.0) return out;
  const Bounds bb = bounding_box(set);
  double scale = std::max(1.0, base.norm());
  if (bb.bounded()) scale = std::max(scale, (bb.upper - bb.lower).norm());
  const Vec dir = c / norm;
  for (double t = 1e-3; t <= 1e6 * 1.0001; t *= 10.0) {
    const Vec z = project(set, base - (t * scale) * dir, opts);
    const double v = c.dot(z);
    if (v < out.value) {
      out.value = v;
      out.argmin = z;
    }
  }  std::vector<HalfSpace> faces;
  if (polyhedral_faces(set, faces)) snap_to_vertex(faces, c, out);
  return out;
}

ConvexSet slice(const ConvexSet& set, const Vec& x, int offset, int dim) {
  require_dim(x, set.dim(), "slice");
  if (offset < 0 || dim <= 0 || offset + dim > set.dim()) throw Error(Errc::DimensionMismatch, "slice block out of range");
  const Eigen::Index n = set.dim();
  auto fixed_dot = [&](const Vec& a) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j < offset || j >= offset + dim) acc += a[j] * x[j];
    }
    return acc;
  };
  auto cut = [&](const HalfSpace& h) { return HalfSpace{h.normal.segment(offset, dim), h.offset - fixed_dot(h.normal)}; };
  return std::visit(
      [&](const auto& s) -> ConvexSet {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return ConvexSet::box(s.lower.segment(offset, dim), s.upper.segment(offset, dim));
        } else if constexpr (std::is_same_v<T, Ball>) {
          Vec outside = x - s.center;
          outside.segment(offset, dim).setZero();
          const double r2 = s.radius * s.radius - outside.squaredNorm();
          if (r2 < 0.0) throw Error(Errc::EmptySetSuspected, "ball slice is empty");
          return ConvexSet::ball(s.center.segment(offset, dim), std::sqrt(r2));
        } else if constexpr (std::is_same_v<T, HalfSpace>) {
          const HalfSpace h = cut(s);
          return ConvexSet::half_space(h.normal, h.offset);
        } else if constexpr (std::is_same_v<T, Polyhedron>) {
          std::vector<HalfSpace> faces;
          for (const auto& f : s.faces) faces.push_back(cut(f));
          return ConvexSet::polyhedron(std::move(faces), dim);
        } else if constexpr (std::is_same_v<T, Intersection>) {
          std::vector<ConvexSet> members;
          for (const auto& m : s.members) members.push_back(slice(m, x, offset, dim));
          return members.size() == 1 ? members.front() : ConvexSet::intersection(std::move(members));
        } else if constexpr (std::is_same_v<T, Product>) {
          int start = 0;
          for (const auto& f : s.factors) {
            const int end = start + f.dim();
            if (offset >= start && offset + dim <= end) {
              return slice(f, x.segment(start, f.dim()), offset - start, dim);
            }
            if (offset < end && offset + dim > start) {
              throw Error(Errc::InvalidSet, "slice block straddles product factors");
            }
            start = end;
          }
          throw Error(Errc::InvalidSet, "slice block outside the product");
        } else {
          return ConvexSet::sublevel(s.constraint.restrict_block(x, offset, dim), dim);
        }
      },
      set.shape());
}

std::vector<int> block_dims(const ConvexSet& set) {
  if (const auto* p = set.as<Product>()) {
    std::vector<int> dims;
    for (const auto& f : p->factors) dims.push_back(f.dim());
    return dims;
  }
  return {set.dim()};
}

}  // namespace qvi
