#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qvi/common.hpp"
#include "qvi/expr.hpp"

namespace qvi {

class ConvexSet;

/// Axis-aligned box; entries may be +-infinity.
struct Box {
  Vec lower;
  Vec upper;
};

struct Ball {
  Vec center;
  double radius = 0.0;
};

/// { x : <normal, x> <= offset }. A zero normal denotes either the whole
/// space (offset >= 0) or the empty set.
struct HalfSpace {
  Vec normal;
  double offset = 0.0;
};

struct Polyhedron {
  std::vector<HalfSpace> faces;
};

struct Intersection {
  std::vector<ConvexSet> members;
};

/// Cartesian product; factor i acts on the i-th consecutive block.
struct Product {
  std::vector<ConvexSet> factors;
};

/// { x : c(x) <= 0 } for a convex, continuously differentiable c. Convexity
/// is the caller's responsibility.
struct Sublevel {
  expr::Expr constraint;
};

class ConvexSet {
 public:
  using Shape = std::variant<Box, Ball, HalfSpace, Polyhedron, Intersection, Product, Sublevel>;

  static ConvexSet box(Vec lower, Vec upper);
  static ConvexSet ball(Vec center, double radius);
  static ConvexSet half_space(Vec normal, double offset);
  static ConvexSet polyhedron(std::vector<HalfSpace> faces, int dim);
  static ConvexSet intersection(std::vector<ConvexSet> members);
  static ConvexSet product(std::vector<ConvexSet> factors);
  static ConvexSet sublevel(expr::Expr constraint, int dim);
  static ConvexSet whole_space(int dim);

  int dim() const { return dim_; }
  const Shape& shape() const { return shape_; }

  template <class T>
  const T* as() const {
    return std::get_if<T>(&shape_);
  }

  /// Short human-readable description, e.g. "box[2]" or "intersection(box[2], ball[2])".
  std::string describe() const;

 private:
  ConvexSet(Shape shape, int dim) : shape_(std::move(shape)), dim_(dim) {}

  Shape shape_;
  int dim_ = 0;
};

struct ProjectionOptions {
  double tol = 1e-10;
  int max_iter = 10000;
};

/// Euclidean projection. Closed forms for Box, Ball and HalfSpace; Dykstra's
/// algorithm for Polyhedron and Intersection; a bracketed Lagrange-multiplier
/// search for Sublevel.
Vec project(const ConvexSet& set, const Vec& x, const ProjectionOptions& opts = {});

double distance(const ConvexSet& set, const Vec& x, const ProjectionOptions& opts = {});

bool contains(const ConvexSet& set, const Vec& x, double tol, const ProjectionOptions& opts = {});

/// set ∩ closed ball of the given radius around the origin.
ConvexSet intersect_ball(const ConvexSet& set, double radius);

struct Bounds {
  Vec lower;
  Vec upper;

  bool bounded() const { return lower.allFinite() && upper.allFinite(); }
};

/// Coordinate bounds implied by the set description (not necessarily tight).
Bounds bounding_box(const ConvexSet& set);

struct LinearMin {
  double value = 0.0;
  Vec argmin;
  bool exact = false;
};

/// min over the set of <c, z>. Exact for boxes, balls, half-spaces and
/// products of those; otherwise approximated by projecting points far along
/// -c from the anchor, which is exact at polyhedral vertices and converges
/// like 1/t on curved boundaries. value is -inf when the set is unbounded
/// in direction -c (closed-form cases only).
LinearMin min_linear(const ConvexSet& set, const Vec& c, const Vec& anchor, const ProjectionOptions& opts = {});

/// { z in R^dim : x with block [offset, offset+dim) replaced by z lies in set }.
/// x supplies the fixed coordinates; EmptySetSuspected when the slice is
/// visibly empty.
ConvexSet slice(const ConvexSet& set, const Vec& x, int offset, int dim);

/// Block dimensions of a Product set, or {dim} for anything else.
std::vector<int> block_dims(const ConvexSet& set);

}  // namespace qvi
