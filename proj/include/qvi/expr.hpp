#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qvi/common.hpp"

/// A small, total expression language for utilities, objectives, operator
/// components and parametric set data.
///
/// Grammar (lowest to highest precedence):
///
///     expr     := term (('+' | '-') term)*
///     term     := unary (('*' | '/') unary)*
///     unary    := '-' unary | power
///     power    := primary ('^' unary)?          (right associative)
///     primary  := NUMBER | VAR | CALL | '(' expr ')'
///     CALL     := abs(e) | min(e, ...) | max(e, ...) | norm1(e, ...)
///               | norm2(e, ...) | piecewise(e <= e, e, e)
///     VAR      := x1 .. xN | p1 .. pM
///
/// Exponents must fold to an integer constant at parse time.
namespace qvi::expr {

enum class Op {
  Literal,
  VarX,
  VarP,
  Neg,
  Abs,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Min,
  Max,
  Norm1,
  Norm2,
  Piecewise,  // args: lhs, rhs, then, else; branch taken when lhs <= rhs
};

struct Node {
  Op op = Op::Literal;
  double value = 0.0;  // Literal
  int index = 0;       // VarX/VarP: 0-based index; Pow: integer exponent
  std::vector<Node> args;

  friend bool operator==(const Node& a, const Node& b);
};

/// Number of x- and p-variables an expression may reference.
struct Declaration {
  int n_x = 0;
  int n_p = 0;
};

class Expr {
 public:
  Expr() = default;
  Expr(Node root, Declaration decl) : root_(std::move(root)), decl_(decl) {}

  static Expr parse(std::string_view source, Declaration decl);
  static Expr constant(double value, Declaration decl = {});

  /// Throws DivisionByZero / DomainError; never returns inf from a division.
  double eval(const Vec& x, const Vec& p = Vec()) const;

  /// Directional derivative of the expression at x along dx (forward mode).
  /// Kinks take the branch selected by the primal value.
  double directional(const Vec& x, const Vec& dx, const Vec& p = Vec()) const;

  /// Gradient with respect to x by forward-mode differentiation.
  Vec gradient(const Vec& x, const Vec& p = Vec()) const;

  std::string print() const;

  /// Copy over dim variables in which x-variables outside [offset, offset+dim)
  /// are replaced by the literal values from x; the block is renumbered from x1.
  Expr restrict_block(const Vec& x, int offset, int dim) const;

  /// Copy with every p-variable replaced by its value.
  Expr bind_p(const Vec& p) const;

  const Node& root() const { return root_; }
  Declaration declaration() const { return decl_; }
  bool uses_p() const;

  friend bool operator==(const Expr& a, const Expr& b) { return a.root_ == b.root_; }

 private:
  Node root_;
  Declaration decl_;
};

struct GradientEstimate {
  Vec gradient;
  /// False when forward and backward differences disagree beyond kink_tol in
  /// some coordinate.
  bool smooth = true;
};

/// Central-difference gradient with a kink detector.
GradientEstimate numeric_gradient(const Expr& e, const Vec& x, const Vec& p = Vec(), double h = 1e-6,
                                  double kink_tol = 1e-4);

}  // namespace qvi::expr
