#include "qvi/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace qvi::expr {

bool operator==(const Node& a, const Node& b) {
  if (a.op != b.op || a.args.size() != b.args.size()) return false;
  switch (a.op) {
    case Op::Literal:
      if (a.value != b.value) return false;
      break;
    case Op::VarX:
    case Op::VarP:
    case Op::Pow:
      if (a.index != b.index) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!(a.args[i] == b.args[i])) return false;
  }
  return true;
}

namespace {

// ---------------------------------------------------------------- lexer --

enum class Tok { Number, Ident, LParen, RParen, Comma, Plus, Minus, Star, Slash, Caret, LessEq, End };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        lex_number(t);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          advance();
        }
        t.kind = Tok::Ident;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else {
        switch (c) {
          case '(': t.kind = Tok::LParen; break;
          case ')': t.kind = Tok::RParen; break;
          case ',': t.kind = Tok::Comma; break;
          case '+': t.kind = Tok::Plus; break;
          case '-': t.kind = Tok::Minus; break;
          case '*': t.kind = Tok::Star; break;
          case '/': t.kind = Tok::Slash; break;
          case '^': t.kind = Tok::Caret; break;
          case '<':
            if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
              advance();
              t.kind = Tok::LessEq;
              break;
            }
            [[fallthrough]];
          default:
            throw SyntaxError(Errc::SyntaxError, std::string("unexpected character '") + c + "'", line_, col_);
        }
        t.text = std::string(1, c);
        advance();
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  void lex_number(Token& t) {
    const std::size_t start = pos_;
    const std::size_t line = line_, col = col_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
      advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        while (pos_ < look) advance();
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
      }
    }
    const std::string_view text = src_.substr(start, pos_ - start);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc::result_out_of_range) {
      throw SyntaxError(Errc::SyntaxError, "number out of range '" + std::string(text) + "'", line, col);
    }
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw SyntaxError(Errc::SyntaxError, "malformed number '" + std::string(text) + "'", line, col);
    }
    t.kind = Tok::Number;
    t.text = std::string(text);
    t.number = value;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

// --------------------------------------------------------------- parser --

Node make(Op op, std::vector<Node> args = {}) {
  Node n;
  n.op = op;
  n.args = std::move(args);
  return n;
}

bool constant_value(const Node& n, double& out);

class Parser {
 public:
  Parser(std::vector<Token> tokens, Declaration decl) : toks_(std::move(tokens)), decl_(decl) {}

  Node run() {
    Node n = expression();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return n;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg, Errc code = Errc::SyntaxError) const {
    throw SyntaxError(code, msg, peek().line, peek().column);
  }

  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) {
      fail(std::string("expected ") + what + (peek().kind == Tok::End ? " before end of input" : ", found '" + peek().text + "'"));
    }
    ++pos_;
  }

  Node expression() {
    Node lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const Op op = take().kind == Tok::Plus ? Op::Add : Op::Sub;
      Node rhs = term();
      lhs = make(op, {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  Node term() {
    Node lhs = unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const Op op = take().kind == Tok::Star ? Op::Mul : Op::Div;
      Node rhs = unary();
      lhs = make(op, {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  Node unary() {
    if (peek().kind == Tok::Minus) {
      ++pos_;
      return make(Op::Neg, {unary()});
    }
    return power();
  }

  Node power() {
    Node base = primary();
    if (peek().kind != Tok::Caret) return base;
    ++pos_;
    const Token& at = peek();
    Node exponent = unary();
    double value = 0.0;
    if (!constant_value(exponent, value)) {
      throw SyntaxError(Errc::SyntaxError, "exponent must be an integer constant", at.line, at.column);
    }
    if (value != std::floor(value) || std::abs(value) > 1e6) {
      throw SyntaxError(Errc::SyntaxError, "exponent must be an integer constant", at.line, at.column);
    }
    Node n = make(Op::Pow, {std::move(base)});
    n.index = static_cast<int>(value);
    return n;
  }

  Node primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        ++pos_;
        Node n;
        n.op = Op::Literal;
        n.value = t.number;
        return n;
      }
      case Tok::LParen: {
        ++pos_;
        Node inner = expression();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Ident:
        return identifier();
      case Tok::End:
        fail("unexpected end of input");
      default:
        fail("unexpected '" + t.text + "'");
    }
  }

  Node identifier() {
    const Token t = take();
    if (peek().kind == Tok::LParen) return call(t);
    if (t.text.size() >= 2 && (t.text[0] == 'x' || t.text[0] == 'p')) {
      const std::string digits = t.text.substr(1);
      const bool numeric = std::all_of(digits.begin(), digits.end(),
                                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
      if (numeric && digits[0] != '0') {
        const long k = std::strtol(digits.c_str(), nullptr, 10);
        const int limit = t.text[0] == 'x' ? decl_.n_x : decl_.n_p;
        if (k >= 1 && k <= limit) {
          Node n;
          n.op = t.text[0] == 'x' ? Op::VarX : Op::VarP;
          n.index = static_cast<int>(k - 1);
          return n;
        }
        throw SyntaxError(Errc::UnknownIdentifier,
                          "variable '" + t.text + "' outside declared range (" + t.text.substr(0, 1) + "1.." +
                              t.text.substr(0, 1) + std::to_string(limit) + ")",
                          t.line, t.column);
      }
    }
    throw SyntaxError(Errc::UnknownIdentifier, "unknown identifier '" + t.text + "'", t.line, t.column);
  }

  Node call(const Token& name) {
    Op op;
    std::size_t min_args = 1, max_args = static_cast<std::size_t>(-1);
    if (name.text == "abs") {
      op = Op::Abs;
      max_args = 1;
    } else if (name.text == "min") {
      op = Op::Min;
    } else if (name.text == "max") {
      op = Op::Max;
    } else if (name.text == "norm1") {
      op = Op::Norm1;
    } else if (name.text == "norm2") {
      op = Op::Norm2;
    } else if (name.text == "piecewise") {
      return piecewise(name);
    } else {
      throw SyntaxError(Errc::UnknownIdentifier, "unknown function '" + name.text + "'", name.line, name.column);
    }
    expect(Tok::LParen, "'('");
    std::vector<Node> args;
    if (peek().kind != Tok::RParen) {
      args.push_back(expression());
      while (peek().kind == Tok::Comma) {
        ++pos_;
        args.push_back(expression());
      }
    }
    expect(Tok::RParen, "')'");
    if (args.size() < min_args || args.size() > max_args) {
      throw SyntaxError(Errc::ArityError, "wrong number of arguments to '" + name.text + "'", name.line,
                        name.column);
    }
    return make(op, std::move(args));
  }

  Node piecewise(const Token& name) {
    expect(Tok::LParen, "'('");
    std::vector<Node> args;
    args.push_back(expression());
    if (peek().kind != Tok::LessEq) {
      throw SyntaxError(Errc::ArityError, "piecewise expects a '<=' condition as first argument", name.line,
                        name.column);
    }
    ++pos_;
    args.push_back(expression());
    for (int i = 0; i < 2; ++i) {
      if (peek().kind != Tok::Comma) {
        throw SyntaxError(Errc::ArityError, "piecewise expects 3 arguments", name.line, name.column);
      }
      ++pos_;
      args.push_back(expression());
    }
    if (peek().kind == Tok::Comma) {
      throw SyntaxError(Errc::ArityError, "piecewise expects 3 arguments", name.line, name.column);
    }
    expect(Tok::RParen, "')'");
    return make(Op::Piecewise, std::move(args));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Declaration decl_;
};

// ------------------------------------------------------------ evaluation --

struct Dual {
  double v;
  double d;
};

inline double value_of(double a) { return a; }
inline double value_of(const Dual& a) { return a.v; }

inline double lift(double v, double) { return v; }

double ipow(double base, int k) {
  if (k < 0) {
    if (base == 0.0) throw Error(Errc::DomainError, "zero raised to a negative power");
    return 1.0 / ipow(base, -k);
  }
  double result = 1.0;
  double b = base;
  unsigned e = static_cast<unsigned>(k);
  while (e != 0) {
    if (e & 1U) result *= b;
    b *= b;
    e >>= 1U;
  }
  return result;
}

struct DoubleOps {
  using T = double;
  static T lit(double v) { return v; }
  static T neg(T a) { return -a; }
  static T abs(T a) { return std::abs(a); }
  static T add(T a, T b) { return a + b; }
  static T sub(T a, T b) { return a - b; }
  static T mul(T a, T b) { return a * b; }
  static T div(T a, T b) {
    if (b == 0.0) throw Error(Errc::DivisionByZero, "division by zero");
    return a / b;
  }
  static T pow(T a, int k) { return ipow(a, k); }
  static T sqrt_sum_sq(const std::vector<T>& xs) {
    double s = 0.0;
    for (double x : xs) s += x * x;
    return std::sqrt(s);
  }
};

struct DualOps {
  using T = Dual;
  static T lit(double v) { return {v, 0.0}; }
  static T neg(T a) { return {-a.v, -a.d}; }
  static T abs(T a) {
    if (a.v > 0) return a;
    if (a.v < 0) return neg(a);
    return {0.0, std::abs(a.d)};  // one-sided derivative along the direction
  }
  static T add(T a, T b) { return {a.v + b.v, a.d + b.d}; }
  static T sub(T a, T b) { return {a.v - b.v, a.d - b.d}; }
  static T mul(T a, T b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
  static T div(T a, T b) {
    if (b.v == 0.0) throw Error(Errc::DivisionByZero, "division by zero");
    return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
  }
  static T pow(T a, int k) {
    if (k == 0) return {1.0, 0.0};
    const double v = ipow(a.v, k);
    const double dv = static_cast<double>(k) * ipow(a.v, k - 1);
    return {v, dv * a.d};
  }
  static T sqrt_sum_sq(const std::vector<T>& xs) {
    double s = 0.0, ds = 0.0;
    for (const Dual& x : xs) {
      s += x.v * x.v;
      ds += x.v * x.d;
    }
    const double r = std::sqrt(s);
    if (r == 0.0) {
      double dd = 0.0;
      for (const Dual& x : xs) dd += x.d * x.d;
      return {0.0, std::sqrt(dd)};
    }
    return {r, ds / r};
  }
};

template <class Ops>
typename Ops::T eval_node(const Node& n, const typename Ops::T* x, const typename Ops::T* p) {
  using T = typename Ops::T;
  switch (n.op) {
    case Op::Literal: return Ops::lit(n.value);
    case Op::VarX: return x[n.index];
    case Op::VarP: return p[n.index];
    case Op::Neg: return Ops::neg(eval_node<Ops>(n.args[0], x, p));
    case Op::Abs: return Ops::abs(eval_node<Ops>(n.args[0], x, p));
    case Op::Add: return Ops::add(eval_node<Ops>(n.args[0], x, p), eval_node<Ops>(n.args[1], x, p));
    case Op::Sub: return Ops::sub(eval_node<Ops>(n.args[0], x, p), eval_node<Ops>(n.args[1], x, p));
    case Op::Mul: return Ops::mul(eval_node<Ops>(n.args[0], x, p), eval_node<Ops>(n.args[1], x, p));
    case Op::Div: return Ops::div(eval_node<Ops>(n.args[0], x, p), eval_node<Ops>(n.args[1], x, p));
    case Op::Pow: return Ops::pow(eval_node<Ops>(n.args[0], x, p), n.index);
    case Op::Min:
    case Op::Max: {
      T best = eval_node<Ops>(n.args[0], x, p);
      for (std::size_t i = 1; i < n.args.size(); ++i) {
        T v = eval_node<Ops>(n.args[i], x, p);
        const bool better = n.op == Op::Min ? value_of(v) < value_of(best) : value_of(v) > value_of(best);
        if (better) best = v;
      }
      return best;
    }
    case Op::Norm1: {
      T acc = Ops::lit(0.0);
      for (const Node& a : n.args) acc = Ops::add(acc, Ops::abs(eval_node<Ops>(a, x, p)));
      return acc;
    }
    case Op::Norm2: {
      std::vector<T> vals;
      vals.reserve(n.args.size());
      for (const Node& a : n.args) vals.push_back(eval_node<Ops>(a, x, p));
      return Ops::sqrt_sum_sq(vals);
    }
    case Op::Piecewise: {
      const T lhs = eval_node<Ops>(n.args[0], x, p);
      const T rhs = eval_node<Ops>(n.args[1], x, p);
      return value_of(lhs) <= value_of(rhs) ? eval_node<Ops>(n.args[2], x, p) : eval_node<Ops>(n.args[3], x, p);
    }
  }
  return Ops::lit(0.0);
}

bool constant_value(const Node& n, double& out) {
  bool has_var = false;
  auto scan = [&](auto&& self, const Node& m) -> void {
    if (m.op == Op::VarX || m.op == Op::VarP) has_var = true;
    for (const Node& a : m.args) self(self, a);
  };
  scan(scan, n);
  if (has_var) return false;
  out = eval_node<DoubleOps>(n, nullptr, nullptr);
  return true;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void print_node(const Node& n, std::string& out) {
  auto binary = [&](const char* op) {
    out += '(';
    print_node(n.args[0], out);
    out += op;
    print_node(n.args[1], out);
    out += ')';
  };
  auto call = [&](const char* name) {
    out += name;
    out += '(';
    for (std::size_t i = 0; i < n.args.size(); ++i) {
      if (i) out += ", ";
      print_node(n.args[i], out);
    }
    out += ')';
  };
  switch (n.op) {
    case Op::Literal:
      if (n.value < 0 || std::signbit(n.value)) {
        out += "(-" + format_number(-n.value) + ")";
      } else {
        out += format_number(n.value);
      }
      break;
    case Op::VarX: out += "x" + std::to_string(n.index + 1); break;
    case Op::VarP: out += "p" + std::to_string(n.index + 1); break;
    case Op::Neg:
      out += "-(";
      print_node(n.args[0], out);
      out += ')';
      break;
    case Op::Abs: call("abs"); break;
    case Op::Add: binary(" + "); break;
    case Op::Sub: binary(" - "); break;
    case Op::Mul: binary(" * "); break;
    case Op::Div: binary(" / "); break;
    case Op::Pow:
      out += '(';
      print_node(n.args[0], out);
      out += ")^" + std::to_string(n.index);
      break;
    case Op::Min: call("min"); break;
    case Op::Max: call("max"); break;
    case Op::Norm1: call("norm1"); break;
    case Op::Norm2: call("norm2"); break;
    case Op::Piecewise:
      out += "piecewise(";
      print_node(n.args[0], out);
      out += " <= ";
      print_node(n.args[1], out);
      out += ", ";
      print_node(n.args[2], out);
      out += ", ";
      print_node(n.args[3], out);
      out += ')';
      break;
  }
}

bool node_uses_p(const Node& n) {
  if (n.op == Op::VarP) return true;
  for (const Node& a : n.args) {
    if (node_uses_p(a)) return true;
  }
  return false;
}

Node substitute(const Node& n, const Vec& x, int offset, int dim, const Vec* p) {
  if (n.op == Op::VarX) {
    if (n.index >= offset && n.index < offset + dim) {
      Node out = n;
      out.index -= offset;
      return out;
    }
    Node lit;
    lit.value = x[n.index];
    return lit;
  }
  if (n.op == Op::VarP && p != nullptr) {
    Node lit;
    lit.value = (*p)[n.index];
    return lit;
  }
  Node out = n;
  for (Node& a : out.args) a = substitute(a, x, offset, dim, p);
  return out;
}

}  // namespace

Expr Expr::restrict_block(const Vec& x, int offset, int dim) const {
  if (x.size() < decl_.n_x || offset < 0 || dim < 0 || offset + dim > decl_.n_x) {
    throw Error(Errc::DimensionMismatch, "restrict_block: block outside the declared variables");
  }
  return Expr(substitute(root_, x, offset, dim, nullptr), {dim, decl_.n_p});
}

Expr Expr::bind_p(const Vec& p) const {
  if (p.size() < decl_.n_p) throw Error(Errc::DimensionMismatch, "bind_p: too few parameter values");
  const Vec none = Vec::Zero(decl_.n_x);
  return Expr(substitute(root_, none, 0, decl_.n_x, &p), {decl_.n_x, 0});
}

Expr Expr::parse(std::string_view source, Declaration decl) {
  Parser parser(Lexer(source).run(), decl);
  return Expr(parser.run(), decl);
}

Expr Expr::constant(double value, Declaration decl) {
  Node n;
  n.op = Op::Literal;
  n.value = value;
  return Expr(std::move(n), decl);
}

double Expr::eval(const Vec& x, const Vec& p) const {
  if (x.size() < decl_.n_x || p.size() < decl_.n_p) {
    throw Error(Errc::DimensionMismatch, "expression expects " + std::to_string(decl_.n_x) + " x-values and " +
                                             std::to_string(decl_.n_p) + " p-values");
  }
  return eval_node<DoubleOps>(root_, x.data(), p.data());
}

double Expr::directional(const Vec& x, const Vec& dx, const Vec& p) const {
  if (x.size() < decl_.n_x || dx.size() != x.size() || p.size() < decl_.n_p) {
    throw Error(Errc::DimensionMismatch, "directional derivative: dimension mismatch");
  }
  std::vector<Dual> xs(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) xs[static_cast<std::size_t>(i)] = {x[i], dx[i]};
  std::vector<Dual> ps(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) ps[static_cast<std::size_t>(i)] = {p[i], 0.0};
  return eval_node<DualOps>(root_, xs.data(), ps.data()).d;
}

Vec Expr::gradient(const Vec& x, const Vec& p) const {
  Vec g(x.size());
  Vec e = Vec::Zero(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    e[i] = 1.0;
    g[i] = directional(x, e, p);
    e[i] = 0.0;
  }
  return g;
}

std::string Expr::print() const {
  std::string out;
  print_node(root_, out);
  return out;
}

bool Expr::uses_p() const { return node_uses_p(root_); }

GradientEstimate numeric_gradient(const Expr& e, const Vec& x, const Vec& p, double h, double kink_tol) {
  if (!(h > 0)) throw Error(Errc::InvalidInput, "numeric_gradient: step must be positive");
  GradientEstimate out;
  out.gradient.resize(x.size());
  const double f0 = e.eval(x, p);
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = e.eval(probe, p);
    probe[i] = x[i] - h;
    const double fm = e.eval(probe, p);
    probe[i] = x[i];
    out.gradient[i] = (fp - fm) / (2.0 * h);
    const double forward = (fp - f0) / h;
    const double backward = (f0 - fm) / h;
    if (std::abs(forward - backward) > kink_tol * std::max(1.0, std::abs(out.gradient[i]))) out.smooth = false;
  }
  return out;
}

}  // namespace qvi::expr
