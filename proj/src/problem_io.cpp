#include "qvi/problem_io.hpp"

#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

#include <cmath>

#include "json.hpp"
#include "qvi/rng.hpp"

namespace qvi {

using json = nlohmann::json;

std::string_view kind_name(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Qvi: return "qvi";
    case ProblemKind::Economy: return "economy";
    case ProblemKind::Gnep: return "gnep";
    case ProblemKind::Vi: return "vi";
  }
  return "?";
}

SolverOverrides merge(const SolverOverrides& base, const SolverOverrides& over) {
  SolverOverrides m = base;
  auto take = [](auto& dst, const auto& src) {
    if (src) dst = src;
  };
  take(m.tol, over.tol);
  take(m.max_iter, over.max_iter);
  take(m.outer_max_iter, over.outer_max_iter);
  take(m.outer_starts, over.outer_starts);
  take(m.n_starts, over.n_starts);
  take(m.r_init, over.r_init);
  take(m.r_max, over.r_max);
  take(m.boundary_tol, over.boundary_tol);
  take(m.seed, over.seed);
  take(m.samples, over.samples);
  take(m.cloud_size, over.cloud_size);
  take(m.mode, over.mode);
  return m;
}

SolverConfig make_solver_config(const SolverOverrides& o) {
  SolverConfig c;
  if (o.tol) c.tol = *o.tol;
  if (o.max_iter) c.max_iter = *o.max_iter;
  if (o.n_starts) c.n_starts = *o.n_starts;
  if (o.seed) c.seed = *o.seed;
  return c;
}

QviConfig make_qvi_config(const SolverOverrides& o) {
  QviConfig q;
  if (o.max_iter) q.inner.max_iter = *o.max_iter;
  if (o.n_starts) q.inner.n_starts = *o.n_starts;
  if (o.tol) {
    q.tol = *o.tol;
    q.inner.tol = std::min(q.inner.tol, *o.tol);
  }
  if (o.outer_max_iter) q.outer_max_iter = *o.outer_max_iter;
  if (o.outer_starts) q.outer_starts = *o.outer_starts;
  if (o.r_init) q.r_init = *o.r_init;
  if (o.r_max) q.r_max = *o.r_max;
  if (o.boundary_tol) q.boundary_tol = *o.boundary_tol;
  if (o.seed) {
    q.seed = *o.seed;
    q.inner.seed = *o.seed;
  }
  if (o.samples) q.cert_samples = *o.samples;
  return q;
}

namespace {

// A JSON value together with its pointer, for error messages.
class Field {
 public:
  Field(const json& j, std::string path, const std::string& origin) : j_(j), path_(std::move(path)), origin_(origin) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::SchemaError, origin_ + ": " + (path_.empty() ? std::string("/") : path_) + ": " + msg);
  }

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  void object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const char* k : allowed) known = known || it.key() == k;
      if (!known) Field(*it, path_ + "/" + it.key(), origin_).fail("unknown field");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Field at(const char* key) const {
    if (!j_.contains(key)) fail(std::string("missing field '") + key + "'");
    return Field(j_.at(key), path_ + "/" + key, origin_);
  }

  std::optional<Field> get(const char* key) const {
    if (!j_.contains(key)) return std::nullopt;
    return Field(j_.at(key), path_ + "/" + key, origin_);
  }

  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  Field item(std::size_t i) const { return Field(j_.at(i), path_ + "/" + std::to_string(i), origin_); }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }

  int integer(int min) const {
    if (!j_.is_number_integer()) fail("expected an integer");
    const auto v = j_.get<std::int64_t>();
    if (v < min) fail("must be at least " + std::to_string(min));
    if (v > 1'000'000'000) fail("too large");
    return static_cast<int>(v);
  }

  std::uint64_t unsigned_integer() const {
    if (!j_.is_number_unsigned()) fail("expected a non-negative integer");
    return j_.get<std::uint64_t>();
  }

  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("must be positive");
    return v;
  }

  std::string str() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }

  expr::Expr expression(expr::Declaration decl) const {
    const std::string src = str();
    try {
      return expr::Expr::parse(src, decl);
    } catch (const Error& e) {
      fail(std::string("in expression \"") + src + "\": " + e.what());
    }
  }

 private:
  const json& j_;
  std::string path_;
  const std::string& origin_;
};

// A real number that may depend on the price vector.
struct Scalar {
  double value = 0.0;
  std::shared_ptr<const expr::Expr> e;

  double at(const Vec& p) const { return e ? e->eval(Vec(), p) : value; }
};

Scalar scalar(const Field& f, int n_p) {
  if (f.raw().is_number()) return {f.number(), nullptr};
  const std::string s = f.str();
  if (s == "inf" || s == "+inf") return {kInf, nullptr};
  if (s == "-inf") return {-kInf, nullptr};
  const expr::Expr e = f.expression({0, n_p});
  if (!e.uses_p()) {
    try {
      return {e.eval(Vec(), Vec::Zero(n_p)), nullptr};
    } catch (const Error& err) {
      f.fail(err.what());
    }
  }
  return {0.0, std::make_shared<const expr::Expr>(e)};
}

std::vector<Scalar> scalars(const Field& f, int n_p) {
  const std::size_t n = f.size();
  if (n == 0) f.fail("must not be empty");
  std::vector<Scalar> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(scalar(f.item(i), n_p));
  return out;
}

Vec values(const std::vector<Scalar>& s, const Vec& p) {
  Vec v(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) v[static_cast<Eigen::Index>(i)] = s[i].at(p);
  return v;
}

Vec constant_vector(const Field& f) {
  const std::vector<Scalar> s = scalars(f, 0);
  return values(s, Vec());
}

using SetFn = std::function<ConvexSet(const Vec&)>;

struct SetSpec {
  SetFn make;
  int dim = 0;
};

SetSpec parse_set(const Field& f, int n_p) {
  if (!f.raw().is_object()) f.fail("expected a set object");
  const std::string type = f.at("type").str();
  if (type == "box") {
    f.object({"type", "lower", "upper"});
    const std::vector<Scalar> lo = scalars(f.at("lower"), n_p), hi = scalars(f.at("upper"), n_p);
    if (lo.size() != hi.size()) f.fail("lower and upper differ in length");
    return {[lo, hi](const Vec& p) { return ConvexSet::box(values(lo, p), values(hi, p)); }, static_cast<int>(lo.size())};
  }
  if (type == "ball") {
    f.object({"type", "center", "radius"});
    const std::vector<Scalar> c = scalars(f.at("center"), n_p);
    const Scalar r = scalar(f.at("radius"), n_p);
    if (!r.e && !(r.value >= 0.0)) f.at("radius").fail("must be non-negative");
    return {[c, r](const Vec& p) { return ConvexSet::ball(values(c, p), r.at(p)); }, static_cast<int>(c.size())};
  }
  if (type == "halfspace") {
    f.object({"type", "normal", "offset"});
    const std::vector<Scalar> a = scalars(f.at("normal"), n_p);
    const Scalar b = scalar(f.at("offset"), n_p);
    return {[a, b](const Vec& p) { return ConvexSet::half_space(values(a, p), b.at(p)); }, static_cast<int>(a.size())};
  }
  if (type == "polyhedron") {
    f.object({"type", "A", "b"});
    const Field A = f.at("A"), b = f.at("b");
    const std::size_t m = A.size();
    if (m == 0) A.fail("needs at least one row");
    if (b.size() != m) b.fail("length differs from the number of rows of A");
    std::vector<std::vector<Scalar>> rows;
    std::vector<Scalar> rhs;
    for (std::size_t i = 0; i < m; ++i) {
      rows.push_back(scalars(A.item(i), n_p));
      if (rows.back().size() != rows.front().size()) A.item(i).fail("row length differs from the first row");
      rhs.push_back(scalar(b.item(i), n_p));
    }
    const int dim = static_cast<int>(rows.front().size());
    return {[rows, rhs, dim](const Vec& p) {
              std::vector<HalfSpace> faces;
              for (std::size_t i = 0; i < rows.size(); ++i) faces.push_back({values(rows[i], p), rhs[i].at(p)});
              return ConvexSet::polyhedron(std::move(faces), dim);
            },
            dim};
  }
  if (type == "sublevel") {
    f.object({"type", "dim", "expr"});
    const int dim = f.at("dim").integer(1);
    const expr::Expr e = f.at("expr").expression({dim, n_p});
    if (!e.uses_p()) {
      const ConvexSet s = ConvexSet::sublevel(e.bind_p(Vec::Zero(n_p)), dim);
      return {[s](const Vec&) { return s; }, dim};
    }
    return {[e, dim](const Vec& p) { return ConvexSet::sublevel(e.bind_p(p), dim); }, dim};
  }
  if (type == "intersection" || type == "product") {
    const char* key = type == "product" ? "factors" : "members";
    f.object({"type", key});
    const Field list = f.at(key);
    if (list.size() == 0) list.fail("must not be empty");
    std::vector<SetSpec> parts;
    int dim = 0;
    for (std::size_t i = 0; i < list.size(); ++i) {
      parts.push_back(parse_set(list.item(i), n_p));
      if (type == "product") {
        dim += parts.back().dim;
      } else if (i == 0) {
        dim = parts.back().dim;
      } else if (parts.back().dim != dim) {
        list.item(i).fail("member dimension " + std::to_string(parts.back().dim) + " differs from " +
                          std::to_string(dim));
      }
    }
    const bool product = type == "product";
    return {[parts, product](const Vec& p) {
              std::vector<ConvexSet> sets;
              for (const SetSpec& s : parts) sets.push_back(s.make(p));
              return product ? ConvexSet::product(std::move(sets)) : ConvexSet::intersection(std::move(sets));
            },
            dim};
  }
  if (type == "whole") {
    f.object({"type", "dim"});
    const int dim = f.at("dim").integer(1);
    return {[dim](const Vec&) { return ConvexSet::whole_space(dim); }, dim};
  }
  f.at("type").fail("unknown set type '" + type + "' (box, ball, halfspace, polyhedron, sublevel, intersection, product, whole)");
}

// A constant set; construction errors are reported at the field.
ConvexSet constant_set(const Field& f) {
  const SetSpec s = parse_set(f, 0);
  try {
    return s.make(Vec());
  } catch (const Error& e) {
    f.fail(e.what());
  }
}

using OperatorFn = std::function<SetValuedOperator(const Vec&)>;

OperatorFn parse_operator(const Field& f, int dim, int n_p) {
  f.object({"catalog", "selections", "assumptions", "exclude_zero"});
  std::vector<std::string> assumptions;
  if (auto a = f.get("assumptions")) {
    for (std::size_t i = 0; i < a->size(); ++i) assumptions.push_back(a->item(i).str());
  }
  const bool exclude = f.has("exclude_zero") && f.at("exclude_zero").boolean();
  auto finish = [assumptions, exclude](SetValuedOperator op) {
    for (const std::string& s : assumptions) op.assumptions.push_back(s);
    return exclude ? op.excluding_zero() : op;
  };
  if (f.has("catalog") == f.has("selections")) f.fail("give exactly one of 'catalog' and 'selections'");
  if (auto c = f.get("catalog")) {
    const std::string key = c->str();
    SetValuedOperator op;
    try {
      op = finish(catalog_operator(key, dim));
    } catch (const Error& e) {
      c->fail(e.what());
    }
    return [op](const Vec&) { return op; };
  }
  const Field sel = f.at("selections");
  if (sel.size() == 0) sel.fail("needs at least one selection");
  std::vector<std::vector<expr::Expr>> rows;
  bool uses_p = false;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    const Field row = sel.item(i);
    if (row.size() != static_cast<std::size_t>(dim)) {
      row.fail("selection has " + std::to_string(row.size()) + " components, expected " + std::to_string(dim));
    }
    rows.emplace_back();
    for (std::size_t j = 0; j < row.size(); ++j) {
      rows.back().push_back(row.item(j).expression({dim, n_p}));
      uses_p = uses_p || rows.back().back().uses_p();
    }
  }
  auto build = [rows, dim, finish](const Vec& p) {
    std::vector<std::vector<expr::Expr>> bound;
    for (const auto& r : rows) {
      bound.emplace_back();
      for (const expr::Expr& e : r) bound.back().push_back(e.bind_p(p));
    }
    return finish(SetValuedOperator::from_expressions(dim, bound));
  };
  if (!uses_p) {
    const SetValuedOperator op = build(Vec::Zero(n_p));
    return [op](const Vec&) { return op; };
  }
  return build;
}

SolverOverrides parse_config(const Field& f) {
  f.object({"tol", "max_iter", "outer_max_iter", "outer_starts", "n_starts", "r_init", "r_max", "boundary_tol", "seed",
            "samples", "cloud_size"});
  SolverOverrides o;
  if (auto v = f.get("tol")) o.tol = v->positive();
  if (auto v = f.get("max_iter")) o.max_iter = v->integer(1);
  if (auto v = f.get("outer_max_iter")) o.outer_max_iter = v->integer(1);
  if (auto v = f.get("outer_starts")) o.outer_starts = v->integer(1);
  if (auto v = f.get("n_starts")) o.n_starts = v->integer(1);
  if (auto v = f.get("r_init")) o.r_init = v->positive();
  if (auto v = f.get("r_max")) o.r_max = v->positive();
  if (auto v = f.get("boundary_tol")) o.boundary_tol = v->positive();
  if (auto v = f.get("seed")) o.seed = v->unsigned_integer();
  if (auto v = f.get("samples")) o.samples = static_cast<std::size_t>(v->integer(1));
  if (auto v = f.get("cloud_size")) o.cloud_size = static_cast<std::size_t>(v->integer(16));
  return o;
}

QviMode parse_mode_field(const Field& f) {
  try {
    return parse_mode(f.str());
  } catch (const Error& e) {
    f.fail(e.what());
  }
}

QviProblem parse_qvi(const Field& root, const std::string& name) {
  root.object({"kind", "name", "description", "config", "P", "g", "blocks", "mode", "r_p", "assumptions"});
  QviProblem Q;
  Q.name = name;
  Q.P = constant_set(root.at("P"));
  const int m = Q.P.dim();

  const Field blocks = root.at("blocks");
  if (blocks.size() == 0) blocks.fail("needs at least one block");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Field b = blocks.item(i);
    b.object({"dim", "G", "M"});
    QviBlock blk;
    blk.dim = b.at("dim").integer(1);
    const OperatorFn G = parse_operator(b.at("G"), blk.dim, m);
    const SetSpec M = parse_set(b.at("M"), m);
    if (M.dim != blk.dim) b.at("M").fail("set dimension " + std::to_string(M.dim) + " differs from the block dimension");
    blk.G = G;
    blk.M = M.make;
    Q.blocks.push_back(std::move(blk));
  }
  const int n = Q.dim_y();

  const Field g = root.at("g");
  if (g.size() != static_cast<std::size_t>(m)) {
    g.fail("needs " + std::to_string(m) + " components (the dimension of P)");
  }
  std::vector<expr::Expr> comps;
  bool affine = true;
  for (std::size_t i = 0; i < g.size(); ++i) {
    comps.push_back(g.item(i).expression({n, 0}));
    // a cheap structural test: affine iff the second difference vanishes on a few probes
    const expr::Expr& e = comps.back();
    Rng rng(mix_seed(7, i));
    for (int t = 0; t < 4 && affine; ++t) {
      const Vec a = rng.in_unit_ball(n) * 3.0, b = rng.in_unit_ball(n) * 3.0;
      try {
        affine = std::abs(e.eval(a) + e.eval(b) - 2.0 * e.eval(0.5 * (a + b))) <= 1e-9 * (1 + std::abs(e.eval(a)));
      } catch (const Error&) {
        affine = false;
      }
    }
  }
  Q.g = [comps](const Vec& y) {
    Vec out(static_cast<Eigen::Index>(comps.size()));
    for (std::size_t i = 0; i < comps.size(); ++i) out[static_cast<Eigen::Index>(i)] = comps[i].eval(y);
    return out;
  };
  Q.g_affine = affine;
  if (auto md = root.get("mode")) Q.mode = parse_mode_field(*md);
  if (auto r = root.get("r_p")) {
    Q.r_p = r->number();
    if (Q.r_p < 0.0) r->fail("must be non-negative");
  }
  if (auto a = root.get("assumptions")) {
    for (std::size_t i = 0; i < a->size(); ++i) Q.assumptions.push_back(a->item(i).str());
  }
  try {
    Q.validate(project(Q.P, Vec::Zero(m)));
  } catch (const Error& e) {
    root.fail(e.what());
  }
  return Q;
}

EconomyProblem parse_economy(const Field& root, const std::string& name, const SolverOverrides& cfg) {
  root.object({"kind", "name", "description", "config", "goods", "consumers"});
  EconomyProblem E;
  E.name = name;
  E.goods = root.at("goods").integer(1);
  if (cfg.cloud_size) E.normals.cloud_size = *cfg.cloud_size;
  const Field cs = root.at("consumers");
  if (cs.size() == 0) cs.fail("needs at least one consumer");
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const Field c = cs.item(i);
    c.object({"set", "endowment", "utility"});
    const ConvexSet X = constant_set(c.at("set"));
    if (X.dim() != E.goods) c.at("set").fail("dimension differs from the number of goods");
    const Vec e = constant_vector(c.at("endowment"));
    if (e.size() != E.goods) c.at("endowment").fail("length differs from the number of goods");
    E.consumers.push_back({X, e, c.at("utility").expression({E.goods, 0})});
  }
  try {
    E.validate();
  } catch (const Error& e) {
    root.fail(e.what());
  }
  return E;
}

GnepProblem parse_gnep(const Field& root, const std::string& name, const SolverOverrides& cfg) {
  root.object({"kind", "name", "description", "config", "X", "players"});
  GnepProblem G;
  G.name = name;
  if (cfg.cloud_size) G.normals.cloud_size = *cfg.cloud_size;
  G.X = constant_set(root.at("X"));
  const Field ps = root.at("players");
  if (ps.size() == 0) ps.fail("needs at least one player");
  int total = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) total += ps.item(i).has("dim") ? ps.item(i).at("dim").integer(1) : 1;
  if (total != G.X.dim()) ps.fail("block dimensions add up to " + std::to_string(total) + ", X has dimension " +
                                  std::to_string(G.X.dim()));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Field p = ps.item(i);
    p.object({"dim", "objective", "smooth"});
    GnepPlayer pl;
    pl.dim = p.has("dim") ? p.at("dim").integer(1) : 1;
    pl.objective = p.at("objective").expression({total, 0});
    pl.smooth = p.has("smooth") && p.at("smooth").boolean();
    G.players.push_back(std::move(pl));
  }
  return G;
}

ViProblem parse_vi(const Field& root) {
  root.object({"kind", "name", "description", "config", "dim", "F", "K"});
  const int n = root.at("dim").integer(1);
  const OperatorFn F = parse_operator(root.at("F"), n, 0);
  const ConvexSet K = constant_set(root.at("K"));
  if (K.dim() != n) root.at("K").fail("dimension differs from 'dim'");
  return ViProblem{F(Vec()), K};
}

std::string position(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

Problem parse_problem(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    if (const auto cut = msg.find("syntax error"); cut != std::string::npos) msg = msg.substr(cut);
    throw Error(Errc::SchemaError, origin + ": " + position(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + msg);
  }
  const Field root(doc, "", origin);
  if (!doc.is_object()) root.fail("expected an object at the top level");

  Problem P;
  P.origin = origin;
  P.source = text;
  const std::string kind = root.at("kind").str();
  P.name = root.has("name") ? root.at("name").str() : origin;
  if (auto d = root.get("description")) d->str();
  if (auto c = root.get("config")) P.config = parse_config(*c);

  if (kind == "qvi") {
    P.kind = ProblemKind::Qvi;
    P.qvi = parse_qvi(root, P.name);
  } else if (kind == "economy") {
    P.kind = ProblemKind::Economy;
    P.economy = parse_economy(root, P.name, P.config);
  } else if (kind == "gnep") {
    P.kind = ProblemKind::Gnep;
    P.gnep = parse_gnep(root, P.name, P.config);
  } else if (kind == "vi") {
    P.kind = ProblemKind::Vi;
    P.vi = parse_vi(root);
  } else {
    root.at("kind").fail("unknown kind '" + kind + "' (qvi, economy, gnep, vi)");
  }
  return P;
}

Problem load_problem(const std::string& spec) {
  static constexpr std::string_view kPrefix = "builtin:";
  if (spec.rfind(kPrefix, 0) == 0) {
    const std::string key = spec.substr(kPrefix.size());
    return parse_problem(builtin_source(key), spec);
  }
  std::ifstream in(spec, std::ios::binary);
  if (!in) throw Error(Errc::InvalidInput, "cannot read problem file '" + spec + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str(), spec);
}

}  // namespace qvi
