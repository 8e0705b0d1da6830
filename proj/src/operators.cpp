#include "qvi/operators.hpp"

#include <algorithm>
#include <utility>

#include <Eigen/QR>

#include "qvi/rng.hpp"
#include "qvi/sampling.hpp"

namespace qvi {

SetValuedOperator::SetValuedOperator(int dim_in, int dim_out, Eval eval, std::string name)
    : dim_in_(dim_in), dim_out_(dim_out), eval_(std::move(eval)), name_(std::move(name)) {
  if (dim_in <= 0 || dim_out <= 0) throw Error(Errc::InvalidInput, "operator dimensions must be positive");
}

SetValuedOperator SetValuedOperator::from_expressions(int dim, const std::vector<std::vector<expr::Expr>>& selections,
                                                      std::string name) {
  if (selections.empty()) throw Error(Errc::InvalidInput, "operator needs at least one selection");
  for (const auto& row : selections) {
    if (static_cast<int>(row.size()) != dim) {
      throw Error(Errc::DimensionMismatch, "operator selection has " + std::to_string(row.size()) +
                                               " components, expected " + std::to_string(dim));
    }
  }
  return SetValuedOperator(
      dim, dim,
      [selections, dim](const Vec& x) {
        std::vector<Vec> out;
        out.reserve(selections.size());
        for (const auto& row : selections) {
          Vec v(dim);
          for (int i = 0; i < dim; ++i) v[i] = row[static_cast<std::size_t>(i)].eval(x);
          out.push_back(std::move(v));
        }
        return out;
      },
      std::move(name));
}

SetValuedOperator SetValuedOperator::from_strings(int dim, const std::vector<std::vector<std::string>>& selections,
                                                  std::string name) {
  std::vector<std::vector<expr::Expr>> parsed;
  for (const auto& row : selections) {
    std::vector<expr::Expr> exprs;
    for (const auto& src : row) exprs.push_back(expr::Expr::parse(src, {dim, 0}));
    parsed.push_back(std::move(exprs));
  }
  return from_expressions(dim, parsed, std::move(name));
}

SetValuedOperator SetValuedOperator::constant(const Vec& value, std::string name) {
  const int dim = static_cast<int>(value.size());
  return SetValuedOperator(dim, dim, [value](const Vec&) { return std::vector<Vec>{value}; }, std::move(name));
}

SetValuedOperator SetValuedOperator::zero(int dim_in, int dim_out) {
  return SetValuedOperator(
      dim_in, dim_out, [dim_out](const Vec&) { return std::vector<Vec>{Vec::Zero(dim_out)}; }, "zero");
}

std::vector<Vec> SetValuedOperator::evaluate(const Vec& x) const {
  require_dim(x, dim_in_, "operator evaluation");
  std::vector<Vec> out = eval_(x);
  for (const Vec& s : out) require_dim(s, dim_out_, "operator selection");
  if (exclude_zero_) {
    out.erase(std::remove_if(out.begin(), out.end(), [&](const Vec& s) { return s.norm() < zero_tol_; }), out.end());
  }
  return out;
}

SetValuedOperator SetValuedOperator::excluding_zero(double zero_tol) const {
  SetValuedOperator copy = *this;
  copy.exclude_zero_ = true;
  copy.zero_tol_ = zero_tol;
  return copy;
}

std::vector<Vec> combine_selections(const std::vector<std::vector<Vec>>& blocks, std::size_t cap) {
  Eigen::Index total = 0;
  for (const auto& b : blocks) {
    if (b.empty()) return {};
    total += b.front().size();
  }
  std::vector<Vec> out;
  std::vector<std::size_t> idx(blocks.size(), 0);
  while (out.size() < cap) {
    Vec v(total);
    Eigen::Index offset = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const Vec& part = blocks[i][idx[i]];
      v.segment(offset, part.size()) = part;
      offset += part.size();
    }
    out.push_back(std::move(v));
    // last factor varies fastest
    std::size_t k = blocks.size();
    while (k > 0) {
      --k;
      if (++idx[k] < blocks[k].size()) break;
      idx[k] = 0;
      if (k == 0) return out;
    }
    if (blocks.empty()) break;
  }
  return out;
}

ProductOperator::ProductOperator(std::vector<SetValuedOperator> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw Error(Errc::InvalidInput, "product operator needs factors");
  for (const auto& f : factors_) {
    if (f.dim_in() != f.dim_out()) throw Error(Errc::DimensionMismatch, "product factors must map R^k to R^k");
    offsets_.push_back(dim_);
    dim_ += f.dim_in();
  }
}

std::vector<Vec> ProductOperator::evaluate(const Vec& x) const {
  require_dim(x, dim_, "product operator");
  std::vector<std::vector<Vec>> blocks;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    blocks.push_back(factors_[i].evaluate(x.segment(offsets_[i], factors_[i].dim_in())));
  }
  return combine_selections(blocks);
}

SetValuedOperator ProductOperator::as_operator(std::string name) const {
  ProductOperator self = *this;
  SetValuedOperator op(dim_, dim_, [self](const Vec& x) { return self.evaluate(x); }, std::move(name));
  for (const auto& f : factors_) op.assumptions.insert(op.assumptions.end(), f.assumptions.begin(), f.assumptions.end());
  return op;
}

QuasiconvexFunctionHandle::QuasiconvexFunctionHandle(Fn f, ConvexSet domain, GradientMode mode, Grad grad)
    : f_(std::move(f)), domain_(std::move(domain)), mode_(mode), grad_(std::move(grad)) {
  if (mode_ == GradientMode::Analytic && !grad_) {
    throw Error(Errc::InvalidInput, "analytic gradient mode needs a gradient function");
  }
}

QuasiconvexFunctionHandle QuasiconvexFunctionHandle::from_expr(const expr::Expr& f, ConvexSet domain) {
  if (f.declaration().n_x != domain.dim()) {
    throw Error(Errc::DimensionMismatch, "function and domain dimensions differ");
  }
  return QuasiconvexFunctionHandle([f](const Vec& x) { return f.eval(x); }, std::move(domain), GradientMode::Analytic,
                                   [f](const Vec& x) { return f.gradient(x); });
}

Vec QuasiconvexFunctionHandle::difference_gradient(const Vec& x) const {
  const double h = 1e-6;
  Vec g(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f_(probe);
    probe[i] = x[i] - h;
    const double down = f_(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

QuasiconvexFunctionHandle::Gradient QuasiconvexFunctionHandle::gradient(const Vec& x) const {
  const double h = 1e-6;
  const double kink_tol = 1e-4;
  Gradient out;
  out.g.resize(x.size());
  out.smooth = true;
  const double f0 = f_(x);
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f_(probe);
    probe[i] = x[i] - h;
    const double down = f_(probe);
    probe[i] = x[i];
    out.g[i] = (up - down) / (2.0 * h);
    const double forward = (up - f0) / h;
    const double backward = (f0 - down) / h;
    if (std::abs(forward - backward) > kink_tol * std::max(1.0, std::abs(out.g[i]))) out.smooth = false;
  }
  if (mode_ == GradientMode::Analytic && out.smooth) out.g = grad_(x);
  return out;
}

bool strict_sublevel_membership(const QuasiconvexFunctionHandle& f, const Vec& w, const Vec& v,
                                const NormalConfig& cfg) {
  require_dim(w, f.dim(), "strict_sublevel_membership");
  require_dim(v, f.dim(), "strict_sublevel_membership");
  if (!f.in_domain(w)) throw Error(Errc::DomainViolation, "reference point outside the function domain");
  if (!f.in_domain(v)) throw Error(Errc::DomainViolation, "test point outside the function domain");
  return f.value(v) < f.value(w) - cfg.strict_tol;
}

namespace {

constexpr int kScales = 24;

double sample_radius(const Vec& w, const NormalConfig& cfg) {
  return cfg.sample_radius > 0.0 ? cfg.sample_radius : 4.0 * std::max(1.0, w.norm());
}

// Multiscale candidate around w: radius R * 2^-k for k cycling through the scales.
Vec multiscale_point(const QuasiconvexFunctionHandle& f, const Vec& w, double radius, std::size_t attempt, Rng& rng) {
  const double scale = radius * std::ldexp(1.0, -static_cast<int>(attempt % kScales));
  return project(f.domain(), w + scale * rng.in_unit_ball(w.size()));
}

std::vector<Vec> cloud_with_seed(const QuasiconvexFunctionHandle& f, const Vec& w, const NormalConfig& cfg,
                                 std::uint64_t seed) {
  Rng rng(point_seed(seed, w));
  const double fw = f.value(w);
  const double radius = sample_radius(w, cfg);
  std::vector<Vec> cloud;
  cloud.reserve(cfg.cloud_size);
  const std::size_t attempts = 8 * cfg.cloud_size + 64;
  for (std::size_t a = 0; a < attempts && cloud.size() < cfg.cloud_size; ++a) {
    Vec v = multiscale_point(f, w, radius, a, rng);
    if (f.value(v) < fw - cfg.strict_tol) cloud.push_back(std::move(v));
  }
  return cloud;
}

std::size_t nearest_index(const std::vector<Vec>& cloud, const Vec& w) {
  std::size_t best = 0;
  double best_d = kInf;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double d = (cloud[i] - w).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double cloud_distance(const std::vector<Vec>& cloud, const Vec& v, double stop_below) {
  double best = kInf;
  for (const Vec& c : cloud) {
    best = std::min(best, (c - v).squaredNorm());
    if (best <= stop_below * stop_below) break;
  }
  return std::sqrt(best);
}

// Nearest point to w of the strict sublevel set C (convex). First the
// boundary crossing on the segment from the nearest cloud point to w; when
// that is not already at w (a plateau), boundary points are parametrized by
// rays from an interior point and the distance to w is minimized over ray
// directions by a shrinking pattern search.
Vec refine_nearest(const QuasiconvexFunctionHandle& f, const Vec& w, const std::vector<Vec>& cloud, const Vec& start,
                   const NormalConfig& cfg) {
  const double fw = f.value(w);
  auto strict = [&](const Vec& v) {
    return f.value(v) < fw - cfg.strict_tol && (v - project(f.domain(), v)).norm() <= 1e-12;
  };
  auto crossing = [&](const Vec& inside, const Vec& outside) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 64; ++it) {
      const double mid = 0.5 * (lo + hi);
      (strict(inside + mid * (outside - inside)) ? lo : hi) = mid;
    }
    return Vec(inside + lo * (outside - inside));
  };
  const Vec b0 = crossing(start, w);
  const double scale = std::max(1.0, w.norm());
  if ((b0 - w).norm() <= 1e-6 * scale) return b0;

  Vec center = Vec::Zero(w.size());
  for (const Vec& v : cloud) center += v;
  center /= static_cast<double>(cloud.size());
  if (!strict(center)) center = start;
  const Eigen::Index n = w.size();

  auto boundary = [&](const Vec& u, Vec& point) {
    double s = scale;
    while (strict(center + s * u)) {
      s *= 2.0;
      if (s > 1e12 * scale) return false;
    }
    point = crossing(center, center + s * u);
    return true;
  };
  auto dist = [&](const Vec& u, Vec& point) { return boundary(u, point) ? (point - w).norm() : kInf; };

  Vec best = b0;
  double best_d = (b0 - w).norm();
  Vec u = start - center;
  if (u.norm() == 0.0) u = w - center;
  if (u.norm() == 0.0) return b0;
  u.normalize();
  if (n == 1) {
    for (double sign : {1.0, -1.0}) {
      Vec p;
      const double d = dist(Vec::Constant(1, sign), p);
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
    return best;
  }
  Vec point;
  double current = dist(u, point);
  if (current < best_d) {
    best_d = current;
    best = point;
  }
  double step = 0.5;
  while (step > 1e-13) {
    // orthonormal basis of the tangent space at u
    Mat basis = Mat::Identity(n, n) - u * u.transpose();
    Eigen::HouseholderQR<Mat> qr(basis);
    const Mat q = qr.householderQ();
    bool improved = false;
    for (Eigen::Index k = 0; k < n && !improved; ++k) {
      Vec t = q.col(k);
      t -= t.dot(u) * u;
      if (t.norm() < 1e-8) continue;
      t.normalize();
      for (double sign : {1.0, -1.0}) {
        const Vec trial = (u + sign * step * t).normalized();
        Vec p;
        const double d = dist(trial, p);
        if (d < current) {
          current = d;
          u = trial;
          improved = true;
          if (d < best_d) {
            best_d = d;
            best = p;
          }
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

struct Candidate {
  Vec n;
  std::string source;
};

void add_candidate(std::vector<Candidate>& list, const Vec& d, const char* source) {
  const double norm = d.norm();
  if (!(norm > 0.0) || !d.allFinite()) return;
  list.push_back({d / norm, source});
}

std::vector<Candidate> kink_candidates(const QuasiconvexFunctionHandle& f, const Vec& w,
                                       const std::vector<Vec>& cloud) {
  std::vector<Candidate> list;
  add_candidate(list, f.difference_gradient(w), "difference-gradient");
  if (f.mode() == GradientMode::Analytic) add_candidate(list, f.analytic_gradient(w), "gradient");
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    add_candidate(list, Vec::Unit(w.size(), j), "coordinate");
    add_candidate(list, -Vec::Unit(w.size(), j), "coordinate");
  }
  if (!cloud.empty()) {
    add_candidate(list, w - cloud[nearest_index(cloud, w)], "nearest");
    Vec mean = Vec::Zero(w.size());
    for (const Vec& v : cloud) mean += v;
    mean /= static_cast<double>(cloud.size());
    add_candidate(list, w - mean, "mean");
  }
  return list;
}

double worst_inner(const std::vector<Vec>& points, const Vec& w, const Vec& n) {
  double worst = -kInf;
  for (const Vec& v : points) worst = std::max(worst, n.dot(v - w));
  return worst;
}

// Level-set samples of S_f(w) within rho + dist_tol of the cloud.
std::vector<Vec> adjusted_extras(const QuasiconvexFunctionHandle& f, const Vec& w, const std::vector<Vec>& cloud,
                                 double rho, const NormalConfig& cfg, Rng& rng) {
  const double fw = f.value(w);
  std::vector<Vec> extras;
  const std::size_t attempts = std::max<std::size_t>(64, cfg.cloud_size / 4);
  const double radius = std::max(2.0 * rho, 1e-6);
  for (std::size_t a = 0; a < attempts; ++a) {
    const double scale = radius * std::ldexp(1.0, -static_cast<int>(a % 16));
    const Vec v = project(f.domain(), w + scale * rng.in_unit_ball(w.size()));
    const double fv = f.value(v);
    if (fv > fw + cfg.strict_tol || fv < fw - cfg.strict_tol) continue;
    if (cloud_distance(cloud, v, rho + cfg.dist_tol) <= rho + cfg.dist_tol) extras.push_back(v);
  }
  return extras;
}

struct AdjustedData {
  std::vector<Vec> cloud;
  std::vector<Vec> points;  // cloud plus admissible level points
  Vec nearest;
  double rho = 0.0;
};

AdjustedData adjusted_data(const QuasiconvexFunctionHandle& f, const Vec& w, const NormalConfig& cfg,
                           std::uint64_t seed) {
  AdjustedData d;
  d.cloud = cloud_with_seed(f, w, cfg, seed);
  if (d.cloud.empty()) return d;
  d.nearest = refine_nearest(f, w, d.cloud, d.cloud[nearest_index(d.cloud, w)], cfg);
  Rng rng(mix_seed(point_seed(seed, w), 17));
  d.cloud.push_back(d.nearest);
  d.rho = (w - d.nearest).norm();
  d.points = d.cloud;
  const std::vector<Vec> extras = adjusted_extras(f, w, d.cloud, d.rho, cfg, rng);
  d.points.insert(d.points.end(), extras.begin(), extras.end());
  return d;
}

}  // namespace

std::vector<Vec> strict_sublevel_cloud(const QuasiconvexFunctionHandle& f, const Vec& w, const NormalConfig& cfg) {
  require_dim(w, f.dim(), "strict_sublevel_cloud");
  return cloud_with_seed(f, w, cfg, cfg.seed);
}

NormalSelection normal_selection_strict(const QuasiconvexFunctionHandle& f, const Vec& w, const NormalConfig& cfg) {
  require_dim(w, f.dim(), "normal_selection_strict");
  if (!f.in_domain(w)) throw Error(Errc::DomainViolation, "normal requested outside the function domain");
  const auto grad = f.gradient(w);
  if (grad.smooth && grad.g.norm() > 0.0) return {grad.g / grad.g.norm(), false, "gradient", 0, 0.0};

  const std::vector<Vec> cloud = cloud_with_seed(f, w, cfg, cfg.seed);
  if (cloud.empty()) return {Vec::Unit(w.size(), 0), true, "argmin", 0, 0.0};
  for (const Candidate& c : kink_candidates(f, w, cloud)) {
    if (worst_inner(cloud, w, c.n) <= cfg.sep_tol) return {c.n, false, c.source, cloud.size(), 0.0};
  }
  throw Error(Errc::NoValidatedNormal, "no candidate normal at " + format_point(w) + " passed validation on " + std::to_string(cloud.size()) +
                                           " strict-sublevel samples");
}

NormalSelection adjusted_normal_selection(const QuasiconvexFunctionHandle& f, const Vec& w, const NormalConfig& cfg) {
  require_dim(w, f.dim(), "adjusted_normal_selection");
  if (!f.in_domain(w)) throw Error(Errc::DomainViolation, "normal requested outside the function domain");
  const auto grad = f.gradient(w);
  if (grad.smooth && grad.g.norm() > 0.0) return {grad.g / grad.g.norm(), false, "gradient", 0, 0.0};

  const AdjustedData d = adjusted_data(f, w, cfg, cfg.seed);
  if (d.cloud.empty()) throw Error(Errc::ArgminPoint, "point minimizes the function; N^a is not defined");

  std::vector<Candidate> list;
  const bool plateau = d.rho > 1e-6 * std::max(1.0, w.norm());
  if (plateau) add_candidate(list, w - d.nearest, "projection");
  for (Candidate& c : kink_candidates(f, w, d.cloud)) list.push_back(std::move(c));
  if (!plateau) add_candidate(list, w - d.nearest, "projection");
  for (const Candidate& c : list) {
    if (worst_inner(d.points, w, c.n) <= cfg.sep_tol) return {c.n, false, c.source, d.points.size(), d.rho};
  }
  throw Error(Errc::NoValidatedNormal, "no candidate normal at " + format_point(w) + " passed validation on " + std::to_string(d.points.size()) +
                                           " adjusted-sublevel samples");
}

double strict_sublevel_distance(const QuasiconvexFunctionHandle& f, const Vec& w, const NormalConfig& cfg) {
  require_dim(w, f.dim(), "strict_sublevel_distance");
  if (!f.in_domain(w)) throw Error(Errc::DomainViolation, "distance requested outside the function domain");
  const auto grad = f.gradient(w);
  if (grad.smooth && grad.g.norm() > 0.0) return 0.0;
  const AdjustedData d = adjusted_data(f, w, cfg, cfg.seed);
  return d.cloud.empty() ? kInf : d.rho;
}

double validate_normal(const QuasiconvexFunctionHandle& f, const Vec& w, const Vec& n, bool adjusted,
                       const NormalConfig& cfg, std::uint64_t salt) {
  const std::uint64_t seed = mix_seed(cfg.seed, salt);
  if (!adjusted) return worst_inner(cloud_with_seed(f, w, cfg, seed), w, n);
  return worst_inner(adjusted_data(f, w, cfg, seed).points, w, n);
}

SetValuedOperator normal_operator(const QuasiconvexFunctionHandle& f, bool adjusted, const NormalConfig& cfg,
                                  bool include_zero) {
  const int n = f.dim();
  auto eval = [f, adjusted, cfg, include_zero, n](const Vec& x) {
    std::vector<Vec> out;
    bool argmin = false;
    if (adjusted) {
      try {
        out.push_back(adjusted_normal_selection(f, x, cfg).n);
      } catch (const Error& e) {
        if (e.code() != Errc::ArgminPoint) throw;
        argmin = true;
      }
    } else {
      NormalSelection s = normal_selection_strict(f, x, cfg);
      argmin = s.is_argmin;
      if (!argmin) out.push_back(s.n);
    }
    if (argmin) {
      // Coordinate directions normal to the level set S_f(x).
      Rng rng(point_seed(mix_seed(cfg.seed, 99), x));
      const double fx = f.value(x);
      std::vector<Vec> level;
      const double radius = sample_radius(x, cfg);
      for (std::size_t a = 0; a < std::max<std::size_t>(64, cfg.cloud_size); ++a) {
        Vec v = multiscale_point(f, x, radius, a, rng);
        if (f.value(v) <= fx + cfg.strict_tol) level.push_back(std::move(v));
      }
      for (int j = 0; j < n; ++j) {
        for (double sign : {1.0, -1.0}) {
          const Vec e = sign * Vec::Unit(n, j);
          if (!adjusted || worst_inner(level, x, e) <= cfg.sep_tol) out.push_back(e);
        }
      }
    }
    if (include_zero) out.push_back(Vec::Zero(n));
    return out;
  };
  return SetValuedOperator(n, n, eval, adjusted ? "adjusted-normal" : "strict-normal");
}

namespace {

enum class ProbeKind { Pseudo, Quasi };

bool check_pair(const Vec& v, const Vec& w, const std::vector<Vec>& gv, const std::vector<Vec>& gw, ProbeKind kind,
                double tol, ProbeResult& out) {
  const Vec d = w - v;
  for (const Vec& vs : gv) {
    const double ante = vs.dot(d);
    const bool holds = kind == ProbeKind::Pseudo ? ante >= 0.0 : ante > tol;
    if (!holds) continue;
    for (const Vec& ws : gw) {
      const double cons = ws.dot(d);
      if (cons < -tol) {
        out = {true, v, w, vs, ws, ante, cons, out.pairs_checked};
        return true;
      }
    }
  }
  return false;
}

ProbeResult run_probe(const SetValuedOperator& G, const ConvexSet& S, const ProbeConfig& cfg, ProbeKind kind) {
  if (G.dim_in() != S.dim() || G.dim_out() != S.dim()) {
    throw Error(Errc::DimensionMismatch, "probe: operator and set dimensions differ");
  }
  if (cfg.samples == 0) throw Error(Errc::InvalidInput, "probe needs at least one sample");
  ProbeResult out;
  const Vec anchor = project(S, Vec::Zero(S.dim()));
  const double spread = 10.0 * std::max(1.0, anchor.norm());
  const std::vector<Vec> pts = structured_points(S, anchor, spread, cfg.grid);
  std::vector<std::vector<Vec>> values;
  values.reserve(pts.size());
  for (const Vec& p : pts) values.push_back(G.evaluate(p));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      if (out.pairs_checked >= cfg.samples) return out;
      ++out.pairs_checked;
      if (check_pair(pts[i], pts[j], values[i], values[j], kind, cfg.probe_tol, out)) return out;
    }
  }
  Rng rng(cfg.seed);
  const Bounds box = clipped_box(S, anchor, spread);
  auto draw = [&]() {
    Vec u(S.dim());
    for (int k = 0; k < S.dim(); ++k) u[k] = rng.uniform(box.lower[k], box.upper[k]);
    return project(S, u);
  };
  while (out.pairs_checked < cfg.samples) {
    const Vec v = draw();
    const Vec w = draw();
    ++out.pairs_checked;
    if (check_pair(v, w, G.evaluate(v), G.evaluate(w), kind, cfg.probe_tol, out)) return out;
  }
  return out;
}

}  // namespace

ProbeResult probe_pseudomonotone(const SetValuedOperator& G, const ConvexSet& S, const ProbeConfig& cfg) {
  return run_probe(G, S, cfg, ProbeKind::Pseudo);
}

ProbeResult probe_quasimonotone(const SetValuedOperator& G, const ConvexSet& S, const ProbeConfig& cfg) {
  return run_probe(G, S, cfg, ProbeKind::Quasi);
}

SetValuedOperator catalog_operator(const std::string& key, int dim) {
  if (key == "identity") {
    return SetValuedOperator(dim, dim, [](const Vec& x) { return std::vector<Vec>{x}; }, key);
  }
  if (key == "negation") {
    return SetValuedOperator(dim, dim, [](const Vec& x) { return std::vector<Vec>{-x}; }, key);
  }
  if (key == "square") {
    if (dim != 1) throw Error(Errc::DimensionMismatch, "catalog operator 'square' is one-dimensional");
    return SetValuedOperator(1, 1, [](const Vec& x) { return std::vector<Vec>{x.cwiseProduct(x)}; }, key);
  }
  if (key == "segment-G") {
    if (dim != 2) throw Error(Errc::DimensionMismatch, "catalog operator 'segment-G' is two-dimensional");
    SetValuedOperator op(
        2, 2,
        [](const Vec& x) {
          if (x[1] != 0.0) return std::vector<Vec>{Vec::Constant(2, 2.0)};
          return std::vector<Vec>{Vec::Constant(2, 1.0), Vec::Constant(2, 2.0)};
        },
        key);
    op.assumptions = {"pseudomonotone", "local upper sign-continuity"};
    return op;
  }
  throw Error(Errc::InvalidInput, "unknown catalog operator '" + key + "'");
}

}  // namespace qvi
