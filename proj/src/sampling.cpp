#include "qvi/sampling.hpp"

#include <set>

namespace qvi {

namespace {

struct LexLess {
  bool operator()(const Vec& a, const Vec& b) const { return lex_less(a, b); }
};

}  // namespace

Bounds clipped_box(const ConvexSet& set, const Vec& anchor, double spread) {
  Bounds b = bounding_box(set);
  for (Eigen::Index i = 0; i < b.lower.size(); ++i) {
    if (!std::isfinite(b.lower[i])) b.lower[i] = std::min(anchor[i], b.upper[i]) - spread;
    if (!std::isfinite(b.upper[i])) b.upper[i] = std::max(anchor[i], b.lower[i]) + spread;
  }
  return b;
}

std::vector<Vec> structured_points(const ConvexSet& set, const Vec& anchor, double spread, int grid,
                                   const ProjectionOptions& opts) {
  require_dim(anchor, set.dim(), "structured_points");
  const Bounds box = clipped_box(set, anchor, spread);
  const int n = set.dim();
  std::vector<Vec> raw;
  if (n <= 12) {
    for (long mask = 0; mask < (1L << n); ++mask) {
      Vec v(n);
      for (int i = 0; i < n; ++i) v[i] = (mask >> i) & 1 ? box.upper[i] : box.lower[i];
      raw.push_back(v);
    }
  }
  raw.push_back(0.5 * (box.lower + box.upper));
  int per_axis = std::max(grid, 0);
  while (per_axis > 1 && std::pow(static_cast<double>(per_axis), n) > 4096.0) --per_axis;
  if (per_axis > 1) {
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (;;) {
      Vec v(n);
      for (int i = 0; i < n; ++i) {
        v[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * idx[static_cast<std::size_t>(i)] / (per_axis - 1);
      }
      raw.push_back(v);
      int k = 0;
      while (k < n && ++idx[static_cast<std::size_t>(k)] == per_axis) idx[static_cast<std::size_t>(k++)] = 0;
      if (k == n) break;
    }
  }
  std::vector<Vec> out;
  std::set<Vec, LexLess> seen;
  for (const Vec& v : raw) {
    Vec p = project(set, v, opts);
    if (seen.insert(p).second) out.push_back(std::move(p));
  }
  return out;
}

std::vector<Vec> random_points(const ConvexSet& set, std::size_t count, Rng& rng, const Vec& anchor, double spread,
                               const ProjectionOptions& opts) {
  require_dim(anchor, set.dim(), "random_points");
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(project(set, anchor + spread * rng.in_unit_ball(set.dim()), opts));
  }
  return out;
}

double best_gain(const std::function<double(const Vec&)>& value, const ConvexSet& S, const Vec& y, double spread,
                 std::size_t samples, std::uint64_t seed, Vec& witness) {
  const double base = value(y);
  double best = -kInf;
  witness = y;
  auto consider = [&](const Vec& z) {
    const double gain = value(z) - base;
    if (gain > best) {
      best = gain;
      witness = z;
    }
  };
  const int n = static_cast<int>(y.size());
  for (const Vec& z : structured_points(S, y, spread, 7)) consider(z);
  Rng rng(seed);
  for (const Vec& z : random_points(S, samples, rng, y, spread)) consider(z);
  for (int k = 0; k < 64; ++k) {
    const Vec d = rng.on_unit_sphere(n);
    for (double t : {1.0, 10.0, 100.0, 1e3, 1e4}) consider(project(S, y + t * d));
  }

  // coordinate and diagonal pattern ascent from y
  std::vector<Vec> dirs;
  for (int j = 0; j < n; ++j) {
    dirs.push_back(Vec::Unit(n, j));
    dirs.push_back(-Vec::Unit(n, j));
    for (int k = j + 1; k < n; ++k) {
      for (double s : {1.0, -1.0}) {
        dirs.push_back((Vec::Unit(n, j) + s * Vec::Unit(n, k)) / std::sqrt(2.0));
        dirs.push_back(-(Vec::Unit(n, j) + s * Vec::Unit(n, k)) / std::sqrt(2.0));
      }
    }
  }
  Vec cur = y;
  double cur_v = base;
  int moves = 0;
  for (double h = std::max(1.0, y.norm()); h > 1e-10 && moves < 2000; h *= 0.5) {
    bool improved = true;
    while (improved && moves < 2000) {
      improved = false;
      for (const Vec& d : dirs) {
        const Vec z = project(S, cur + h * d);
        const double v = value(z);
        if (v > cur_v) {
          cur = z;
          cur_v = v;
          improved = true;
          ++moves;
          break;
        }
      }
    }
  }
  consider(cur);
  return best;
}

}  // namespace qvi
