#pragma once

#include <functional>
#include <vector>

#include "qvi/geometry.hpp"
#include "qvi/rng.hpp"

namespace qvi {

/// Deterministic sample of a set: corners of its bounding box (clipped to
/// anchor +- spread where unbounded), ordered with the first coordinate
/// varying fastest and lower bounds first; then the box center; then a
/// regular grid with `grid` points per axis. Everything is projected onto the
/// set and exact duplicates are dropped, keeping first occurrences.
std::vector<Vec> structured_points(const ConvexSet& set, const Vec& anchor, double spread, int grid,
                                   const ProjectionOptions& opts = {});

/// Projections of anchor + spread * u for u uniform in the unit ball.
std::vector<Vec> random_points(const ConvexSet& set, std::size_t count, Rng& rng, const Vec& anchor, double spread,
                               const ProjectionOptions& opts = {});

/// Bounding box of the set with infinite sides replaced by anchor +- spread.
Bounds clipped_box(const ConvexSet& set, const Vec& anchor, double spread);

/// Largest increase value(z) − value(y) found for z in S: structured and
/// random points, radial probes out to 1e4 and a pattern ascent from y.
/// witness receives the best z.
double best_gain(const std::function<double(const Vec&)>& value, const ConvexSet& S, const Vec& y, double spread,
                 std::size_t samples, std::uint64_t seed, Vec& witness);

}  // namespace qvi
