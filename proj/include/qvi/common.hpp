#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qvi/errors.hpp"

namespace qvi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline void require_dim(const Vec& x, Eigen::Index dim, const char* what) {
  if (x.size() != dim) {
    throw Error(Errc::DimensionMismatch, std::string(what) + ": expected dimension " + std::to_string(dim) +
                                             ", got " + std::to_string(x.size()));
  }
}

inline Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

/// "(a, b, ...)" with round-trip precision, for messages and reports.
std::string format_point(const Vec& x);

/// Strict lexicographic comparison, used for deterministic tie-breaks.
inline bool lex_less(const Vec& a, const Vec& b) {
  const Eigen::Index n = std::min(a.size(), b.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return a.size() < b.size();
}

}  // namespace qvi
