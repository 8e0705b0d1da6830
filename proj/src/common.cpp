#include "qvi/common.hpp"

#include <cstdio>

namespace qvi {

std::string format_point(const Vec& x) {
  std::string out = "(";
  char buf[32];
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", x[i]);
    if (i) out += ", ";
    out += buf;
  }
  return out + ")";
}

}  // namespace qvi
