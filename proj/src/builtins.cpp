#include <map>

#include "qvi/errors.hpp"
#include "qvi/problem_io.hpp"

namespace qvi {

namespace {

const std::map<std::string, std::string>& catalog() {
  static const std::map<std::string, std::string> entries = {
      {"qvi-paper-A", R"json({
  "kind": "qvi",
  "name": "qvi-paper-A",
  "description": "P = [0,1]^2, g(y) = y - (1,2), G piecewise constant on two segments, M(p) = [0, max(1/2, p1)] x [0, inf)",
  "P": {"type": "box", "lower": [0, 0], "upper": [1, 1]},
  "g": ["x1 - 1", "x2 - 2"],
  "blocks": [
    {
      "dim": 2,
      "G": {"catalog": "segment-G"},
      "M": {"type": "box", "lower": [0, 0], "upper": ["max(0.5, p1)", "inf"]}
    }
  ],
  "mode": "pseudo",
  "r_p": 1
}
)json"},
      {"stacked-counterexample", R"json({
  "kind": "qvi",
  "name": "stacked-counterexample",
  "description": "T(p, y) = (y + 1, y^2 + 2) on [1,5] x [-1,1]; pseudomonotone in each variable, not jointly",
  "P": {"type": "box", "lower": [1], "upper": [5]},
  "g": ["x1 + 1"],
  "blocks": [
    {
      "dim": 1,
      "G": {"selections": [["x1^2 + 2"]]},
      "M": {"type": "box", "lower": [-1], "upper": [1]}
    }
  ],
  "mode": "pseudo"
}
)json"},
      {"econ-paper-2agent", R"json({
  "kind": "economy",
  "name": "econ-paper-2agent",
  "description": "two consumers in opposite quadrants with capped l1 disutility",
  "config": {"tol": 1e-6, "cloud_size": 512},
  "goods": 2,
  "consumers": [
    {
      "set": {"type": "box", "lower": ["-inf", 0], "upper": [0, "inf"]},
      "endowment": [-0.5, 1],
      "utility": "piecewise(abs(x1) + abs(x2) <= 1.5, -(abs(x1) + abs(x2)), -1.5)"
    },
    {
      "set": {"type": "box", "lower": [0, "-inf"], "upper": ["inf", 0]},
      "endowment": [1, -0.5],
      "utility": "piecewise(abs(x1) + abs(x2) <= 1.5, -(abs(x1) + abs(x2)), -1.5)"
    }
  ]
}
)json"},
      {"econ-paper-nonexistence", R"json({
  "kind": "economy",
  "name": "econ-paper-nonexistence",
  "description": "consumer 1 may hold negative amounts of good 1 and values only good 2; no equilibrium exists",
  "config": {"tol": 1e-6, "cloud_size": 512},
  "goods": 2,
  "consumers": [
    {
      "set": {"type": "box", "lower": ["-inf", 0], "upper": ["inf", "inf"]},
      "endowment": [1, 1],
      "utility": "x2"
    },
    {
      "set": {"type": "box", "lower": [0, 0], "upper": ["inf", "inf"]},
      "endowment": [1, 1],
      "utility": "x1 + x2"
    }
  ]
}
)json"},
      {"gnep-nikaido", R"json({
  "kind": "gnep",
  "name": "gnep-nikaido",
  "description": "X = {x1 >= 0, x1^2 <= 3 x2 + 4}, u1 = x2 x1^3, u2 = x1 x2^3 (minimized)",
  "config": {"cloud_size": 512},
  "X": {
    "type": "intersection",
    "members": [
      {"type": "halfspace", "normal": [-1, 0], "offset": 0},
      {"type": "sublevel", "dim": 2, "expr": "x1^2 - 3*x2 - 4"}
    ]
  },
  "players": [
    {"dim": 1, "objective": "x2*x1^3"},
    {"dim": 1, "objective": "x1*x2^3"}
  ]
}
)json"},
      {"gnep-hyperbola", R"json({
  "kind": "gnep",
  "name": "gnep-hyperbola",
  "description": "X = {x >= 0, x1 x2 >= 1} written as sqrt((x1 - x2)^2 + 4) <= x1 + x2, u_i = x_i",
  "config": {"cloud_size": 512},
  "X": {
    "type": "intersection",
    "members": [
      {"type": "box", "lower": [0, 0], "upper": ["inf", "inf"]},
      {"type": "sublevel", "dim": 2, "expr": "norm2(x1 - x2, 2) - x1 - x2"}
    ]
  },
  "players": [
    {"dim": 1, "objective": "x1"},
    {"dim": 1, "objective": "x2"}
  ]
}
)json"},
      {"gnep-capped-l1", R"json({
  "kind": "gnep",
  "name": "gnep-capped-l1",
  "description": "hyperbola region, both players minimize min(|x1| + |x2|, 3)",
  "config": {"cloud_size": 512},
  "X": {
    "type": "intersection",
    "members": [
      {"type": "box", "lower": [0, 0], "upper": ["inf", "inf"]},
      {"type": "sublevel", "dim": 2, "expr": "norm2(x1 - x2, 2) - x1 - x2"}
    ]
  },
  "players": [
    {"dim": 1, "objective": "piecewise(abs(x1) + abs(x2) <= 3, abs(x1) + abs(x2), 3)"},
    {"dim": 1, "objective": "piecewise(abs(x1) + abs(x2) <= 3, abs(x1) + abs(x2), 3)"}
  ]
}
)json"},
  };
  return entries;
}

}  // namespace

const std::vector<std::string>& builtin_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, text] : catalog()) k.push_back(key);
    return k;
  }();
  return keys;
}

const std::string& builtin_source(const std::string& key) {
  const auto& c = catalog();
  const auto it = c.find(key);
  if (it == c.end()) throw Error(Errc::InvalidInput, "unknown builtin '" + key + "'");
  return it->second;
}

}  // namespace qvi
