#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "logpen/error.hpp"
#include "logpen/grid.hpp"
#include "logpen/penalty.hpp"

namespace logpen {

enum class PotentialKind { constant, capped_quadratic, tabulated };

inline std::string to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::constant: return "constant";
    case PotentialKind::capped_quadratic: return "capped_quadratic";
    case PotentialKind::tabulated: return "tabulated";
  }
  return "?";
}

inline PotentialKind potential_kind_from(const std::string& s) {
  if (s == "constant") return PotentialKind::constant;
  if (s == "capped_quadratic") return PotentialKind::capped_quadratic;
  if (s == "tabulated") return PotentialKind::tabulated;
  throw ConfigError("unknown potential kind '" + s + "'");
}

/// V(x) in unscaled coordinates.
///   constant:          V0
///   capped_quadratic:  V0 + min(|x - center|^2, cap)
///   tabulated:         multilinear interpolation of samples on a uniform
///                      lattice (node i at table_lo + i * table_h), clamped
///                      to the lattice outside it
struct PotentialSpec {
  PotentialKind kind = PotentialKind::constant;
  int dim = 1;
  double V0 = 0.0;
  Point center{0.0, 0.0};
  double cap = 4.0;
  Point table_lo{0.0, 0.0};
  Point table_h{1.0, 1.0};
  std::array<std::size_t, 2> table_n{0, 0};
  std::vector<double> table;  // row-major, axis 0 slow

  double operator()(const Point& x) const {
    switch (kind) {
      case PotentialKind::constant: return V0;
      case PotentialKind::capped_quadratic: {
        double r2 = 0.0;
        for (int a = 0; a < dim; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
        return V0 + std::min(r2, cap);
      }
      case PotentialKind::tabulated: return interpolate(x);
    }
    return V0;
  }

  bool operator==(const PotentialSpec&) const = default;

 private:
  double interpolate(const Point& x) const {
    std::array<std::size_t, 2> i{0, 0};
    Point w{0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      const double last = static_cast<double>(table_n[a] - 1);
      const double t = std::clamp((x[a] - table_lo[a]) / table_h[a], 0.0, last);
      const double fl = std::min(std::floor(t), std::max(0.0, last - 1.0));
      i[a] = static_cast<std::size_t>(fl);
      w[a] = table_n[a] > 1 ? t - fl : 0.0;
    }
    if (dim == 1) {
      const std::size_t j = std::min(i[0] + 1, table_n[0] - 1);
      return (1.0 - w[0]) * table[i[0]] + w[0] * table[j];
    }
    const std::size_t n1 = table_n[1];
    const std::size_t i1 = std::min(i[0] + 1, table_n[0] - 1);
    const std::size_t j1 = std::min(i[1] + 1, table_n[1] - 1);
    const double v00 = table[i[0] * n1 + i[1]], v01 = table[i[0] * n1 + j1];
    const double v10 = table[i1 * n1 + i[1]], v11 = table[i1 * n1 + j1];
    return (1 - w[0]) * ((1 - w[1]) * v00 + w[1] * v01) + w[0] * ((1 - w[1]) * v10 + w[1] * v11);
  }
};

inline void validate(const PotentialSpec& v) {
  if (v.dim != 1 && v.dim != 2) throw ConfigError("potential dimension must be 1 or 2");
  if (!std::isfinite(v.V0)) throw ConfigError("V0 must be finite");
  if (!(v.V0 > -1.0)) {
    std::ostringstream msg;
    msg << "potential lower bound violated: inf V = " << v.V0 << " must exceed -1";
    throw HypothesisViolation(msg.str());
  }
  if (v.kind == PotentialKind::capped_quadratic && !(v.cap > 0.0))
    throw ConfigError("capped_quadratic potential needs cap > 0");
  if (v.kind == PotentialKind::tabulated) {
    std::size_t count = 1;
    for (int a = 0; a < v.dim; ++a) {
      if (v.table_n[a] < 2 || !(v.table_h[a] > 0.0))
        throw ConfigError("tabulated potential needs >= 2 nodes and positive spacing per axis");
      count *= v.table_n[a];
    }
    if (v.table.size() != count) throw ConfigError("tabulated potential has wrong number of values");
    const double mn = *std::min_element(v.table.begin(), v.table.end());
    for (double t : v.table)
      if (!std::isfinite(t)) throw ConfigError("tabulated potential has non-finite values");
    // Multilinear interpolation attains its infimum at a node.
    if (std::abs(mn - v.V0) > 1e-12 * (1.0 + std::abs(v.V0))) {
      std::ostringstream msg;
      msg << "potential lower bound: declared V0 = " << v.V0 << " differs from table minimum " << mn;
      throw HypothesisViolation(msg.str());
    }
  }
}

struct WellCheck {
  double inf_inside = 0.0;    // sampled inf of V over Lambda
  double min_boundary = 0.0;  // sampled min of V over the boundary of Lambda
  bool holds = false;
};

/// Samples V on a fine lattice inside Lambda and a fine trace of its boundary.
inline WellCheck sample_well(const PotentialSpec& v, const Region& lambda,
                             std::size_t inner = 401, std::size_t trace = 2001) {
  WellCheck c;
  c.inf_inside = std::numeric_limits<double>::infinity();
  c.min_boundary = std::numeric_limits<double>::infinity();
  const auto at = [&](int a, std::size_t i, std::size_t m) {
    return lambda.lo[a] + (lambda.hi[a] - lambda.lo[a]) * (static_cast<double>(i) + 0.5) /
                              static_cast<double>(m);
  };
  if (lambda.dim == 1) {
    for (std::size_t i = 0; i < inner; ++i) c.inf_inside = std::min(c.inf_inside, v({at(0, i, inner), 0.0}));
    c.min_boundary = std::min(v({lambda.lo[0], 0.0}), v({lambda.hi[0], 0.0}));
  } else {
    const std::size_t m = std::max<std::size_t>(inner / 2, 51);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        c.inf_inside = std::min(c.inf_inside, v({at(0, i, m), at(1, j, m)}));
    for (std::size_t i = 0; i <= trace; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(trace);
      const double x = lambda.lo[0] + s * (lambda.hi[0] - lambda.lo[0]);
      const double y = lambda.lo[1] + s * (lambda.hi[1] - lambda.lo[1]);
      c.min_boundary = std::min({c.min_boundary, v({x, lambda.lo[1]}), v({x, lambda.hi[1]}),
                                 v({lambda.lo[0], y}), v({lambda.hi[0], y})});
    }
  }
  c.holds = c.inf_inside < c.min_boundary;
  return c;
}

/// Lower bound V0 > -1 always; the well condition (inf over Lambda below the
/// boundary minimum, attaining V0) for non-constant potentials.  A constant
/// potential is the limit problem and has no well.
inline void check_hypotheses(const PotentialSpec& v, const Region& lambda) {
  validate(v);
  if (v.kind == PotentialKind::constant) return;
  const WellCheck c = sample_well(v, lambda);
  if (!c.holds) {
    std::ostringstream msg;
    msg << "well condition violated: inf over Lambda = " << c.inf_inside
        << " is not below min over boundary = " << c.min_boundary;
    throw HypothesisViolation(msg.str());
  }
  if (c.inf_inside - v.V0 > 1e-3 * (1.0 + std::abs(v.V0))) {
    std::ostringstream msg;
    msg << "well condition violated: inf over Lambda = " << c.inf_inside
        << " does not attain V0 = " << v.V0;
    throw HypothesisViolation(msg.str());
  }
}

}  // namespace logpen
