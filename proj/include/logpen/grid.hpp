#pragma once

// Uniform cell-centred grids on a truncated box in one or two dimensions,
// with the second-order Laplacian stencil and midpoint quadrature.  Values
// outside the box are identically zero (ghost cells carry 0).

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "logpen/error.hpp"

namespace logpen {

using Point = std::array<double, 2>;

struct Grid {
  int dim = 1;
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};
  Point h{0.0, 0.0};
  std::array<std::size_t, 2> n{1, 1};
  // True when the requested upper corner was pulled in to an exact multiple of h.
  bool adjusted = false;

  std::size_t size() const { return dim == 1 ? n[0] : n[0] * n[1]; }
  double cell_volume() const { return dim == 1 ? h[0] : h[0] * h[1]; }

  double center(int axis, std::size_t i) const {
    return lo[axis] + (static_cast<double>(i) + 0.5) * h[axis];
  }

  // Row-major layout: axis 0 is the slow index.
  std::size_t index(std::size_t i0, std::size_t i1 = 0) const {
    return dim == 1 ? i0 : i0 * n[1] + i1;
  }

  Point position(std::size_t k) const {
    if (dim == 1) return {center(0, k), 0.0};
    return {center(0, k / n[1]), center(1, k % n[1])};
  }

  bool operator==(const Grid&) const = default;
};

/// A field sampled at cell centres.  The grid is held by value; grids are
/// small and immutable.
struct ScalarField {
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(Grid g) : grid(std::move(g)), values(grid.size(), 0.0) {}
  ScalarField(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.size()) throw ConfigError("field length does not match grid");
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
};

/// Builds a uniform grid on [lo, hi] with spacing h on every axis.  If the
/// box is not an exact multiple of h, the upper corner is shrunk to the
/// largest multiple and `adjusted` is set.
inline Grid build_grid(int dim, Point lo, Point hi, double h) {
  if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("grid spacing must be positive");
  Grid g;
  g.dim = dim;
  for (int a = 0; a < dim; ++a) {
    if (!(lo[a] < hi[a])) throw ConfigError("grid box must satisfy lo < hi on every axis");
    const double ratio = (hi[a] - lo[a]) / h;
    const double nearest = std::round(ratio);
    std::size_t cells;
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest)) {
      cells = static_cast<std::size_t>(nearest);
    } else {
      cells = static_cast<std::size_t>(std::floor(ratio));
      g.adjusted = true;
    }
    if (cells < 1) throw ConfigError("grid box is smaller than one cell");
    g.lo[a] = lo[a];
    g.h[a] = h;
    g.n[a] = cells;
    g.hi[a] = lo[a] + static_cast<double>(cells) * h;
  }
  if (dim == 1) {
    g.lo[1] = g.hi[1] = 0.0;
    g.h[1] = 1.0;
    g.n[1] = 1;
  }
  return g;
}

/// Minimum resolution the solver accepts on each axis.
inline constexpr std::size_t kMinCellsPerAxis = 8;

inline void require_solver_resolution(const Grid& g) {
  for (int a = 0; a < g.dim; ++a) {
    if (g.n[a] < kMinCellsPerAxis) {
      std::ostringstream msg;
      msg << "grid axis " << a << " has " << g.n[a] << " cells; at least " << kMinCellsPerAxis
          << " are required";
      throw ConfigError(msg.str());
    }
  }
}

inline std::string describe_box(const Grid& g) {
  std::ostringstream os;
  os.precision(12);
  for (int a = 0; a < g.dim; ++a) {
    if (a) os << ';';
    os << g.lo[a] << ':' << g.hi[a];
  }
  return os.str();
}

/// Returns the discrete Laplacian (not its negative) with zero ghost values.
inline std::vector<double> laplacian_apply(const Grid& g, std::span<const double> u) {
  if (u.size() != g.size()) throw ConfigError("field does not live on grid");
  std::vector<double> out(u.size(), 0.0);
  if (g.dim == 1) {
    const std::size_t n = g.n[0];
    const double ih2 = 1.0 / (g.h[0] * g.h[0]);
    for (std::size_t i = 0; i < n; ++i) {
      const double left = i > 0 ? u[i - 1] : 0.0;
      const double right = i + 1 < n ? u[i + 1] : 0.0;
      out[i] = (left - 2.0 * u[i] + right) * ih2;
    }
    return out;
  }
  const std::size_t n0 = g.n[0], n1 = g.n[1];
  const double ih0 = 1.0 / (g.h[0] * g.h[0]);
  const double ih1 = 1.0 / (g.h[1] * g.h[1]);
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      const std::size_t k = i * n1 + j;
      const double c = u[k];
      const double xm = i > 0 ? u[k - n1] : 0.0;
      const double xp = i + 1 < n0 ? u[k + n1] : 0.0;
      const double ym = j > 0 ? u[k - 1] : 0.0;
      const double yp = j + 1 < n1 ? u[k + 1] : 0.0;
      out[k] = (xm - 2.0 * c + xp) * ih0 + (ym - 2.0 * c + yp) * ih1;
    }
  }
  return out;
}

inline ScalarField laplacian_apply(const ScalarField& u) {
  return ScalarField(u.grid, laplacian_apply(u.grid, u.values));
}

/// Midpoint rule.  Summation runs in cell order so results are reproducible.
inline double integrate(const Grid& g, std::span<const double> w) {
  if (w.size() != g.size()) throw ConfigError("field does not live on grid");
  double s = 0.0;
  for (double v : w) s += v;
  return s * g.cell_volume();
}

inline double integrate(const ScalarField& w) { return integrate(w.grid, w.values); }

/// Sum over all cell faces, boundary faces included, of the squared
/// difference quotient times the cell volume.  Equals the integral of
/// (-Laplacian u) u exactly in exact arithmetic.
inline double dirichlet_form(const Grid& g, std::span<const double> u) {
  if (u.size() != g.size()) throw ConfigError("field does not live on grid");
  double s = 0.0;
  if (g.dim == 1) {
    const std::size_t n = g.n[0];
    double prev = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      const double cur = i < n ? u[i] : 0.0;
      const double d = cur - prev;
      s += d * d;
      prev = cur;
    }
    return s / (g.h[0] * g.h[0]) * g.cell_volume();
  }
  const std::size_t n0 = g.n[0], n1 = g.n[1];
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i <= n0; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      const double a = i > 0 ? u[(i - 1) * n1 + j] : 0.0;
      const double b = i < n0 ? u[i * n1 + j] : 0.0;
      sx += (b - a) * (b - a);
    }
  }
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j <= n1; ++j) {
      const double a = j > 0 ? u[i * n1 + j - 1] : 0.0;
      const double b = j < n1 ? u[i * n1 + j] : 0.0;
      sy += (b - a) * (b - a);
    }
  }
  return (sx / (g.h[0] * g.h[0]) + sy / (g.h[1] * g.h[1])) * g.cell_volume();
}

template <class Fn>
ScalarField sample(const Grid& g, Fn&& fn) {
  ScalarField f(g);
  for (std::size_t k = 0; k < g.size(); ++k) f[k] = fn(g.position(k));
  return f;
}

}  // namespace logpen
