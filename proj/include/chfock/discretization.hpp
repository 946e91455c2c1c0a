#ifndef CHFOCK_DISCRETIZATION_HPP
#define CHFOCK_DISCRETIZATION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chfock {

using complex = std::complex<double>;

/// A point in R^d, d <= 3. Unused trailing coordinates stay zero.
using Point = std::array<double, 3>;

inline double dot(const Point& a, const Point& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Point& a, int d) { return std::sqrt(dot(a, a, d)); }

/// Momentum-space cutoff profile. `eval` must be defined on all of R^d.
struct CutoffProfile {
  std::string name;
  std::function<complex(const Point&, int)> eval;
};

/// (1 - |k|/K)_+ : real, even, compactly supported.
inline CutoffProfile tent_profile(double extent) {
  return {"tent", [extent](const Point& k, int d) {
            return complex(std::max(0.0, 1.0 - norm(k, d) / extent), 0.0);
          }};
}

/// 1_{|k| <= K}
inline CutoffProfile indicator_profile(double extent) {
  return {"indicator", [extent](const Point& k, int d) {
            return complex(norm(k, d) <= extent ? 1.0 : 0.0, 0.0);
          }};
}

/// Spatial cutoff chi_sp. Must be non-negative.
struct SpatialCutoff {
  std::string name;
  std::function<double(const Point&, int)> eval;
};

inline SpatialCutoff gaussian_cutoff(double width = 1.0, double amplitude = 1.0) {
  return {"gaussian", [width, amplitude](const Point& x, int d) {
            return amplitude * std::exp(-dot(x, x, d) / (width * width));
          }};
}

inline SpatialCutoff constant_cutoff(double value) {
  return {"constant", [value](const Point&, int) { return value; }};
}

/// Uniform midpoint grid on [-K, K]^d with the origin excluded.
///
/// Each axis has 2*n_half cells, so no midpoint sits at zero and every
/// mode has omega > 0. `mirror[j]` is the index of -k_j.
struct ModeGrid {
  int dim_d = 1;
  double extent = 1.0;
  std::vector<Point> points;
  std::vector<double> weights;
  std::vector<double> omega;
  std::vector<complex> phi;
  std::vector<std::size_t> mirror;

  std::size_t size() const { return points.size(); }

  /// Discrete || omega^{power} phi ||^2 = sum_j w_j omega_j^{2 power} |phi_j|^2.
  double weighted_phi_norm_sq(double power) const {
    double s = 0.0;
    for (std::size_t j = 0; j < size(); ++j)
      s += weights[j] * std::pow(omega[j], 2.0 * power) * std::norm(phi[j]);
    return s;
  }

  /// ||phi||_{L^2}^2, also equal to ||omega^{1/2} f_x||^2.
  double phi_norm_sq() const { return weighted_phi_norm_sq(0.0); }
};

namespace detail {

// Row-major enumeration of a per-axis midpoint grid.
inline std::vector<Point> midpoint_lattice(int d, double extent, std::size_t cells) {
  const double h = 2.0 * extent / static_cast<double>(cells);
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= cells;
  std::vector<Point> out;
  out.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Point p{0.0, 0.0, 0.0};
    std::size_t rest = flat;
    for (int axis = d - 1; axis >= 0; --axis) {
      const std::size_t c = rest % cells;
      rest /= cells;
      p[axis] = (static_cast<double>(c) + 0.5 - 0.5 * static_cast<double>(cells)) * h;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace detail

inline ModeGrid build_mode_grid(int d, double extent, std::size_t n_half,
                                const CutoffProfile& profile) {
  if (d < 1 || d > 3) throw std::invalid_argument("mode grid: dimension must be 1, 2 or 3");
  if (!(extent > 0.0)) throw std::invalid_argument("mode grid: extent must be positive");
  if (n_half < 1) throw std::invalid_argument("mode grid: n_half must be >= 1");

  ModeGrid g;
  g.dim_d = d;
  g.extent = extent;
  const std::size_t cells = 2 * n_half;
  g.points = detail::midpoint_lattice(d, extent, cells);
  const double w = std::pow(extent / static_cast<double>(n_half), d);
  const std::size_t m = g.points.size();
  g.weights.assign(m, w);
  g.omega.resize(m);
  g.phi.resize(m);
  g.mirror.resize(m);

  // Reversing every axis index maps the midpoint lattice onto its negation.
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t rest = j, mirrored = 0, stride = 1;
    for (int axis = d - 1; axis >= 0; --axis) {
      const std::size_t c = rest % cells;
      rest /= cells;
      mirrored += (cells - 1 - c) * stride;
      stride *= cells;
    }
    g.mirror[j] = mirrored;
  }

  for (std::size_t j = 0; j < m; ++j) {
    const Point& k = g.points[j];
    g.omega[j] = norm(k, d);
    g.phi[j] = profile.eval(k, d);
    Point minus_k{-k[0], -k[1], -k[2]};
    const complex at_minus = profile.eval(minus_k, d);
    const double scale = std::max({1.0, std::abs(g.phi[j]), std::abs(at_minus)});
    if (std::abs(std::abs(g.phi[j]) - std::abs(at_minus)) > 1e-14 * scale)
      throw std::invalid_argument("mode grid: cutoff profile '" + profile.name +
                                  "' is not even, |phi(k)| != |phi(-k)|");
    if (!std::isfinite(g.phi[j].real()) || !std::isfinite(g.phi[j].imag()))
      throw std::invalid_argument("mode grid: cutoff profile '" + profile.name +
                                  "' is not finite on the grid");
  }
  return g;
}

/// Midpoint quadrature for integrals against chi_sp over [-L, L]^d.
struct SpatialQuadrature {
  int dim_d = 1;
  std::vector<Point> points;
  std::vector<double> weights;
  std::vector<double> chi;

  std::size_t size() const { return points.size(); }

  /// Discrete ||chi_sp||_{L^1}.
  double chi_mass() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += weights[i] * chi[i];
    return s;
  }

  /// sum_i w_i (1 + |x_i|^2) chi_i
  double chi_second_moment() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      s += weights[i] * (1.0 + dot(points[i], points[i], dim_d)) * chi[i];
    return s;
  }
};

/// `count` midpoints per axis.
inline SpatialQuadrature build_spatial_quadrature(int d, double extent, std::size_t count,
                                                  const SpatialCutoff& chi) {
  if (d < 1 || d > 3) throw std::invalid_argument("spatial quadrature: dimension must be 1, 2 or 3");
  if (!(extent > 0.0)) throw std::invalid_argument("spatial quadrature: extent must be positive");
  if (count < 1) throw std::invalid_argument("spatial quadrature: count must be >= 1");

  SpatialQuadrature q;
  q.dim_d = d;
  q.points = detail::midpoint_lattice(d, extent, count);
  q.weights.assign(q.points.size(), std::pow(2.0 * extent / static_cast<double>(count), d));
  q.chi.reserve(q.points.size());
  for (const auto& x : q.points) {
    const double v = chi.eval(x, d);
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("spatial quadrature: chi_sp '" + chi.name +
                                  "' must be a non-negative function");
    q.chi.push_back(v);
  }
  if (!(q.chi_mass() > 0.0))
    throw std::invalid_argument("spatial quadrature: chi_sp has zero discrete mass");
  return q;
}

/// Rescales chi so that its discrete L^1 mass is one.
inline SpatialQuadrature normalized(SpatialQuadrature q) {
  const double mass = q.chi_mass();
  for (auto& c : q.chi) c /= mass;
  return q;
}

/// One-particle vector on the grid. Components already carry sqrt(w_j),
/// so <u, v> = sum_j conj(u_j) v_j.
struct ModeVector {
  std::vector<complex> components;

  std::size_t size() const { return components.size(); }
  complex operator[](std::size_t j) const { return components[j]; }

  double norm_sq() const {
    double s = 0.0;
    for (const auto& c : components) s += std::norm(c);
    return s;
  }
  double norm() const { return std::sqrt(norm_sq()); }
};

/// <u, v>, antilinear in the first argument.
inline complex inner(const ModeVector& u, const ModeVector& v) {
  if (u.size() != v.size()) throw std::invalid_argument("inner: length mismatch");
  complex s{0.0, 0.0};
  for (std::size_t j = 0; j < u.size(); ++j) s += std::conj(u[j]) * v[j];
  return s;
}

/// f_x(k) = phi(k) / sqrt(omega(k)) e^{-ikx}, with sqrt(w) folded in.
inline ModeVector smeared_vector(const ModeGrid& grid, const Point& x) {
  ModeVector f;
  f.components.resize(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double phase = -dot(grid.points[j], x, grid.dim_d);
    f.components[j] = std::sqrt(grid.weights[j]) * grid.phi[j] / std::sqrt(grid.omega[j]) *
                      std::polar(1.0, phase);
  }
  return f;
}

/// omega_m(k) = sqrt(k^2 + m^2)
inline std::vector<double> dispersion_massive(const ModeGrid& grid, double mass) {
  if (!(mass >= 0.0)) throw std::invalid_argument("dispersion_massive: mass must be >= 0");
  if (mass == 0.0) return grid.omega;
  std::vector<double> out(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j)
    out[j] = std::hypot(grid.omega[j], mass);
  return out;
}

}  // namespace chfock

#endif  // CHFOCK_DISCRETIZATION_HPP
