#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hellkan/geometry.hpp"
#include "hellkan/measure.hpp"
#include "hellkan/numeric.hpp"

namespace hellkan {

// Generalized Hopf-Lax semigroup on a finite space:
//   P_t xi(x) = min_{x'} (1/2t) (1 - cos^2(d_{pi/2}(x,x')) / (1 + 2 t xi(x'))),
// the nonlinear inf-convolution dual to HK^2/2.  Initial data must satisfy
// inf xi > -1/2 (the guard keeps 1 + 2 t xi away from 0).

namespace detail {
constexpr double kHopfLaxGuard = 1e-9;

inline void check_hopflax_datum(const std::vector<double>& xi) {
  for (double x : xi)
    if (!(x >= -0.5 + kHopfLaxGuard))
      throw std::domain_error("hopflax: initial datum must satisfy inf xi > -1/2");
}

inline double hopflax_min(double t, double xi_self, const std::vector<double>& xi,
                          const std::vector<double>& cos2, int n) {
  // candidate x' = x contributes xi/(1+2t xi) via cos2 = 1
  double best = xi_self / (1.0 + 2.0 * t * xi_self);
  for (int y = 0; y < n; ++y) {
    double val = (1.0 - cos2[y] / (1.0 + 2.0 * t * xi[y])) / (2.0 * t);
    best = std::min(best, val);
  }
  return best;
}
}  // namespace detail

inline std::vector<double> hopflax_apply(const std::vector<double>& xi0, double t,
                                         const GroundSpace& space) {
  if (static_cast<int>(xi0.size()) != space.size())
    throw std::invalid_argument("hopflax_apply: datum size mismatch");
  if (t < 0.0 || t > 1.0) throw std::domain_error("hopflax_apply: t outside [0,1]");
  detail::check_hopflax_datum(xi0);
  if (t == 0.0) return xi0;
  const int n = space.size();
  std::vector<double> out(n, 0.0), cos2(n, 0.0);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      double c = std::cos(std::min(space.dist(x, y), pi / 2.0));
      cos2[y] = c * c;
    }
    out[x] = detail::hopflax_min(t, xi0[x], xi0, cos2, n);
  }
  return out;
}

// 1-D overload computing distances on the fly; used for large grids where a
// dense distance cache would be wasteful
inline std::vector<double> hopflax_apply(const std::vector<double>& xi0, double t,
                                         const std::vector<double>& coords) {
  if (xi0.size() != coords.size())
    throw std::invalid_argument("hopflax_apply: datum size mismatch");
  if (t < 0.0 || t > 1.0) throw std::domain_error("hopflax_apply: t outside [0,1]");
  detail::check_hopflax_datum(xi0);
  if (t == 0.0) return xi0;
  const int n = static_cast<int>(coords.size());
  std::vector<double> out(n, 0.0), cos2(n, 0.0);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      double c = std::cos(std::min(std::abs(coords[x] - coords[y]), pi / 2.0));
      cos2[y] = c * c;
    }
    out[x] = detail::hopflax_min(t, xi0[x], xi0, cos2, n);
  }
  return out;
}

// the equivalent sin^2 form of the kernel, kept as a cross-check
inline std::vector<double> hopflax_apply_sin_form(const std::vector<double>& xi0, double t,
                                                  const GroundSpace& space) {
  detail::check_hopflax_datum(xi0);
  if (t == 0.0) return xi0;
  const int n = space.size();
  std::vector<double> out(n, 0.0);
  for (int x = 0; x < n; ++x) {
    double best = inf;
    for (int y = 0; y < n; ++y) {
      double s = std::sin(std::min(space.dist(x, y), pi / 2.0));
      double den = 1.0 + 2.0 * t * xi0[y];
      double val = xi0[y] / den + s * s / (2.0 * t * den);
      best = std::min(best, val);
    }
    out[x] = best;
  }
  return out;
}

// time-indexed family of Hopf-Lax values
struct HopfLaxField {
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // one slice per time
  std::vector<double> initial;
};

inline HopfLaxField hopflax_field(const std::vector<double>& xi0, std::vector<double> times,
                                  const GroundSpace& space) {
  HopfLaxField f;
  f.initial = xi0;
  f.times = std::move(times);
  for (double t : f.times) f.values.push_back(hopflax_apply(xi0, t, space));
  return f;
}

inline HopfLaxField hopflax_field_1d(const std::vector<double>& xi0, std::vector<double> times,
                                     const std::vector<double>& coords) {
  HopfLaxField f;
  f.initial = xi0;
  f.times = std::move(times);
  for (double t : f.times) f.values.push_back(hopflax_apply(xi0, t, coords));
  return f;
}

struct HJResidual {
  std::vector<std::vector<double>> residual;  // [time slice][grid point], last time omitted
  double max_residual = -inf;                 // most positive entry
  double h = 0.0;                             // grid spacing
  double tau_max = 0.0;                       // largest time step
};

// Finite-difference residual of the generalized Hamilton-Jacobi operator
//   d_t xi + 1/2 |D xi|^2 + 2 xi^2
// with forward time differences and upwind one-sided slopes on a uniform
// 1-D grid.  Values <= 0 up to O(h + tau) certify the subsolution property.
inline HJResidual hj_residual(const HopfLaxField& field, const std::vector<double>& grid) {
  const int n = static_cast<int>(grid.size());
  if (n < 3) throw std::invalid_argument("hj_residual: grid too small");
  double h = grid[1] - grid[0];
  for (int k = 1; k + 1 < n; ++k)
    if (std::abs(grid[k + 1] - grid[k] - h) > 1e-9 * (1.0 + std::abs(h)))
      throw std::invalid_argument("hj_residual: grid must be uniform");
  if (field.times.size() < 2) throw std::invalid_argument("hj_residual: need at least two times");

  HJResidual out;
  out.h = h;
  for (std::size_t s = 0; s + 1 < field.times.size(); ++s) {
    double tau = field.times[s + 1] - field.times[s];
    if (!(tau > 0.0)) throw std::invalid_argument("hj_residual: times must increase");
    out.tau_max = std::max(out.tau_max, tau);
    const auto& cur = field.values[s];
    const auto& nxt = field.values[s + 1];
    std::vector<double> row(n, 0.0);
    for (int k = 0; k < n; ++k) {
      double dt = (nxt[k] - cur[k]) / tau;
      double fwd = k + 1 < n ? (cur[k + 1] - cur[k]) / h : 0.0;
      double bwd = k > 0 ? (cur[k] - cur[k - 1]) / h : 0.0;
      double slope = std::max(std::abs(fwd), std::abs(bwd));
      row[k] = dt + 0.5 * slope * slope + 2.0 * cur[k] * cur[k];
      out.max_residual = std::max(out.max_residual, row[k]);
    }
    out.residual.push_back(std::move(row));
  }
  return out;
}

// dual lower bound 2 ( int P_1 xi dmu1 - int xi dmu0 ) <= HK^2(mu0, mu1)
inline double hk_dual_lower_bound(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                                  const std::vector<double>& xi0, const GroundSpace& space) {
  auto p1 = hopflax_apply(xi0, 1.0, space);
  auto a = mu0.dense(space.size());
  auto b = mu1.dense(space.size());
  StableSum s;
  for (int x = 0; x < space.size(); ++x) {
    if (b[x] > 0.0) s.add(b[x] * p1[x]);
    if (a[x] > 0.0) s.add(-a[x] * xi0[x]);
  }
  return 2.0 * s.value();
}

// admissible initial datum from an optimal LET potential: xi = -psi1/2,
// clamped into (-1/2, +bound] so the Hopf-Lax guard holds
inline std::vector<double> xi_from_potential(const std::vector<double>& psi1) {
  std::vector<double> xi(psi1.size(), 0.0);
  for (std::size_t k = 0; k < psi1.size(); ++k) {
    double v = -0.5 * psi1[k];
    xi[k] = std::min(std::max(v, -0.5 + 2.0 * detail::kHopfLaxGuard), 1e9);
  }
  return xi;
}

}  // namespace hellkan
