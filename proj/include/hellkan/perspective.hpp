#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "hellkan/entropy.hpp"
#include "hellkan/numeric.hpp"

namespace hellkan {

// Marginal perspective function
//   H_c(r1, r2) = inf_{theta > 0} [ r1 F1(theta/r1) + r2 F2(theta/r2) + theta c ],
// the 1-homogeneous integrand of the homogeneous formulation.  H_infty
// degenerates to F1(0) r1 + F2(0) r2.

enum class PerspectiveMethod { Closed, Numeric };

struct PerspectiveEval {
  double value = 0.0;
  std::optional<double> argmin_theta;
  PerspectiveMethod method = PerspectiveMethod::Numeric;
};

namespace detail {

// one term r F(theta/r), extended to r = 0 via the recession slope
inline double perspective_term(const EntropyFunction& e, double r, double theta) {
  if (r == 0.0) return mul0inf(e.recession(), theta);
  if (theta == 0.0) return mul0inf(r, e.f_at_zero());
  return r * e.value(theta / r);
}

inline double perspective_objective(const EntropyFunction& e1, const EntropyFunction& e2,
                                    double r1, double r2, double c, double theta) {
  double t1 = perspective_term(e1, r1, theta);
  if (t1 == inf) return inf;
  double t2 = perspective_term(e2, r2, theta);
  if (t2 == inf) return inf;
  return t1 + t2 + theta * c;
}

inline double perspective_d2(const EntropyFunction& e, double r, double theta) {
  // second derivative of r F(theta/r) in theta for the power family: U_p'' = s^{p-2}
  if (r == 0.0 || e.family() != EntropyFamily::Power) return 0.0;
  return std::pow(theta / r, e.power_exponent() - 2.0) / r;
}

}  // namespace detail

inline PerspectiveEval perspective_numeric(const EntropyFunction& e1, const EntropyFunction& e2,
                                           double r1, double r2, double c) {
  if (r1 < 0.0 || r2 < 0.0 || c < 0.0)
    throw std::domain_error("perspective: negative argument");

  const double at_zero = mul0inf(r1, e1.f_at_zero()) + mul0inf(r2, e2.f_at_zero());
  if (c == inf || (r1 == 0.0 && r2 == 0.0)) return {at_zero, std::nullopt, PerspectiveMethod::Numeric};

  const double scale = std::max({r1, r2, 1.0});

  // theta range allowed by dom F_i (F_inf = +inf pins theta to 0 when r_i = 0)
  double lo = 0.0, hi = inf;
  auto restrict_dom = [&](const EntropyFunction& e, double r) {
    if (r == 0.0) {
      if (e.recession() == inf) hi = 0.0;
      return;
    }
    lo = std::max(lo, r * e.dom_lo());
    hi = std::min(hi, mul0inf(r, e.dom_hi()));
  };
  restrict_dom(e1, r1);
  restrict_dom(e2, r2);

  // the theta -> 0 value participates whenever dom reaches 0 or a radius
  // vanishes (the lsc envelope in (r1, r2) picks it up at the boundary)
  const bool zero_limit = (lo == 0.0) || (r1 == 0.0) || (r2 == 0.0);

  if (hi <= 0.0 || lo > hi)
    return {zero_limit ? at_zero : inf, std::nullopt, PerspectiveMethod::Numeric};

  if (lo == 0.0) {
    // slope at 0+ nonnegative => infimum sits at the boundary
    auto dz = [&](const EntropyFunction& e, double r) {
      return r > 0.0 ? e.right_derivative_at_zero() : e.recession();
    };
    double slope0 = dz(e1, r1) + dz(e2, r2);
    if (slope0 == inf || slope0 >= -c) return {at_zero, std::nullopt, PerspectiveMethod::Numeric};
  }

  auto f = [&](double th) { return detail::perspective_objective(e1, e2, r1, r2, c, th); };

  double theta_lo = std::max(lo, 1e-12 * scale);
  double theta_hi = hi;
  if (theta_hi == inf) {
    // expand until the objective starts increasing
    theta_hi = std::max(theta_lo * 2.0, scale);
    while (theta_hi < 1e6 * scale && f(theta_hi * 1.01) < f(theta_hi)) theta_hi *= 2.0;
    theta_hi = std::min(theta_hi * 2.0, 1e6 * scale);
  }
  if (theta_hi <= theta_lo * (1.0 + 1e-15)) {
    double th = std::max(theta_lo, lo);
    double v = f(th);
    if (zero_limit && at_zero < v) return {at_zero, std::nullopt, PerspectiveMethod::Numeric};
    return {v, th, PerspectiveMethod::Numeric};
  }

  // golden section on log(theta)
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::log(theta_lo), b = std::log(theta_hi);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(std::exp(x1)), f2 = f(std::exp(x2));
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(std::exp(x2));
    }
  }
  double theta = std::exp(0.5 * (a + b));
  // Newton polish for smooth families
  if (e1.family() == EntropyFamily::Power && e2.family() == EntropyFamily::Power) {
    for (int it = 0; it < 2; ++it) {
      double g1 = (r1 > 0.0 ? e1.derivative(theta / r1) : e1.recession()) +
                  (r2 > 0.0 ? e2.derivative(theta / r2) : e2.recession()) + c;
      double g2 = detail::perspective_d2(e1, r1, theta) + detail::perspective_d2(e2, r2, theta);
      if (!(g2 > 0.0) || !std::isfinite(g1)) break;
      double cand = theta - g1 / g2;
      if (cand > theta_lo && cand < theta_hi) theta = cand;
    }
  }
  double best = f(theta);
  if (zero_limit && at_zero < best) return {at_zero, std::nullopt, PerspectiveMethod::Numeric};
  return {best, theta, PerspectiveMethod::Numeric};
}

enum class PerspectiveFamily { Log, ReverseLog, Power, Quadratic, InversePower, TV };

// stable evaluation of r1 r2 / (r1^{p-1} + r2^{p-1})^{1/(p-1)} at positive radii
namespace detail {
inline double power_perspective_ratio(double p, double r1, double r2) {
  double m = std::min(r1, r2), M = std::max(r1, r2);
  if (m == 0.0) return p > 1.0 ? 0.0 : M;
  double u = p > 1.0 ? std::pow(m / M, p - 1.0) : std::pow(M / m, p - 1.0);
  double base = p > 1.0 ? M : m;                   // carries the dominant term
  return (m * M / base) * std::pow(1.0 + u, -1.0 / (p - 1.0));
}
}  // namespace detail

inline PerspectiveEval perspective_closed(PerspectiveFamily family, double r1, double r2, double c,
                                          double p = 0.0) {
  if (r1 < 0.0 || r2 < 0.0 || c < 0.0)
    throw std::domain_error("perspective: negative argument");
  PerspectiveEval out;
  out.method = PerspectiveMethod::Closed;
  switch (family) {
    case PerspectiveFamily::Log: {
      double cross = 2.0 * std::sqrt(r1 * r2) * std::exp(-0.5 * c);
      out.value = r1 + r2 - cross;
      if (r1 > 0.0 && r2 > 0.0 && c < inf) out.argmin_theta = std::sqrt(r1 * r2) * std::exp(-0.5 * c);
      return out;
    }
    case PerspectiveFamily::ReverseLog: {
      if (r1 + r2 == 0.0) {
        out.value = 0.0;
        return out;
      }
      auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
      if (c == inf) {
        out.value = inf;
        return out;
      }
      out.value = xlogx(r1) + xlogx(r2) - (r1 + r2) * std::log((r1 + r2) / (2.0 + c));
      out.argmin_theta = (r1 + r2) / (2.0 + c);
      return out;
    }
    case PerspectiveFamily::Power: {
      if (p == 0.0 || p == 1.0)
        throw std::invalid_argument("perspective_closed: Power requires p != 0, 1");
      double q = p / (p - 1.0);
      double ratio = detail::power_perspective_ratio(p, r1, r2);
      double arg = c == inf ? (p > 1.0 ? 0.0 : -inf) : 2.0 - (p - 1.0) * c;
      double plus = std::max(arg, 0.0);
      if (plus == inf) {
        out.value = inf;  // p < 1 and c = inf with F(0) = +inf for p <= 0
        if (p > 0.0) out.value = (r1 + r2) / p;
        return out;
      }
      out.value = (r1 + r2 - ratio * std::pow(plus, q)) / p;
      return out;
    }
    case PerspectiveFamily::Quadratic: {
      if (r1 + r2 == 0.0) {
        out.value = 0.0;
        return out;
      }
      double h = c >= 2.0 ? 4.0 : c * (4.0 - c);
      double d = r1 - r2;
      out.value = (d * d + h * r1 * r2) / (2.0 * (r1 + r2));
      return out;
    }
    case PerspectiveFamily::InversePower: {
      if (r1 + r2 == 0.0) {
        out.value = 0.0;
        return out;
      }
      if (c == inf) {
        out.value = inf;
        return out;
      }
      out.value = std::sqrt((r1 * r1 + r2 * r2) * (2.0 + 2.0 * c)) - (r1 + r2);
      return out;
    }
    case PerspectiveFamily::TV: {
      out.value = std::abs(r2 - r1) + std::min(c, 2.0) * std::min(r1, r2);
      return out;
    }
  }
  throw std::invalid_argument("perspective_closed: unknown family");
}

struct PerspectiveDualReport {
  bool ok = true;            // no sampled feasible pair exceeded value
  double best_bound = -inf;  // best sampled lower bound
  double slack = inf;        // value - best_bound
};

// Samples feasible dual pairs (psi1, psi2) with R*1(psi1) + R*2(psi2) <= c and
// confirms r1 psi1 + r2 psi2 <= value (+1e-9) while tracking the tightest bound.
inline PerspectiveDualReport perspective_dual_check(const EntropyFunction& e1,
                                                    const EntropyFunction& e2, double r1, double r2,
                                                    double c, double value, int grid = 2000) {
  PerspectiveDualReport rep;
  auto consider = [&](double psi1, double psi2) {
    double b = mul0inf(r1, psi1) + mul0inf(r2, psi2);
    if (b > value + 1e-9) rep.ok = false;
    if (b > rep.best_bound) rep.best_bound = b;
  };
  if (c == inf) {
    consider(e1.f_at_zero(), e2.f_at_zero());
    rep.slack = value - rep.best_bound;
    return rep;
  }
  // walk u = R*1(psi1); the partner constraint R*2(psi2) <= c - u stays
  // satisfiable for u <= c + F2_inf
  auto sweep = [&](double u_lo, double u_hi) {
    double best_u = u_lo;
    for (int k = 0; k <= grid; ++k) {
      double u = u_lo + (u_hi - u_lo) * k / grid;
      double psi1, psi2;
      try {
        psi1 = e1.rstar_inverse(u);
        psi2 = e2.rstar_inverse(c - e1.rstar(psi1));
      } catch (const std::domain_error&) {
        continue;
      }
      if (psi1 == -inf || psi2 == -inf) continue;
      double before = rep.best_bound;
      consider(psi1, psi2);
      if (rep.best_bound > before) best_u = u;
    }
    return best_u;
  };
  double u_hi = std::min(c + std::min(e2.recession(), 25.0), 50.0);
  double u_lo = std::max(-std::min(e1.recession(), 1e8) + 1e-12, u_hi - 60.0);
  double u_best = sweep(u_lo, u_hi);
  // refine around the coarse maximizer
  double w = 2.0 * (u_hi - u_lo) / grid;
  sweep(std::max(u_lo, u_best - w), std::min(u_hi, u_best + w));
  rep.slack = value - rep.best_bound;
  return rep;
}

}  // namespace hellkan
