#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "hellkan/numeric.hpp"

namespace hellkan {

// Admissible entropy functions F on [0,inf): convex, lsc, finite somewhere on
// (0,inf).  Four families are supported:
//
//   Power(p)        the power-like family U_p, with U_1(s) = s log s - s + 1
//                   (logarithmic entropy) and U_0(s) = s - 1 - log s
//   TotalVariation  V(s) = |s - 1|
//   Indicator       I_{1}(s): 0 at s = 1, +inf elsewhere (exact marginals)
//   Interval(a,b)   I_{[a,b]}(s) with 0 <= a <= 1 <= b (density constraints)
//
// Every instance carries its characteristic constants: F(0), the recession
// slope F_inf, the right derivative F'(0) and the affine asymptote
// aff(F) = lim (F_inf * s - F(s)).  All evaluations are pure; instances are
// immutable and freely shareable across threads.
enum class EntropyFamily { Power, TotalVariation, Indicator, Interval };

namespace detail {

inline double power_value(double p, double s) {
  if (s < 0.0) throw std::domain_error("entropy argument must be nonnegative");
  if (s == 0.0) return p > 0.0 ? 1.0 / p : inf;
  if (p == 1.0) return s * std::log(s) - (s - 1.0);
  if (p == 0.0) return (s - 1.0) - std::log(s);
  return (std::pow(s, p) - p * (s - 1.0) - 1.0) / (p * (p - 1.0));
}

// Legendre conjugate of U_p, q = p/(p-1)
inline double power_conjugate(double p, double phi) {
  if (p == 1.0) return std::expm1(phi);
  if (p == 0.0) return phi < 1.0 ? -std::log1p(-phi) : inf;
  const double q = p / (p - 1.0);
  const double edge = 1.0 - q;  // sup dom F* when p < 1
  if (p > 1.0) {
    double base = 1.0 + phi / (q - 1.0);
    if (base <= 0.0) return (1.0 - q) / q;  // = -1/p = -F(0)
    return (q - 1.0) / q * (std::pow(base, q) - 1.0);
  }
  if (p > 0.0) {  // 0 < p < 1, q < 0, open domain (-inf, 1-q)
    if (phi >= edge) return inf;
    double base = 1.0 + phi / (q - 1.0);
    return (q - 1.0) / q * (std::pow(base, q) - 1.0);
  }
  // p < 0, 0 < q < 1, closed domain (-inf, 1-q]
  if (phi > edge) return inf;
  double base = 1.0 + phi / (q - 1.0);
  if (base < 0.0) base = 0.0;
  return (q - 1.0) / q * (std::pow(base, q) - 1.0);
}

inline double power_derivative(double p, double s) {
  if (p == 1.0) return std::log(s);
  return (std::pow(s, p - 1.0) - 1.0) / (p - 1.0);
}

}  // namespace detail

class EntropyFunction {
 public:
  static EntropyFunction power(double p) { return EntropyFunction(EntropyFamily::Power, p, 0, 0); }
  static EntropyFunction log() { return power(1.0); }
  static EntropyFunction total_variation() {
    return EntropyFunction(EntropyFamily::TotalVariation, 0, 0, 0);
  }
  static EntropyFunction indicator() { return EntropyFunction(EntropyFamily::Indicator, 0, 0, 0); }
  static EntropyFunction interval(double a, double b) {
    if (!(0.0 <= a && a <= 1.0 && 1.0 <= b))
      throw std::invalid_argument("interval entropy requires 0 <= a <= 1 <= b");
    return EntropyFunction(EntropyFamily::Interval, 0, a, b);
  }

  EntropyFamily family() const { return family_; }
  double power_exponent() const { return p_; }
  double interval_lo() const { return a_; }
  double interval_hi() const { return b_; }

  double f_at_zero() const { return f0_; }
  double recession() const { return rec_; }
  double right_derivative_at_zero() const { return dz_; }
  double affine_asymptote() const { return aff_; }

  // effective domain of F as an interval [lo,hi]; lo_open marks dom = (0,..]
  double dom_lo() const { return family_ == EntropyFamily::Indicator ? 1.0 : (family_ == EntropyFamily::Interval ? a_ : 0.0); }
  double dom_hi() const {
    switch (family_) {
      case EntropyFamily::Indicator: return 1.0;
      case EntropyFamily::Interval: return b_;
      default: return inf;
    }
  }
  bool dom_lo_open() const { return family_ == EntropyFamily::Power && p_ <= 0.0; }

  // F(s)
  double value(double s) const {
    if (s < 0.0) throw std::domain_error("entropy argument must be nonnegative");
    switch (family_) {
      case EntropyFamily::Power: return detail::power_value(p_, s);
      case EntropyFamily::TotalVariation: return std::abs(s - 1.0);
      case EntropyFamily::Indicator: return s == 1.0 ? 0.0 : inf;
      case EntropyFamily::Interval: return (s >= a_ && s <= b_) ? 0.0 : inf;
    }
    return inf;
  }
  double operator()(double s) const { return value(s); }

  // F*(phi) = sup_{s>=0} (s phi - F(s))
  double conjugate(double phi) const {
    switch (family_) {
      case EntropyFamily::Power: return detail::power_conjugate(p_, phi);
      case EntropyFamily::TotalVariation:
        if (phi > 1.0) return inf;
        return phi <= -1.0 ? -1.0 : phi;
      case EntropyFamily::Indicator: return phi;
      case EntropyFamily::Interval:
        if (phi >= 0.0) return mul0inf(b_, phi);
        return a_ * phi;
    }
    return inf;
  }

  // F°(phi) = -F*(-phi), the concave dual integrand
  double conj_concave(double phi) const {
    if (phi == inf) return f0_;    // limit value, eq-consistent with R* range
    if (phi == -inf) return -inf;
    return -conjugate(-phi);
  }

  // derivative of F on the interior of its domain (smooth families only;
  // TotalVariation returns the subgradient selection sign(s-1), 0 at s=1)
  double derivative(double s) const {
    switch (family_) {
      case EntropyFamily::Power: return detail::power_derivative(p_, s);
      case EntropyFamily::TotalVariation: return s < 1.0 ? -1.0 : (s > 1.0 ? 1.0 : 0.0);
      default:
        throw std::domain_error("derivative undefined for indicator entropies");
    }
  }

  // reverse entropy R(r) = r F(1/r), R(0) = F_inf; closed under all families
  EntropyFunction reverse() const {
    switch (family_) {
      case EntropyFamily::Power: return power(1.0 - p_);
      case EntropyFamily::TotalVariation: return total_variation();
      case EntropyFamily::Indicator: return indicator();
      case EntropyFamily::Interval: {
        double lo = b_ == inf ? 0.0 : 1.0 / b_;
        double hi = a_ == 0.0 ? inf : 1.0 / a_;
        return interval(lo, hi);
      }
    }
    return *this;
  }

  // R*(psi), the conjugate of the reverse entropy
  double rstar(double psi) const {
    switch (family_) {
      case EntropyFamily::Power:
        if (p_ == 1.0) return psi < 1.0 ? -std::log1p(-psi) : inf;
        return detail::power_conjugate(1.0 - p_, psi);
      case EntropyFamily::TotalVariation:
        if (psi > 1.0) return inf;
        return psi <= -1.0 ? -1.0 : psi;
      case EntropyFamily::Indicator: return psi;
      case EntropyFamily::Interval:
        // R = I_{[1/b, 1/a]}, so R*(psi) = sup_{r in [1/b,1/a]} r psi
        if (psi >= 0.0) return a_ == 0.0 ? mul0inf(inf, psi) : psi / a_;
        return b_ == inf ? 0.0 : psi / b_;
    }
    return inf;
  }

  // Largest psi <= F(0) with R*(psi) <= u.  R* is an increasing homeomorphism
  // of (-aff F_inf, F(0)) onto (-F_inf, -F'(0)); outside that range the result
  // saturates at F(0), and u below inf R* = -F_inf is a domain error.
  double rstar_inverse(double u) const {
    if (std::isnan(u)) throw std::domain_error("rstar_inverse: nan input");
    switch (family_) {
      case EntropyFamily::Power:
        if (p_ == 1.0) {
          if (u == inf) return 1.0;
          return -std::expm1(-u);  // 1 - e^{-u}
        }
        break;  // generic monotone inversion below
      case EntropyFamily::TotalVariation:
        if (u < -1.0) throw std::domain_error("rstar_inverse: u below inf R*");
        return u >= 1.0 ? 1.0 : u;
      case EntropyFamily::Indicator: return u;
      case EntropyFamily::Interval:
        if (u >= 0.0) {
          if (a_ == 0.0) return 0.0;  // F(0) = 0 when a = 0
          return u == inf ? inf : u * a_;
        }
        if (b_ == inf) throw std::domain_error("rstar_inverse: u below inf R*");
        return u * b_;
    }
    // power family, p != 1: bisect the increasing map R*
    const double lo_range = -rec_;  // inf R*, never attained for power entropies
    if (u <= lo_range) throw std::domain_error("rstar_inverse: u below inf R*");
    const double hi_range = dz_ == -inf ? inf : -dz_;  // sup of R* range
    if (u >= hi_range) return f0_;
    double hi = f0_;  // sup dom R* (may be +inf for p <= 0)
    if (hi == inf) {
      hi = 1.0;
      while (rstar(hi) < u) hi *= 2.0;
    }
    double lo = std::min(0.0, hi - 1.0);
    while (rstar(lo) > u) lo = lo * 2.0 - 1.0;
    for (int it = 0; it < 400 && hi - lo > 1e-14; ++it) {
      double mid = 0.5 * (lo + hi);
      if (rstar(mid) <= u)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  bool operator==(const EntropyFunction& o) const {
    return family_ == o.family_ && p_ == o.p_ && a_ == o.a_ && b_ == o.b_;
  }

 private:
  EntropyFunction(EntropyFamily fam, double p, double a, double b)
      : family_(fam), p_(p), a_(a), b_(b) {
    switch (family_) {
      case EntropyFamily::Power:
        f0_ = p_ > 0.0 ? 1.0 / p_ : inf;
        rec_ = p_ >= 1.0 ? inf : 1.0 / (1.0 - p_);
        dz_ = p_ > 1.0 ? 1.0 / (1.0 - p_) : -inf;
        aff_ = p_ < 0.0 ? -1.0 / p_ : inf;
        break;
      case EntropyFamily::TotalVariation:
        f0_ = 1.0;
        rec_ = 1.0;
        dz_ = -1.0;
        aff_ = 1.0;
        break;
      case EntropyFamily::Indicator:
        f0_ = inf;
        rec_ = inf;
        dz_ = -inf;
        aff_ = inf;
        break;
      case EntropyFamily::Interval:
        f0_ = a_ == 0.0 ? 0.0 : inf;
        rec_ = b_ == inf ? 0.0 : inf;
        dz_ = a_ == 0.0 ? 0.0 : -inf;
        aff_ = b_ == inf ? 0.0 : inf;
        break;
    }
  }

  EntropyFamily family_;
  double p_, a_, b_;
  double f0_, rec_, dz_, aff_;
};

}  // namespace hellkan
