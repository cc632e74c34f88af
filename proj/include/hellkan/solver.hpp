#pragma once

#include <algorithm>
#include <functional>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hellkan/entropy.hpp"
#include "hellkan/geometry.hpp"
#include "hellkan/measure.hpp"
#include "hellkan/numeric.hpp"
#include "hellkan/perspective.hpp"
#include "hellkan/simplex.hpp"

namespace hellkan {

// Discrete Optimal Entropy-Transport:
//   minimize  sum_i F1(sigma1) dmu1 + F1_inf gamma1perp
//           + sum_j F2(sigma2) dmu2 + F2_inf gamma2perp + <c, gamma>
// over nonnegative plans gamma on the product of the two index sets.
//
// The solver runs entropic-regularized block-coordinate dual ascent in the
// log domain with an annealed regularization parameter, then certifies the
// result: an exactly feasible dual pair is rebuilt through generalized
// c-transforms and the primal plan is polished on the unregularized
// objective, so that gap = primal - dual is a true optimality certificate.

class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

class DualInfeasibleError : public std::runtime_error {
 public:
  DualInfeasibleError(const std::string& what, int i, int j)
      : std::runtime_error(what), i(i), j(j) {}
  int i, j;
};

struct Plan {
  int n = 0, m = 0;
  std::vector<double> v;  // dense row-major

  Plan() = default;
  Plan(int n_, int m_) : n(n_), m(m_), v(static_cast<std::size_t>(n_) * m_, 0.0) {}

  double operator()(int i, int j) const { return v[i * m + j]; }
  double& at(int i, int j) { return v[i * m + j]; }

  std::vector<double> row_sums() const {
    std::vector<double> r(n, 0.0);
    for (int i = 0; i < n; ++i) {
      StableSum s;
      for (int j = 0; j < m; ++j) s.add(v[i * m + j]);
      r[i] = s.value();
    }
    return r;
  }
  std::vector<double> col_sums() const {
    std::vector<double> c(m, 0.0);
    for (int j = 0; j < m; ++j) {
      StableSum s;
      for (int i = 0; i < n; ++i) s.add(v[i * m + j]);
      c[j] = s.value();
    }
    return c;
  }
  double total() const { return stable_sum(v); }

  struct Triplet {
    int i, j;
    double mass;
  };
  std::vector<Triplet> triplets(double threshold = 0.0) const {
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        if (v[i * m + j] > threshold) t.push_back({i, j, v[i * m + j]});
    return t;
  }
  void prune(double threshold) {
    for (double& x : v)
      if (x <= threshold) x = 0.0;
  }
};

struct ETProblem {
  EntropyFunction entropy1;
  EntropyFunction entropy2;
  CostMatrix cost;
  DiscreteMeasure mu1;
  DiscreteMeasure mu2;

  int n() const { return cost.n; }
  int m() const { return cost.m; }
  std::vector<double> a() const { return mu1.dense(cost.n); }
  std::vector<double> b() const { return mu2.dense(cost.m); }
  double mass1() const { return mu1.total(); }
  double mass2() const { return mu2.total(); }
};

// mass-scaled entropy domain m*dom(F); [lo,hi] with the recession convention
// 0*dom(F) = [0,inf) when F has finite recession slope
struct MassDomain {
  double lo, hi;
  bool lo_open;
};

inline MassDomain mass_domain(const EntropyFunction& e, double mass) {
  if (mass == 0.0) {
    if (e.recession() == inf) return {0.0, 0.0, false};
    return {0.0, inf, false};
  }
  return {mass * e.dom_lo(), mul0inf(mass, e.dom_hi()), e.dom_lo_open()};
}

// Feasibility condition: (m1 dom F1) cap (m2 dom F2) nonempty.
inline std::optional<std::pair<double, double>> feasible_mass_interval(const ETProblem& p) {
  MassDomain d1 = mass_domain(p.entropy1, p.mass1());
  MassDomain d2 = mass_domain(p.entropy2, p.mass2());
  double lo = std::max(d1.lo, d2.lo);
  double hi = std::min(d1.hi, d2.hi);
  // float slack: scaled masses agree only up to rounding
  if (lo > hi + 1e-12 * (1.0 + std::abs(hi))) return std::nullopt;
  if (lo >= hi) {
    // a single point survives; open lower endpoints exclude it only at 0
    if ((d1.lo_open && hi == 0.0) || (d2.lo_open && hi == 0.0)) return std::nullopt;
  }
  return std::make_pair(lo, std::max(lo, hi));
}

inline void check_feasible(const ETProblem& p) {
  if (!feasible_mass_interval(p))
    throw InfeasibleError("infeasible problem: (m1 dom F1) and (m2 dom F2) are disjoint, m1 = " +
                          std::to_string(p.mass1()) + ", m2 = " + std::to_string(p.mass2()));
}

namespace detail {
constexpr double kDomainSlack = 1e-9;

// F evaluated with a tiny relative tolerance around dom F; keeps exactly
// rounded marginals (sigma = 1 +- ulp) finite for constraint entropies
inline double entropy_value_tol(const EntropyFunction& e, double s) {
  double lo = e.dom_lo(), hi = e.dom_hi();
  double slack = kDomainSlack * (1.0 + std::abs(s));
  if (s < lo - slack || s > hi + slack) return inf;
  double sc = std::min(std::max(s, lo), hi);
  if (sc == 0.0 && s > 0.0 && e.dom_lo_open()) sc = s;
  return e.value(sc);
}
}  // namespace detail

// primal Entropy-Transport functional of a plan (+inf outside the domain)
inline double primal_value(const Plan& plan, const ETProblem& prob) {
  if (plan.n != prob.n() || plan.m != prob.m())
    throw std::invalid_argument("primal_value: plan shape mismatch");
  const auto a = prob.a();
  const auto b = prob.b();
  const auto g1 = plan.row_sums();
  const auto g2 = plan.col_sums();

  StableSum total;
  for (int i = 0; i < plan.n; ++i) {
    if (a[i] > 0.0) {
      double val = detail::entropy_value_tol(prob.entropy1, g1[i] / a[i]);
      if (val == inf) return inf;
      total.add(a[i] * val);
    } else if (g1[i] > 0.0) {
      if (prob.entropy1.recession() == inf) return inf;
      total.add(prob.entropy1.recession() * g1[i]);
    }
  }
  for (int j = 0; j < plan.m; ++j) {
    if (b[j] > 0.0) {
      double val = detail::entropy_value_tol(prob.entropy2, g2[j] / b[j]);
      if (val == inf) return inf;
      total.add(b[j] * val);
    } else if (g2[j] > 0.0) {
      if (prob.entropy2.recession() == inf) return inf;
      total.add(prob.entropy2.recession() * g2[j]);
    }
  }
  for (int i = 0; i < plan.n; ++i)
    for (int j = 0; j < plan.m; ++j) {
      double g = plan(i, j);
      if (g == 0.0) continue;
      double c = prob.cost(i, j);
      if (c == inf) return inf;
      total.add(g * c);
    }
  return total.value();
}

// reverse functional: integrates the reverse entropies of rho_i = dmu_i/dgamma_i
// against the plan marginals plus F_i(0) on the mu_i-singular parts
inline double reverse_value(const Plan& plan, const ETProblem& prob) {
  if (plan.n != prob.n() || plan.m != prob.m())
    throw std::invalid_argument("reverse_value: plan shape mismatch");
  const auto a = prob.a();
  const auto b = prob.b();
  const auto g1 = plan.row_sums();
  const auto g2 = plan.col_sums();
  const auto r1 = prob.entropy1.reverse();
  const auto r2 = prob.entropy2.reverse();

  StableSum total;
  for (int i = 0; i < plan.n; ++i)
    if (g1[i] > 0.0) {
      double val = detail::entropy_value_tol(r1, a[i] / g1[i]);
      if (val == inf) return inf;
      total.add(g1[i] * val);
    } else if (a[i] > 0.0) {
      total.add(mul0inf(a[i], prob.entropy1.f_at_zero()));
    }
  for (int j = 0; j < plan.m; ++j)
    if (g2[j] > 0.0) {
      double val = detail::entropy_value_tol(r2, b[j] / g2[j]);
      if (val == inf) return inf;
      total.add(g2[j] * val);
    } else if (b[j] > 0.0) {
      total.add(mul0inf(b[j], prob.entropy2.f_at_zero()));
    }
  if (!std::isfinite(total.value())) return total.value();
  for (int i = 0; i < plan.n; ++i)
    for (int j = 0; j < plan.m; ++j) {
      double g = plan(i, j);
      if (g == 0.0) continue;
      double c = prob.cost(i, j);
      if (c == inf) return inf;
      total.add(g * c);
    }
  return total.value();
}

// homogeneous (marginal perspective) functional of a plan
inline double homogeneous_value(const Plan& plan, const ETProblem& prob) {
  if (plan.n != prob.n() || plan.m != prob.m())
    throw std::invalid_argument("homogeneous_value: plan shape mismatch");
  const auto a = prob.a();
  const auto b = prob.b();
  const auto g1 = plan.row_sums();
  const auto g2 = plan.col_sums();

  StableSum total;
  for (int i = 0; i < plan.n; ++i)
    for (int j = 0; j < plan.m; ++j) {
      double g = plan(i, j);
      if (g == 0.0) continue;
      double rho1 = g1[i] > 0.0 ? a[i] / g1[i] : 0.0;
      double rho2 = g2[j] > 0.0 ? b[j] / g2[j] : 0.0;
      double h = perspective_numeric(prob.entropy1, prob.entropy2, rho1, rho2, prob.cost(i, j)).value;
      if (h == inf) return inf;
      total.add(g * h);
    }
  for (int i = 0; i < plan.n; ++i)
    if (g1[i] == 0.0 && a[i] > 0.0) total.add(mul0inf(a[i], prob.entropy1.f_at_zero()));
  for (int j = 0; j < plan.m; ++j)
    if (g2[j] == 0.0 && b[j] > 0.0) total.add(mul0inf(b[j], prob.entropy2.f_at_zero()));
  return total.value();
}

struct DualPotentials {
  std::vector<double> psi1;  // per-point, psi_i <= F_i(0); -inf allowed
  std::vector<double> psi2;

  std::vector<double> phi1(const EntropyFunction& e1) const {
    std::vector<double> out(psi1.size());
    for (std::size_t i = 0; i < psi1.size(); ++i) out[i] = e1.rstar(psi1[i]);
    return out;
  }
  std::vector<double> phi2(const EntropyFunction& e2) const {
    std::vector<double> out(psi2.size());
    for (std::size_t j = 0; j < psi2.size(); ++j) out[j] = e2.rstar(psi2[j]);
    return out;
  }
};

// dual objective sum psi1 dmu1 + sum psi2 dmu2 after a feasibility check of
// R*1(psi1) + R*2(psi2) <= c; throws DualInfeasibleError naming a violated pair
inline double dual_value(const DualPotentials& pot, const ETProblem& prob,
                         double feas_tol = 1e-9) {
  const auto a = prob.a();
  const auto b = prob.b();
  if (static_cast<int>(pot.psi1.size()) != prob.n() ||
      static_cast<int>(pot.psi2.size()) != prob.m())
    throw std::invalid_argument("dual_value: potential size mismatch");
  for (int i = 0; i < prob.n(); ++i)
    if (pot.psi1[i] > prob.entropy1.f_at_zero() + feas_tol)
      throw DualInfeasibleError("dual potential psi1 above F1(0)", i, -1);
  for (int j = 0; j < prob.m(); ++j)
    if (pot.psi2[j] > prob.entropy2.f_at_zero() + feas_tol)
      throw DualInfeasibleError("dual potential psi2 above F2(0)", -1, j);

  std::vector<double> r1(prob.n()), r2(prob.m());
  for (int i = 0; i < prob.n(); ++i) r1[i] = prob.entropy1.rstar(std::min(pot.psi1[i], prob.entropy1.f_at_zero()));
  for (int j = 0; j < prob.m(); ++j) r2[j] = prob.entropy2.rstar(std::min(pot.psi2[j], prob.entropy2.f_at_zero()));
  for (int i = 0; i < prob.n(); ++i) {
    if (r1[i] == -inf) continue;
    for (int j = 0; j < prob.m(); ++j) {
      double c = prob.cost(i, j);
      if (c == inf || r2[j] == -inf) continue;
      if (r1[i] + r2[j] > c + feas_tol * (1.0 + std::abs(c)))
        throw DualInfeasibleError("dual constraint R*1(psi1) + R*2(psi2) <= c violated", i, j);
    }
  }
  StableSum s;
  for (int i = 0; i < prob.n(); ++i)
    if (a[i] > 0.0) s.add(a[i] * pot.psi1[i]);
  for (int j = 0; j < prob.m(); ++j)
    if (b[j] > 0.0) s.add(b[j] * pot.psi2[j]);
  return s.value();
}

// Largest pointwise-feasible potential on `side` given the other side:
//   psi_side(x) = (R*_side)^{-1}( min_y [ c(x,y) - R*_other(psi_other(y)) ] ).
// Rows whose cost row is entirely +inf take the mass-destruction potential
// psi = F_side(0).
inline std::vector<double> generalized_ctransform(const std::vector<double>& psi_other,
                                                  const ETProblem& prob, int side) {
  const EntropyFunction& e_side = side == 1 ? prob.entropy1 : prob.entropy2;
  const EntropyFunction& e_other = side == 1 ? prob.entropy2 : prob.entropy1;
  const int n_side = side == 1 ? prob.n() : prob.m();
  const int n_other = side == 1 ? prob.m() : prob.n();
  if (static_cast<int>(psi_other.size()) != n_other)
    throw std::invalid_argument("generalized_ctransform: size mismatch");

  std::vector<double> rother(n_other);
  for (int y = 0; y < n_other; ++y) rother[y] = e_other.rstar(psi_other[y]);

  std::vector<double> out(n_side);
  for (int x = 0; x < n_side; ++x) {
    double best = inf;
    for (int y = 0; y < n_other; ++y) {
      double c = side == 1 ? prob.cost(x, y) : prob.cost(y, x);
      if (c == inf) continue;
      best = std::min(best, c - rother[y]);
    }
    if (best == inf) {
      out[x] = e_side.f_at_zero();
      continue;
    }
    try {
      out[x] = e_side.rstar_inverse(best);
    } catch (const std::domain_error&) {
      out[x] = -inf;  // no finite feasible value against this psi_other
    }
  }
  return out;
}

enum class SolveStatus { Converged, MaxIterations };

struct SolveOptions {
  std::vector<double> epsilon_schedule;  // empty -> built-in annealing
  int max_inner = 400;                   // sweeps per epsilon level
  int max_iters = 60000;                 // total sweep budget
  double gap_tol = 1e-6;                 // target: gap <= gap_tol * (1 + m1 + m2)
  int polish_steps = 200;
  bool random_init = false;
  std::uint64_t init_seed = 0;
};

struct ETSolution {
  Plan plan;
  std::vector<double> sigma1, sigma2;  // dgamma_i/dmu_i on supp mu_i
  std::vector<double> rho1, rho2;      // dmu_i/dgamma_i on supp gamma_i
  double mu1_perp = 0.0, mu2_perp = 0.0;
  DualPotentials potentials;
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  SolveStatus status = SolveStatus::Converged;
  int sweeps = 0;
};

namespace detail {

// block update of the regularized dual: given S = log sum_y exp((v_y - c)/eps + log ref),
// return the u solving F'(exp(u/eps + S)) + u = 0 (family-specific closed forms)
inline double scaling_prox(const EntropyFunction& e, double eps, double S) {
  switch (e.family()) {
    case EntropyFamily::Power: {
      double p = e.power_exponent();
      if (p == 1.0) return -eps * S / (1.0 + eps);
      // monotone in u; Newton with bisection safeguard
      double lo = -1.0, hi = 1.0;
      auto h = [&](double u) {
        double sig = std::exp(u / eps + S);
        if (p == 0.0) return u + 1.0 - 1.0 / sig;
        return u + (std::pow(sig, p - 1.0) - 1.0) / (p - 1.0);
      };
      while (h(lo) > 0.0) lo = lo * 2.0 - 1.0;
      while (h(hi) < 0.0) hi = hi * 2.0 + 1.0;
      double u = -eps * S / (1.0 + eps);
      u = std::min(std::max(u, lo), hi);
      for (int it = 0; it < 100; ++it) {
        double val = h(u);
        if (val > 0.0)
          hi = u;
        else
          lo = u;
        double sig = std::exp(u / eps + S);
        double deriv = 1.0 + (p == 0.0 ? 1.0 / sig : std::pow(sig, p - 2.0) * sig) / eps;
        double step = val / deriv;
        double cand = u - step;
        if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
        if (std::abs(cand - u) < 1e-15 * (1.0 + std::abs(u))) return cand;
        u = cand;
      }
      return u;
    }
    case EntropyFamily::TotalVariation:
      return std::min(1.0, std::max(-1.0, -eps * S));
    case EntropyFamily::Indicator:
      return -eps * S;
    case EntropyFamily::Interval: {
      double target = std::min(std::max(std::exp(S), e.interval_lo()), e.interval_hi());
      return eps * (std::log(target) - S);
    }
  }
  return 0.0;
}

struct SideLayout {
  std::vector<int> active;   // weight > 0 and at least one finite cost entry
  std::vector<int> destroy;  // weight > 0, no finite entries: psi = F(0)
  std::vector<int> ghost;    // weight = 0, finite recession: priced F_inf
  std::vector<double> logw;  // log reference weight per point (active/ghost)
};

}  // namespace detail

inline ETSolution solve_et(const ETProblem& prob, const SolveOptions& opts = {});

namespace detail {

// Pure balanced transport (both entropies Indicator): exact LP solve.  The
// dual max{ sum a u + sum b v : u + v <= c } lifts to nonnegative variables
// by a constant shift, the simplex returns exact potentials, and a max-flow
// on the tight edges reconstructs an optimal primal plan.
inline bool exact_balanced_ot(const ETProblem& prob, const std::vector<double>& a,
                              const std::vector<double>& b, Plan& plan, DualPotentials& pot,
                              double& primal, double& dual) {
  const int n = prob.n(), m = prob.m();
  double cmax = 0.0;
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double c = prob.cost(i, j);
      if (c == inf) {
        if (a[i] > 0.0 && b[j] > 0.0) continue;
        continue;
      }
      cmax = std::max(cmax, c);
      if (a[i] > 0.0 && b[j] > 0.0) edges.emplace_back(i, j);
    }
  const double K = (n + m + 2.0) * (cmax + 1.0);
  std::vector<int> ridx, cidx;  // active rows/cols
  for (int i = 0; i < n; ++i)
    if (a[i] > 0.0) ridx.push_back(i);
  for (int j = 0; j < m; ++j)
    if (b[j] > 0.0) cidx.push_back(j);
  std::vector<int> rpos(n, -1), cpos(m, -1);
  for (std::size_t k = 0; k < ridx.size(); ++k) rpos[ridx[k]] = static_cast<int>(k);
  for (std::size_t k = 0; k < cidx.size(); ++k) cpos[cidx[k]] = static_cast<int>(k);
  const int nr = static_cast<int>(ridx.size()), nc = static_cast<int>(cidx.size());

  std::vector<std::vector<double>> A;
  std::vector<double> rhs, obj(nr + nc, 0.0);
  for (auto [i, j] : edges) {
    std::vector<double> row(nr + nc, 0.0);
    row[rpos[i]] = 1.0;
    row[nr + cpos[j]] = 1.0;
    A.push_back(std::move(row));
    rhs.push_back(prob.cost(i, j) + 2.0 * K);
  }
  for (int k = 0; k < nr; ++k) obj[k] = a[ridx[k]];
  for (int k = 0; k < nc; ++k) obj[nr + k] = b[cidx[k]];
  auto lp = simplex_max(A, rhs, obj);
  if (!lp.ok) return false;
  double mass = 0.0;
  for (int k = 0; k < nr; ++k) mass += a[ridx[k]];
  dual = lp.value - K * (mass + [&] {
           double s = 0.0;
           for (int k = 0; k < nc; ++k) s += b[cidx[k]];
           return s;
         }());

  std::vector<double> uu(n, 0.0), vv(m, 0.0);
  for (int k = 0; k < nr; ++k) uu[ridx[k]] = lp.x[k] - K;
  for (int k = 0; k < nc; ++k) vv[cidx[k]] = lp.x[nr + k] - K;

  // max-flow on tight edges (Edmonds-Karp); widen the tightness tolerance if
  // rounding starves the flow
  for (double tight_tol = 1e-9 * (1.0 + cmax); tight_tol <= 1e-4 * (1.0 + cmax);
       tight_tol *= 10.0) {
    const int V = n + m + 2, S = n + m, T = n + m + 1;
    std::vector<std::vector<double>> cap(V, std::vector<double>(V, 0.0));
    for (int i = 0; i < n; ++i) cap[S][i] = a[i];
    for (int j = 0; j < m; ++j) cap[n + j][T] = b[j];
    for (auto [i, j] : edges)
      if (prob.cost(i, j) - uu[i] - vv[j] <= tight_tol) cap[i][n + j] = inf;
    double flow = 0.0;
    while (true) {
      std::vector<int> prev(V, -1);
      std::vector<double> slack(V, 0.0);
      std::vector<int> queue{S};
      prev[S] = S;
      slack[S] = inf;
      for (std::size_t qi = 0; qi < queue.size() && prev[T] < 0; ++qi) {
        int x = queue[qi];
        for (int y = 0; y < V; ++y)
          if (prev[y] < 0 && cap[x][y] > 1e-15) {
            prev[y] = x;
            slack[y] = std::min(slack[x], cap[x][y]);
            queue.push_back(y);
          }
      }
      if (prev[T] < 0) break;
      double aug = slack[T];
      for (int y = T; y != S; y = prev[y]) {
        cap[prev[y]][y] -= aug;
        cap[y][prev[y]] += aug;
      }
      flow += aug;
    }
    if (flow < mass - 1e-9 * (1.0 + mass)) continue;
    plan = Plan(n, m);
    for (auto [i, j] : edges) {
      double f = cap[n + j][i];  // reverse capacity equals the routed flow
      if (f > 0.0) plan.at(i, j) = f;
    }
    pot.psi1 = uu;
    pot.psi2 = vv;
    primal = primal_value(plan, prob);
    if (primal == inf) continue;
    return true;
  }
  return false;
}

}  // namespace detail

namespace detail {

inline ETSolution assemble_solution(const ETProblem& prob, Plan plan, DualPotentials pot,
                                    double primal, double dual, SolveStatus status, int sweeps) {
  ETSolution sol;
  sol.plan = std::move(plan);
  sol.potentials = std::move(pot);
  sol.primal = primal;
  sol.dual = dual;
  sol.gap = primal - dual;
  sol.status = status;
  sol.sweeps = sweeps;
  const auto a = prob.a();
  const auto b = prob.b();
  const auto g1 = sol.plan.row_sums();
  const auto g2 = sol.plan.col_sums();
  sol.sigma1.assign(prob.n(), 0.0);
  sol.sigma2.assign(prob.m(), 0.0);
  sol.rho1.assign(prob.n(), 0.0);
  sol.rho2.assign(prob.m(), 0.0);
  StableSum p1, p2;
  for (int i = 0; i < prob.n(); ++i) {
    if (a[i] > 0.0) sol.sigma1[i] = g1[i] / a[i];
    if (g1[i] > 0.0)
      sol.rho1[i] = a[i] / g1[i];
    else if (a[i] > 0.0)
      p1.add(a[i]);
  }
  for (int j = 0; j < prob.m(); ++j) {
    if (b[j] > 0.0) sol.sigma2[j] = g2[j] / b[j];
    if (g2[j] > 0.0)
      sol.rho2[j] = b[j] / g2[j];
    else if (b[j] > 0.0)
      p2.add(b[j]);
  }
  sol.mu1_perp = p1.value();
  sol.mu2_perp = p2.value();
  return sol;
}

// exact shortcut when one measure vanishes: rows decouple and the optimum is
// a per-point 1-D minimization with closed-form conjugate value
inline ETSolution solve_one_sided(const ETProblem& prob, bool mu2_zero) {
  const auto a = prob.a();
  const auto b = prob.b();
  const int n = prob.n(), m = prob.m();
  Plan plan(n, m);
  DualPotentials pot;
  pot.psi1.assign(n, 0.0);
  pot.psi2.assign(m, 0.0);
  StableSum value;

  const EntropyFunction& e_live = mu2_zero ? prob.entropy1 : prob.entropy2;
  const EntropyFunction& e_dead = mu2_zero ? prob.entropy2 : prob.entropy1;
  const auto& w_live = mu2_zero ? a : b;
  const int n_live = mu2_zero ? n : m;
  const int n_dead = mu2_zero ? m : n;

  std::vector<double>& psi_live = mu2_zero ? pot.psi1 : pot.psi2;
  std::vector<double>& psi_dead = mu2_zero ? pot.psi2 : pot.psi1;
  // the empty side never contributes to the dual value; -inf keeps every
  // cross constraint vacuous via R*(-inf) = -F_inf
  for (int y = 0; y < n_dead; ++y) psi_dead[y] = -inf;

  // argmin of F(s) + s w over s >= 0, per family
  auto minimizer = [&](double w) {
    switch (e_live.family()) {
      case EntropyFamily::Power: {
        double p = e_live.power_exponent();
        if (p == 1.0) return std::exp(-w);
        double base = 1.0 - (p - 1.0) * w;  // from F'(s) = -w
        return base > 0.0 ? std::pow(base, 1.0 / (p - 1.0)) : 0.0;
      }
      case EntropyFamily::TotalVariation:
        return w < 1.0 ? 1.0 : 0.0;
      case EntropyFamily::Indicator:
        return 1.0;
      case EntropyFamily::Interval:
        return w > 0.0 ? e_live.interval_lo() : 1.0;
    }
    return 0.0;
  };

  for (int x = 0; x < n_live; ++x) {
    double V = inf;
    int arg = -1;
    for (int y = 0; y < n_dead; ++y) {
      double c = mu2_zero ? prob.cost(x, y) : prob.cost(y, x);
      if (c < V) {
        V = c;
        arg = y;
      }
    }
    double w = V + e_dead.recession();  // effective linear price of plan mass
    double psi = w == inf ? e_live.f_at_zero() : e_live.conj_concave(w);
    psi_live[x] = psi;
    if (w_live[x] > 0.0) value.add(mul0inf(w_live[x], psi));
    if (w != inf && arg >= 0 && w_live[x] > 0.0) {
      double g = w_live[x] * minimizer(w);
      if (g > 0.0) {
        if (mu2_zero)
          plan.at(x, arg) = g;
        else
          plan.at(arg, x) = g;
      }
    }
  }
  double val = value.value();
  double primal = primal_value(plan, prob);
  if (!(primal <= val + 1e-12 * (1.0 + std::abs(val)))) {
    // fall back to the empty plan when the attaining plan is not representable
    plan = Plan(n, m);
    primal = primal_value(plan, prob);
  }
  return assemble_solution(prob, std::move(plan), std::move(pot), primal, val,
                           SolveStatus::Converged, 0);
}

}  // namespace detail

inline ETSolution solve_et(const ETProblem& prob, const SolveOptions& opts) {
  check_feasible(prob);
  const int n = prob.n(), m = prob.m();
  const auto a = prob.a();
  const auto b = prob.b();
  const double mass_scale = 1.0 + prob.mass1() + prob.mass2();
  const double gap_target = opts.gap_tol * mass_scale;

  // degenerate inputs
  const bool zero1 = prob.mass1() == 0.0, zero2 = prob.mass2() == 0.0;
  if (zero1 && zero2) {
    DualPotentials pot{std::vector<double>(n, 0.0), std::vector<double>(m, 0.0)};
    return detail::assemble_solution(prob, Plan(n, m), std::move(pot), 0.0, 0.0,
                                     SolveStatus::Converged, 0);
  }
  if (zero2) return detail::solve_one_sided(prob, true);
  if (zero1) return detail::solve_one_sided(prob, false);

  // identical measures with a free diagonal: the identity coupling is optimal
  if (n == m) {
    bool identical = true;
    for (int i = 0; i < n && identical; ++i)
      identical = a[i] == b[i] && (a[i] == 0.0 || prob.cost(i, i) == 0.0);
    if (identical) {
      Plan plan(n, m);
      for (int i = 0; i < n; ++i) plan.at(i, i) = a[i];
      DualPotentials pot{std::vector<double>(n, 0.0), std::vector<double>(m, 0.0)};
      double primal = primal_value(plan, prob);
      return detail::assemble_solution(prob, std::move(plan), std::move(pot), primal, 0.0,
                                       SolveStatus::Converged, 0);
    }
  }

  // classify points
  detail::SideLayout s1, s2;
  std::vector<char> row_has_finite(n, 0), col_has_finite(m, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (prob.cost(i, j) != inf) {
        row_has_finite[i] = 1;
        col_has_finite[j] = 1;
      }
  s1.logw.assign(n, -inf);
  s2.logw.assign(m, -inf);
  for (int i = 0; i < n; ++i) {
    if (a[i] > 0.0 && row_has_finite[i]) {
      s1.active.push_back(i);
      s1.logw[i] = std::log(a[i]);
    } else if (a[i] > 0.0) {
      s1.destroy.push_back(i);
    } else if (row_has_finite[i] && prob.entropy1.recession() != inf) {
      s1.ghost.push_back(i);
      s1.logw[i] = 0.0;
    }
  }
  for (int j = 0; j < m; ++j) {
    if (b[j] > 0.0 && col_has_finite[j]) {
      s2.active.push_back(j);
      s2.logw[j] = std::log(b[j]);
    } else if (b[j] > 0.0) {
      s2.destroy.push_back(j);
    } else if (col_has_finite[j] && prob.entropy2.recession() != inf) {
      s2.ghost.push_back(j);
      s2.logw[j] = 0.0;
    }
  }

  // unbounded duals: mass that must be destroyed at infinite unit price
  {
    StableSum destroyed;
    bool unbounded = false;
    for (int i : s1.destroy) {
      if (prob.entropy1.f_at_zero() == inf) unbounded = true;
      destroyed.add(mul0inf(a[i], prob.entropy1.f_at_zero()));
    }
    for (int j : s2.destroy) {
      if (prob.entropy2.f_at_zero() == inf) unbounded = true;
      destroyed.add(mul0inf(b[j], prob.entropy2.f_at_zero()));
    }
    if (unbounded) {
      DualPotentials pot{std::vector<double>(n, 0.0), std::vector<double>(m, 0.0)};
      for (int i : s1.destroy) pot.psi1[i] = prob.entropy1.f_at_zero();
      for (int j : s2.destroy) pot.psi2[j] = prob.entropy2.f_at_zero();
      return detail::assemble_solution(prob, Plan(n, m), std::move(pot), inf, inf,
                                       SolveStatus::Converged, 0);
    }
  }

  // pure balanced transport on small instances: exact LP + tight-edge flow
  if (prob.entropy1.family() == EntropyFamily::Indicator &&
      prob.entropy2.family() == EntropyFamily::Indicator &&
      static_cast<long>(n) * m <= 1024) {
    Plan plan;
    DualPotentials pot;
    double primal = 0.0, dualv = 0.0;
    if (detail::exact_balanced_ot(prob, a, b, plan, pot, primal, dualv)) {
      for (int i = 0; i < n; ++i)
        if (a[i] == 0.0) pot.psi1[i] = -inf;
      for (int j = 0; j < m; ++j)
        if (b[j] == 0.0) pot.psi2[j] = -inf;
      return detail::assemble_solution(prob, std::move(plan), std::move(pot), primal, dualv,
                                       SolveStatus::Converged, 0);
    }
  }

  // scaling iterations in the log domain
  std::vector<double> u(n, 0.0), v(m, 0.0);
  if (opts.random_init) {
    Rng rng(opts.init_seed ? opts.init_seed : 0x5eedull);
    for (int i : s1.active) u[i] = rng.uniform(-0.2, 0.2);
    for (int j : s2.active) v[j] = rng.uniform(-0.2, 0.2);
  }
  for (int i : s1.ghost) u[i] = -prob.entropy1.recession();
  for (int j : s2.ghost) v[j] = -prob.entropy2.recession();

  std::vector<double> schedule = opts.epsilon_schedule;
  if (schedule.empty()) {
    double eps = 1.0;
    while (eps > 1.2e-7) {
      schedule.push_back(eps);
      eps *= 0.2;
    }
    schedule.push_back(eps);
  }

  auto row_message = [&](int i, double eps) {
    // log sum_j exp((v_j - c_ij)/eps + logw_j) over finite-cost partners
    double mx = -inf;
    for (int j = 0; j < m; ++j) {
      double c = prob.cost(i, j);
      if (c == inf || s2.logw[j] == -inf) continue;
      double t = (v[j] - c) / eps + s2.logw[j];
      if (t > mx) mx = t;
    }
    if (mx == -inf) return -inf;
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      double c = prob.cost(i, j);
      if (c == inf || s2.logw[j] == -inf) continue;
      acc += std::exp((v[j] - c) / eps + s2.logw[j] - mx);
    }
    return mx + std::log(acc);
  };
  auto col_message = [&](int j, double eps) {
    double mx = -inf;
    for (int i = 0; i < n; ++i) {
      double c = prob.cost(i, j);
      if (c == inf || s1.logw[i] == -inf) continue;
      double t = (u[i] - c) / eps + s1.logw[i];
      if (t > mx) mx = t;
    }
    if (mx == -inf) return -inf;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      double c = prob.cost(i, j);
      if (c == inf || s1.logw[i] == -inf) continue;
      acc += std::exp((u[i] - c) / eps + s1.logw[i] - mx);
    }
    return mx + std::log(acc);
  };

  const bool smooth1 = prob.entropy1.family() == EntropyFamily::Power;
  const bool smooth2 = prob.entropy2.family() == EntropyFamily::Power;
  const bool constrained1 = prob.entropy1.family() == EntropyFamily::Indicator ||
                            prob.entropy1.family() == EntropyFamily::Interval;
  const bool constrained2 = prob.entropy2.family() == EntropyFamily::Indicator ||
                            prob.entropy2.family() == EntropyFamily::Interval;

  // the entropic term is invariant under (u,v) -> (u+t, v-t); realigning t to
  // maximize the marginal-entropy part of the dual removes the slow
  // translation mode of the damped iteration at small epsilon
  const bool can_rebalance = smooth1 && smooth2 && s1.ghost.empty() && s2.ghost.empty();
  auto rebalance = [&]() {
    if (!can_rebalance) return;
    if (prob.entropy1.power_exponent() == 1.0 && prob.entropy2.power_exponent() == 1.0) {
      StableSum sa, sb;
      for (int i : s1.active) sa.add(a[i] * std::exp(-u[i]));
      for (int j : s2.active) sb.add(b[j] * std::exp(-v[j]));
      if (sa.value() > 0.0 && sb.value() > 0.0) {
        double t = 0.5 * std::log(sa.value() / sb.value());
        for (int i : s1.active) u[i] += t;
        for (int j : s2.active) v[j] -= t;
      }
      return;
    }
    // generic power family: the shifted dual is concave in t with a monotone
    // decreasing derivative; bracket and bisect
    auto dstar_prime = [](const EntropyFunction& e, double phi) {
      // (F°)'(phi) = (F*)'(-phi), the sigma with slope -phi
      double p = e.power_exponent();
      if (p == 1.0) return std::exp(-phi);
      double base = 1.0 - (p - 1.0) * phi;
      return base > 0.0 ? std::pow(base, 1.0 / (p - 1.0)) : 0.0;
    };
    auto slope = [&](double t) {
      double g = 0.0;
      for (int i : s1.active) g += a[i] * dstar_prime(prob.entropy1, u[i] + t);
      for (int j : s2.active) g -= b[j] * dstar_prime(prob.entropy2, v[j] - t);
      return g;
    };
    double lo = -1.0, hi = 1.0;
    int guard = 0;
    while (slope(lo) < 0.0 && guard++ < 60) lo *= 2.0;
    guard = 0;
    while (slope(hi) > 0.0 && guard++ < 60) hi *= 2.0;
    if (!(slope(lo) >= 0.0 && slope(hi) <= 0.0)) return;
    for (int it = 0; it < 80 && hi - lo > 1e-14 * (1.0 + std::abs(lo)); ++it) {
      double mid = 0.5 * (lo + hi);
      if (slope(mid) >= 0.0)
        lo = mid;
      else
        hi = mid;
    }
    double t = 0.5 * (lo + hi);
    if (std::isfinite(t) && t != 0.0) {
      for (int i : s1.active) u[i] += t;
      for (int j : s2.active) v[j] -= t;
    }
  };

  int sweeps = 0;
  double eps_last = schedule.back();
  auto run_schedule = [&](const std::vector<double>& levels) {
    for (double eps : levels) {
      eps_last = eps;
      for (int it = 0; it < opts.max_inner && sweeps < opts.max_iters; ++it) {
        ++sweeps;
        double change = 0.0;
        for (int i : s1.active) {
          double S = row_message(i, eps);
          double nu = S == -inf ? u[i] : detail::scaling_prox(prob.entropy1, eps, S);
          change = std::max(change, std::abs(nu - u[i]));
          u[i] = nu;
        }
        for (int j : s2.active) {
          double S = col_message(j, eps);
          double nv = S == -inf ? v[j] : detail::scaling_prox(prob.entropy2, eps, S);
          change = std::max(change, std::abs(nv - v[j]));
          v[j] = nv;
        }
        rebalance();
        if (change < std::max(1e-13, 1e-3 * eps)) break;
      }
    }
  };
  run_schedule(schedule);

  // --- certificate: exactly feasible dual pair via generalized c-transforms ---
  // alternate exact c-transforms from a seed; the dual value is monotone
  auto dual_ascent = [&](DualPotentials& pot, std::vector<double> psi2_seed) {
    pot.psi1.assign(n, 0.0);
    // zero-mass points never contribute to the dual value; -inf makes their
    // constraints as loose as the recession slope allows (R*(-inf) = -F_inf)
    for (int j = 0; j < m; ++j)
      if (b[j] == 0.0) psi2_seed[j] = -inf;
    for (int j : s2.destroy) psi2_seed[j] = prob.entropy2.f_at_zero();
    // keep the cross constraints satisfiable when F1 has finite recession
    if (prob.entropy1.recession() != inf) {
      for (int j = 0; j < m; ++j) {
        if (b[j] == 0.0) continue;
        double cap = inf;
        for (int i = 0; i < n; ++i) cap = std::min(cap, prob.cost(i, j));
        cap += prob.entropy1.recession();
        if (cap == inf) continue;
        cap -= 1e-12 * (1.0 + std::abs(cap));
        if (prob.entropy2.rstar(psi2_seed[j]) > cap)
          psi2_seed[j] = prob.entropy2.rstar_inverse(cap);
      }
    }
    pot.psi2 = std::move(psi2_seed);
    double best = -inf;
    for (int round = 0; round < 80; ++round) {
      pot.psi1 = generalized_ctransform(pot.psi2, prob, 1);
      for (int i = 0; i < n; ++i)
        if (a[i] == 0.0) pot.psi1[i] = -inf;
      pot.psi2 = generalized_ctransform(pot.psi1, prob, 2);
      for (int j = 0; j < m; ++j)
        if (b[j] == 0.0) pot.psi2[j] = -inf;
      for (int j : s2.destroy) pot.psi2[j] = prob.entropy2.f_at_zero();
      StableSum d;
      for (int i = 0; i < n; ++i)
        if (a[i] > 0.0) d.add(a[i] * pot.psi1[i]);
      for (int j = 0; j < m; ++j)
        if (b[j] > 0.0) d.add(b[j] * pot.psi2[j]);
      double val = d.value();
      if (val <= best + 1e-16 * (1.0 + std::abs(best))) return best;
      best = val;
    }
    return best;
  };

  auto dual_of = [&](const DualPotentials& pot) {
    StableSum d;
    for (int i = 0; i < n; ++i)
      if (a[i] > 0.0) d.add(a[i] * pot.psi1[i]);
    for (int j = 0; j < m; ++j)
      if (b[j] > 0.0) d.add(b[j] * pot.psi2[j]);
    return d.value();
  };

  // Alternating c-transforms can stall along per-component translations of
  // the support graph; a scalar shift of each component's phi2 followed by an
  // exact re-transform escapes those modes while preserving feasibility.
  auto component_shift_polish = [&](DualPotentials& pot, const Plan& plan, double& best) {
    std::vector<int> parent(n + m);
    for (int k = 0; k < n + m; ++k) parent[k] = k;
    std::function<int(int)> find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    double support_floor = 1e-10 * mass_scale / std::max(1, n * m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        if (plan(i, j) > support_floor) parent[find(i)] = find(n + j);
    std::vector<std::vector<int>> comp_cols;
    {
      std::vector<int> slot(n + m, -1);
      for (int j = 0; j < m; ++j) {
        if (b[j] <= 0.0 || !col_has_finite[j]) continue;
        int r = find(n + j);
        if (slot[r] < 0) {
          slot[r] = static_cast<int>(comp_cols.size());
          comp_cols.emplace_back();
        }
        comp_cols[slot[r]].push_back(j);
      }
    }
    auto try_shift = [&](const std::vector<int>& cols, double t, DualPotentials& cand) {
      cand.psi2 = pot.psi2;
      for (int j : cols) {
        if (cand.psi2[j] == -inf) continue;
        double phi = prob.entropy2.rstar(cand.psi2[j]) + t;
        try {
          cand.psi2[j] = prob.entropy2.rstar_inverse(phi);
        } catch (const std::domain_error&) {
          return -inf;
        }
      }
      cand.psi1 = generalized_ctransform(cand.psi2, prob, 1);
      for (int i = 0; i < n; ++i)
        if (a[i] == 0.0) cand.psi1[i] = -inf;
      cand.psi2 = generalized_ctransform(cand.psi1, prob, 2);
      for (int j = 0; j < m; ++j)
        if (b[j] == 0.0) cand.psi2[j] = -inf;
      for (int j : s2.destroy) cand.psi2[j] = prob.entropy2.f_at_zero();
      return dual_of(cand);
    };
    for (int round = 0; round < 6; ++round) {
      bool improved = false;
      for (const auto& cols : comp_cols) {
        double w = 0.25, t_best = 0.0, d_best = best;
        for (int refine = 0; refine < 3; ++refine) {
          for (int k = -8; k <= 8; ++k) {
            double t = t_best + w * k / 8.0;
            if (t == 0.0) continue;
            DualPotentials cand;
            double d = try_shift(cols, t, cand);
            if (d > d_best) {
              d_best = d;
              t_best = t;
            }
          }
          w /= 8.0;
        }
        if (t_best != 0.0 && d_best > best + 1e-15 * (1.0 + std::abs(best))) {
          DualPotentials cand;
          double d = try_shift(cols, t_best, cand);
          if (d > best) {
            best = d;
            pot = std::move(cand);
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
  };

  // Seed from the optimality conditions on the polished plan's support: on a
  // spanning forest of the support graph phi1 (+) phi2 = c holds exactly, so
  // the potentials are pinned up to one scalar per connected component, which
  // maximizes a smooth concave 1-D function.  This sidesteps the pointwise
  // noise of sigma-derived potentials.
  auto support_seed = [&](const Plan& plan) {
    std::vector<double> A(n, 0.0), B(m, 0.0);
    std::vector<int> comp_row(n, -1), comp_col(m, -1);
    const double floor_mass = 1e-12 * mass_scale;
    int ncomp = 0;
    std::vector<int> stack;
    for (int j0 = 0; j0 < m; ++j0) {
      if (comp_col[j0] >= 0 || b[j0] <= 0.0) continue;
      bool has_edge = false;
      for (int i = 0; i < n; ++i) has_edge = has_edge || plan(i, j0) > floor_mass;
      if (!has_edge) continue;
      int k = ncomp++;
      comp_col[j0] = k;
      B[j0] = 0.0;
      stack.assign(1, n + j0);
      while (!stack.empty()) {
        int node = stack.back();
        stack.pop_back();
        if (node >= n) {
          int j = node - n;
          for (int i = 0; i < n; ++i)
            if (plan(i, j) > floor_mass && comp_row[i] < 0) {
              comp_row[i] = k;
              A[i] = prob.cost(i, j) - B[j];  // phi1_i = A_i - s
              stack.push_back(i);
            }
        } else {
          int i = node;
          for (int j = 0; j < m; ++j)
            if (plan(i, j) > floor_mass && comp_col[j] < 0) {
              comp_col[j] = k;
              B[j] = prob.cost(i, j) - A[i];  // phi2_j = B_j + s
              stack.push_back(n + j);
            }
        }
      }
    }
    // optimal scalar per component: maximize sum a F°1(A - s) + sum b F°2(B + s)
    auto dprime = [](const EntropyFunction& e, double phi) {
      if (e.family() != EntropyFamily::Power) return 0.0;
      double p = e.power_exponent();
      if (p == 1.0) return std::exp(-phi);
      double base = 1.0 - (p - 1.0) * phi;
      return base > 0.0 ? std::pow(base, 1.0 / (p - 1.0)) : 0.0;
    };
    std::vector<double> shift(ncomp, 0.0);
    for (int k = 0; k < ncomp; ++k) {
      auto g = [&](double s) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
          if (comp_row[i] == k && a[i] > 0.0) acc -= a[i] * dprime(prob.entropy1, A[i] - s);
        for (int j = 0; j < m; ++j)
          if (comp_col[j] == k && b[j] > 0.0) acc += b[j] * dprime(prob.entropy2, B[j] + s);
        return acc;  // decreasing in s
      };
      double lo = -1.0, hi = 1.0;
      int guard = 0;
      while (g(lo) < 0.0 && guard++ < 60) lo *= 2.0;
      guard = 0;
      while (g(hi) > 0.0 && guard++ < 60) hi *= 2.0;
      if (!(g(lo) >= 0.0 && g(hi) <= 0.0)) continue;
      for (int it = 0; it < 100 && hi - lo > 1e-14 * (1.0 + std::abs(lo)); ++it) {
        double mid = 0.5 * (lo + hi);
        if (g(mid) >= 0.0)
          lo = mid;
        else
          hi = mid;
      }
      shift[k] = 0.5 * (lo + hi);
    }
    std::vector<double> seed(m, -inf);
    for (int j = 0; j < m; ++j) {
      if (comp_col[j] >= 0)
        seed[j] = prob.entropy2.conj_concave(B[j] + shift[comp_col[j]]);
      else
        seed[j] = b[j] > 0.0 ? prob.entropy2.conj_concave(v[j]) : -inf;
    }
    return seed;
  };

  auto build_dual = [&](DualPotentials& pot, const Plan* plan) {
    std::vector<double> seed(m, 0.0);
    for (int j = 0; j < m; ++j) seed[j] = prob.entropy2.conj_concave(v[j]);
    double best = dual_ascent(pot, std::move(seed));
    if (plan != nullptr && smooth1 && smooth2) {
      DualPotentials pot3;
      double d3 = dual_ascent(pot3, support_seed(*plan));
      if (d3 > best) {
        best = d3;
        pot = std::move(pot3);
      }
    }
    if (plan != nullptr && prob.entropy2.family() == EntropyFamily::Power) {
      // complementary seed from the polished plan: psi = F°(-F'(sigma))
      auto g2 = plan->col_sums();
      std::vector<double> seed2(m, 0.0);
      for (int j = 0; j < m; ++j) {
        if (b[j] <= 0.0) continue;
        double sig = g2[j] / b[j];
        seed2[j] = sig > 0.0 ? prob.entropy2.conj_concave(-prob.entropy2.derivative(sig))
                             : prob.entropy2.f_at_zero();
      }
      DualPotentials pot2;
      double d2 = dual_ascent(pot2, std::move(seed2));
      if (d2 > best) {
        best = d2;
        pot = std::move(pot2);
      }
    }
    if (plan != nullptr) component_shift_polish(pot, *plan, best);
    return best;
  };

  // --- primal plan from the last regularized iterate ---
  auto build_plan = [&]() {
    Plan plan(n, m);
    for (int i = 0; i < n; ++i) {
      if (s1.logw[i] == -inf) continue;
      for (int j = 0; j < m; ++j) {
        if (s2.logw[j] == -inf) continue;
        double c = prob.cost(i, j);
        if (c == inf) continue;
        double lg = (u[i] + v[j] - c) / eps_last + s1.logw[i] + s2.logw[j];
        plan.at(i, j) = std::exp(std::min(lg, 50.0));
      }
    }
    plan.prune(1e-15 * (prob.mass1() + prob.mass2()) / std::max(1, n * m));
    return plan;
  };

  // restore hard marginal constraints by scaling and greedy repair
  auto restore_constraints = [&](Plan& plan) {
    if (!constrained1 && !constrained2) return;
    auto bounds = [&](const EntropyFunction& e) {
      if (e.family() == EntropyFamily::Indicator) return std::make_pair(1.0, 1.0);
      if (e.family() == EntropyFamily::Interval)
        return std::make_pair(e.interval_lo(), e.interval_hi());
      return std::make_pair(0.0, inf);
    };
    auto [lo1, hi1] = bounds(prob.entropy1);
    auto [lo2, hi2] = bounds(prob.entropy2);
    // scale rows, then columns, down to their caps
    auto g1 = plan.row_sums();
    for (int i = 0; i < n; ++i) {
      double cap = mul0inf(hi1, a[i]);
      if (g1[i] > cap && g1[i] > 0.0) {
        double r = cap / g1[i];
        for (int j = 0; j < m; ++j) plan.at(i, j) *= r;
      }
    }
    auto g2 = plan.col_sums();
    for (int j = 0; j < m; ++j) {
      double cap = mul0inf(hi2, b[j]);
      if (g2[j] > cap && g2[j] > 0.0) {
        double r = cap / g2[j];
        for (int i = 0; i < n; ++i) plan.at(i, j) *= r;
      }
    }
    // lift deficits: first matched pairs, then one-sided against slack
    g1 = plan.row_sums();
    g2 = plan.col_sums();
    std::vector<double> def1(n, 0.0), def2(m, 0.0);
    for (int i = 0; i < n; ++i) def1[i] = std::max(0.0, lo1 * a[i] - g1[i]);
    for (int j = 0; j < m; ++j) def2[j] = std::max(0.0, lo2 * b[j] - g2[j]);
    for (int i = 0; i < n; ++i) {
      if (def1[i] <= 0.0) continue;
      for (int j = 0; j < m && def1[i] > 0.0; ++j) {
        if (def2[j] <= 0.0 || prob.cost(i, j) == inf) continue;
        double add = std::min(def1[i], def2[j]);
        plan.at(i, j) += add;
        def1[i] -= add;
        def2[j] -= add;
      }
    }
    auto lift_rows = [&](std::vector<double>& deficit, bool row_side) {
      const int nn = row_side ? n : m;
      const int mm = row_side ? m : n;
      auto colcap = [&](int y) { return row_side ? mul0inf(hi2, b[y]) : mul0inf(hi1, a[y]); };
      auto colsum = row_side ? plan.col_sums() : plan.row_sums();
      for (int x = 0; x < nn; ++x) {
        while (deficit[x] > 1e-18) {
          int best = -1;
          double bc = inf;
          for (int y = 0; y < mm; ++y) {
            double c = row_side ? prob.cost(x, y) : prob.cost(y, x);
            if (c == inf) continue;
            if (colsum[y] < colcap(y) - 1e-18 && c < bc) {
              bc = c;
              best = y;
            }
          }
          if (best < 0) break;
          double add = std::min(deficit[x], colcap(best) - colsum[best]);
          if (row_side)
            plan.at(x, best) += add;
          else
            plan.at(best, x) += add;
          colsum[best] += add;
          deficit[x] -= add;
        }
      }
    };
    lift_rows(def1, true);
    g2 = plan.col_sums();
    for (int j = 0; j < m; ++j) def2[j] = std::max(0.0, lo2 * b[j] - g2[j]);
    lift_rows(def2, false);
    // exact rank-1 residual split keeps indicator marginals tight
    if (constrained1 && constrained2 && prob.entropy1.family() == EntropyFamily::Indicator &&
        prob.entropy2.family() == EntropyFamily::Indicator) {
      g1 = plan.row_sums();
      g2 = plan.col_sums();
      double total1 = 0.0, total2 = 0.0;
      for (int i = 0; i < n; ++i) total1 += std::max(0.0, a[i] - g1[i]);
      for (int j = 0; j < m; ++j) total2 += std::max(0.0, b[j] - g2[j]);
      if (total1 > 0.0 && total2 > 0.0) {
        for (int i = 0; i < n; ++i) {
          double e1 = std::max(0.0, a[i] - g1[i]);
          if (e1 == 0.0) continue;
          for (int j = 0; j < m; ++j) {
            double e2 = std::max(0.0, b[j] - g2[j]);
            if (e2 == 0.0) continue;
            plan.at(i, j) += e1 * e2 / total1;
          }
        }
      }
    }
  };

  // unregularized primal polish
  //  - smooth entropies: cyclic coordinate descent with an exact 1-D Newton
  //    solve per plan entry (globally convergent for this convex objective)
  //  - constraint entropies: scale/repair onto the marginal polytope
  //  - otherwise: projected gradient with backtracking
  auto polish = [&](Plan& plan) {
    if (constrained1 || constrained2) {
      restore_constraints(plan);
      return;
    }
    if (smooth1 && smooth2) {
      auto g1 = plan.row_sums();
      auto g2 = plan.col_sums();
      auto deriv1 = [&](int i, double gi) {
        return a[i] > 0.0 ? prob.entropy1.derivative(gi / a[i]) : prob.entropy1.recession();
      };
      auto deriv2 = [&](int j, double gj) {
        return b[j] > 0.0 ? prob.entropy2.derivative(gj / b[j]) : prob.entropy2.recession();
      };
      auto curv1 = [&](int i, double gi) {
        if (a[i] <= 0.0) return 0.0;
        double sig = std::max(gi / a[i], 1e-300);
        return std::pow(sig, prob.entropy1.power_exponent() - 2.0) / a[i];
      };
      auto curv2 = [&](int j, double gj) {
        if (b[j] <= 0.0) return 0.0;
        double sig = std::max(gj / b[j], 1e-300);
        return std::pow(sig, prob.entropy2.power_exponent() - 2.0) / b[j];
      };
      const double tol_cd = 1e-14 * mass_scale;
      for (int pass = 0; pass < 400; ++pass) {
        double moved = 0.0;
        for (int i = 0; i < n; ++i) {
          if (s1.logw[i] == -inf) continue;
          for (int j = 0; j < m; ++j) {
            if (s2.logw[j] == -inf) continue;
            double c = prob.cost(i, j);
            if (c == inf) continue;
            double x0 = plan(i, j);
            double base1 = g1[i] - x0, base2 = g2[j] - x0;
            double x = x0;
            for (int it = 0; it < 10; ++it) {
              double grad = deriv1(i, base1 + x) + deriv2(j, base2 + x) + c;
              if (x == 0.0 && grad >= 0.0) break;
              double h = curv1(i, base1 + x) + curv2(j, base2 + x);
              if (!(h > 0.0) || !std::isfinite(grad)) {
                x = std::isfinite(grad) && grad >= 0.0 ? 0.0 : x;
                if (!std::isfinite(grad)) x = std::max(x, 1e-12 * mass_scale);
                continue;
              }
              double nx = std::max(0.0, x - grad / h);
              if (std::abs(nx - x) <= 1e-16 * (1.0 + x)) {
                x = nx;
                break;
              }
              x = nx;
            }
            if (x != x0) {
              g1[i] += x - x0;
              g2[j] += x - x0;
              plan.at(i, j) = x;
              moved = std::max(moved, std::abs(x - x0));
            }
          }
        }
        if (moved < tol_cd) break;
      }
    }
    plan.prune(1e-15 * (prob.mass1() + prob.mass2()) / std::max(1, n * m));
  };

  Plan plan = build_plan();
  polish(plan);
  double primal = primal_value(plan, prob);
  DualPotentials pot;
  double dual = build_dual(pot, &plan);

  // adaptive deepening while the certificate misses the target
  double eps_more = eps_last;
  while (primal - dual > gap_target && eps_more > 2e-10 && sweeps < opts.max_iters) {
    eps_more *= 0.2;
    run_schedule({eps_more});
    Plan plan2 = build_plan();
    polish(plan2);
    double primal2 = primal_value(plan2, prob);
    DualPotentials pot2;
    double dual2 = build_dual(pot2, &plan2);
    if (dual2 > dual) {
      dual = dual2;
      pot = std::move(pot2);
    }
    if (primal2 < primal) {
      primal = primal2;
      plan = std::move(plan2);
    }
  }

  SolveStatus status =
      primal - dual <= gap_target ? SolveStatus::Converged : SolveStatus::MaxIterations;
  return detail::assemble_solution(prob, std::move(plan), std::move(pot), primal, dual, status,
                                   sweeps);
}

struct OptimalityReport {
  bool let_case = false;
  double max_support_residual = 0.0;   // complementarity residual on supp gamma
  double min_offsupport_slack = 0.0;   // most negative constraint slack off supp
  bool monotone_support = true;        // only meaningful with 1-D coordinates
  int violations = 0;
};

// Optimality conditions at a returned solution.  In the LET case (logarithmic
// entropies, log cost) verifies sigma1 sigma2 = cos^2(d_{pi/2}) = e^{-c} on the
// support and >= off the support; for other smooth entropies checks
// phi1 (+) phi2 <= c with equality on the support.  When 1-D coordinates are
// supplied the support is checked for monotonicity.
inline OptimalityReport check_optimality(const ETSolution& sol, const ETProblem& prob, double tol,
                                         const std::vector<double>& coords1 = {},
                                         const std::vector<double>& coords2 = {}) {
  OptimalityReport rep;
  const int n = prob.n(), m = prob.m();
  rep.let_case = prob.entropy1.family() == EntropyFamily::Power &&
                 prob.entropy1.power_exponent() == 1.0 &&
                 prob.entropy2.family() == EntropyFamily::Power &&
                 prob.entropy2.power_exponent() == 1.0 &&
                 prob.cost.kind == CostKind::LogCost;
  const double mass_floor = 1e-12 * (1.0 + prob.mass1() + prob.mass2());

  auto g1 = sol.plan.row_sums();
  auto g2 = sol.plan.col_sums();
  double worst_support = 0.0;
  double worst_off = inf;
  if (rep.let_case) {
    for (int i = 0; i < n; ++i) {
      if (g1[i] <= 0.0) continue;
      for (int j = 0; j < m; ++j) {
        if (g2[j] <= 0.0) continue;
        double target = prob.cost(i, j) == inf ? 0.0 : std::exp(-prob.cost(i, j));
        double prod = sol.sigma1[i] * sol.sigma2[j];
        if (sol.plan(i, j) > mass_floor) {
          worst_support = std::max(worst_support, std::abs(prod - target));
          if (std::abs(prod - target) > tol) ++rep.violations;
        } else {
          worst_off = std::min(worst_off, prod - target);
          if (prod - target < -tol) ++rep.violations;
        }
      }
    }
  } else {
    auto phi1 = sol.potentials.phi1(prob.entropy1);
    auto phi2 = sol.potentials.phi2(prob.entropy2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        double c = prob.cost(i, j);
        if (c == inf) continue;
        if (phi1[i] == -inf || phi2[j] == -inf) continue;
        double slack = c - phi1[i] - phi2[j];
        if (sol.plan(i, j) > mass_floor) {
          worst_support = std::max(worst_support, std::abs(slack));
          if (std::abs(slack) > tol) ++rep.violations;
        } else {
          worst_off = std::min(worst_off, slack);
          if (slack < -tol) ++rep.violations;
        }
      }
  }
  rep.max_support_residual = worst_support;
  rep.min_offsupport_slack = worst_off == inf ? 0.0 : worst_off;

  if (!coords1.empty() && !coords2.empty()) {
    auto trips = sol.plan.triplets(mass_floor);
    for (std::size_t p = 0; p < trips.size() && rep.monotone_support; ++p)
      for (std::size_t q = p + 1; q < trips.size(); ++q) {
        double dx = coords1[trips[p].i] - coords1[trips[q].i];
        double dy = coords2[trips[p].j] - coords2[trips[q].j];
        if (dx * dy < -tol * (1.0 + std::abs(dx * dy))) {
          rep.monotone_support = false;
          ++rep.violations;
          break;
        }
      }
  }
  return rep;
}

}  // namespace hellkan
