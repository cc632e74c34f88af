#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "hellkan/geometry.hpp"
#include "hellkan/measure.hpp"
#include "hellkan/solver.hpp"

namespace hellkan {

// Hellinger-Kantorovich distance and relatives.  HK^2 equals the optimal
// value of the logarithmic Entropy-Transport problem (log entropies, cost
// ell(d) = -log cos^2(d ^ pi/2)); GHK uses the squared distance instead.

struct DistanceCertificate {
  double value = 0.0;  // the distance
  double gap = 0.0;    // duality gap of the underlying solve, squared units
};

inline ETProblem make_let_problem(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                                  const GroundSpace& space) {
  return ETProblem{EntropyFunction::log(), EntropyFunction::log(),
                   CostMatrix::log_cost_on(space), mu1, mu2};
}

inline ETProblem make_ghk_problem(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                                  const GroundSpace& space) {
  return ETProblem{EntropyFunction::log(), EntropyFunction::log(),
                   CostMatrix::squared_distance_on(space), mu1, mu2};
}

inline ETSolution hk_solve(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                           const GroundSpace& space, const SolveOptions& opts = {}) {
  return solve_et(make_let_problem(mu1, mu2, space), opts);
}

namespace detail {
// canonical argument order makes the distance wrappers bitwise symmetric
inline bool measure_less(const DiscreteMeasure& x, const DiscreteMeasure& y) {
  if (x.support != y.support) return x.support < y.support;
  return x.weights < y.weights;
}
}  // namespace detail

inline DistanceCertificate hk_distance(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                                       const GroundSpace& space, const SolveOptions& opts = {}) {
  const bool swap = detail::measure_less(mu2, mu1);
  auto sol = hk_solve(swap ? mu2 : mu1, swap ? mu1 : mu2, space, opts);
  return {std::sqrt(std::max(sol.primal, 0.0)), sol.gap};
}

inline DistanceCertificate ghk_distance(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                                        const GroundSpace& space, const SolveOptions& opts = {}) {
  const bool swap = detail::measure_less(mu2, mu1);
  auto sol = solve_et(make_ghk_problem(swap ? mu2 : mu1, swap ? mu1 : mu2, space), opts);
  return {std::sqrt(std::max(sol.primal, 0.0)), sol.gap};
}

// squared Hellinger distance, atomwise on the union support
inline double hellinger_squared(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, int n) {
  auto a = mu1.dense(n);
  auto b = mu2.dense(n);
  StableSum s;
  for (int x = 0; x < n; ++x) {
    double d = std::sqrt(a[x]) - std::sqrt(b[x]);
    s.add(d * d);
  }
  return s.value();
}

inline double hellinger(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, int n) {
  return std::sqrt(hellinger_squared(mu1, mu2, n));
}

// p-Wasserstein distance via the indicator-entropy specialization; +inf when
// the masses differ
inline DistanceCertificate wasserstein(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                                       const GroundSpace& space, double power = 2.0,
                                       double truncation = inf, const SolveOptions& opts = {}) {
  double m1 = mu1.total(), m2 = mu2.total();
  if (m1 == 0.0 && m2 == 0.0) return {0.0, 0.0};
  if (std::abs(m1 - m2) > 1e-9 * (m1 + m2)) return {inf, 0.0};
  // rebalance float drift exactly so the indicator problem stays feasible
  DiscreteMeasure nu2 = mu2.scaled(m1 / m2);
  CostMatrix cost;
  cost.n = cost.m = space.size();
  cost.kind = CostKind::Explicit;
  cost.v.resize(static_cast<std::size_t>(cost.n) * cost.m);
  for (int i = 0; i < cost.n; ++i)
    for (int j = 0; j < cost.m; ++j)
      cost.at(i, j) = std::pow(std::min(space.dist(i, j), truncation), power);
  ETProblem prob{EntropyFunction::indicator(), EntropyFunction::indicator(), cost, mu1, nu2};
  auto sol = solve_et(prob, opts);
  return {std::pow(std::max(sol.primal, 0.0), 1.0 / power), sol.gap};
}

// Atomic plan on the cone with homogeneous marginals.  Vertex partners are
// encoded with a negative index and radius 0.
struct LiftedAtom {
  int x1 = -1;
  double r1 = 0.0;
  int x2 = -1;
  double r2 = 0.0;
  double mass = 0.0;
};

struct LiftedPlan {
  std::vector<LiftedAtom> atoms;
  DiscreteMeasure mu1, mu2;  // the measures whose homogeneous marginals they are

  // homogeneous marginal h^2_i: sum of mass * r_i^2 at x_i
  std::vector<double> homogeneous_marginal(int side, int n) const {
    std::vector<double> h(n, 0.0);
    for (const auto& at : atoms) {
      int x = side == 1 ? at.x1 : at.x2;
      double r = side == 1 ? at.r1 : at.r2;
      if (x >= 0 && r > 0.0) h[x] += at.mass * r * r;
    }
    return h;
  }
};

// Lift an optimal LET solution to the cone: one atom per plan entry with
// r_i = sqrt(rho_i); unmatched mass goes to vertex-paired atoms of radius 1.
inline LiftedPlan lift_plan(const ETSolution& sol, const ETProblem& prob,
                            double gap_threshold = -1.0) {
  double scale = 1.0 + prob.mass1() + prob.mass2();
  if (gap_threshold < 0.0) gap_threshold = 1e-4 * scale;
  if (!(sol.gap <= gap_threshold))
    throw std::invalid_argument("lift_plan: solution gap above threshold, refusing to lift");

  LiftedPlan lifted;
  lifted.mu1 = prob.mu1;
  lifted.mu2 = prob.mu2;
  const auto a = prob.a();
  const auto b = prob.b();
  const auto g1 = sol.plan.row_sums();
  const auto g2 = sol.plan.col_sums();
  for (const auto& t : sol.plan.triplets(0.0)) {
    LiftedAtom at;
    at.x1 = t.i;
    at.r1 = g1[t.i] > 0.0 ? std::sqrt(a[t.i] / g1[t.i]) : 0.0;
    at.x2 = t.j;
    at.r2 = g2[t.j] > 0.0 ? std::sqrt(b[t.j] / g2[t.j]) : 0.0;
    at.mass = t.mass;
    lifted.atoms.push_back(at);
  }
  for (int i = 0; i < prob.n(); ++i)
    if (a[i] > 0.0 && g1[i] == 0.0) lifted.atoms.push_back({i, 1.0, -1, 0.0, a[i]});
  for (int j = 0; j < prob.m(); ++j)
    if (b[j] > 0.0 && g2[j] == 0.0) lifted.atoms.push_back({-1, 0.0, j, 1.0, b[j]});
  return lifted;
}

struct WeightedPointCloud {
  std::vector<std::vector<double>> points;
  std::vector<double> weights;

  double total() const { return stable_sum(weights); }

  void add(std::vector<double> p, double w) {
    if (w == 0.0) return;
    points.push_back(std::move(p));
    weights.push_back(w);
  }

  // merge exactly coincident points
  WeightedPointCloud merged() const {
    std::map<std::vector<double>, double> acc;
    for (std::size_t k = 0; k < points.size(); ++k) acc[points[k]] += weights[k];
    WeightedPointCloud out;
    for (auto& [p, w] : acc) {
      out.points.push_back(p);
      out.weights.push_back(w);
    }
    return out;
  }
};

inline WeightedPointCloud cloud_of(const DiscreteMeasure& mu, const GroundSpace& space) {
  WeightedPointCloud c;
  for (std::size_t k = 0; k < mu.support.size(); ++k)
    c.add(space.point(mu.support[k]), mu.weights[k]);
  return c.merged();
}

// geodesic interpolation of the lifted plan: each atom follows its cone
// geodesic and contributes mass * r(t)^2 at the interpolated ground point
inline WeightedPointCloud geodesic_interp(const LiftedPlan& lifted, double t,
                                          const GroundSpace& space) {
  if (t < 0.0 || t > 1.0) throw std::domain_error("geodesic_interp: t outside [0,1]");
  if (t == 0.0) return cloud_of(lifted.mu1, space);
  if (t == 1.0) return cloud_of(lifted.mu2, space);
  WeightedPointCloud out;
  for (const auto& at : lifted.atoms) {
    if (at.r1 == 0.0 && at.r2 == 0.0) continue;  // both-vertex atoms carry no mass
    ConePoint y1{at.x1 >= 0 ? at.x1 : std::max(at.x2, 0), at.x1 >= 0 ? at.r1 : 0.0};
    ConePoint y2{at.x2 >= 0 ? at.x2 : std::max(at.x1, 0), at.x2 >= 0 ? at.r2 : 0.0};
    auto p = cone_geodesic(space, y1, y2, t);
    out.add(std::move(p.coords), at.mass * p.r * p.r);
  }
  return out.merged();
}

// assemble a ground space + measures from two clouds (for distances between
// interpolants living off the original grid)
struct CloudPair {
  GroundSpace space;
  DiscreteMeasure mu1, mu2;
};

inline CloudPair make_cloud_pair(const WeightedPointCloud& c1, const WeightedPointCloud& c2) {
  std::map<std::vector<double>, int> index;
  std::vector<std::vector<double>> pts;
  auto intern = [&](const std::vector<double>& p) {
    auto it = index.find(p);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(pts.size());
    index.emplace(p, id);
    pts.push_back(p);
    return id;
  };
  std::vector<int> s1, s2;
  std::vector<double> w1, w2;
  for (std::size_t k = 0; k < c1.points.size(); ++k) {
    s1.push_back(intern(c1.points[k]));
    w1.push_back(c1.weights[k]);
  }
  for (std::size_t k = 0; k < c2.points.size(); ++k) {
    s2.push_back(intern(c2.points[k]));
    w2.push_back(c2.weights[k]);
  }
  return {GroundSpace::from_points(std::move(pts)), DiscreteMeasure(s1, w1),
          DiscreteMeasure(s2, w2)};
}

inline DistanceCertificate hk_between_clouds(const WeightedPointCloud& c1,
                                             const WeightedPointCloud& c2,
                                             const SolveOptions& opts = {}) {
  auto pair = make_cloud_pair(c1, c2);
  return hk_distance(pair.mu1, pair.mu2, pair.space, opts);
}

// scaling table: HK under lambda * d (Hellinger side) and lambda * HK under
// d / lambda (Wasserstein side)
struct ScalingRow {
  double lambda = 1.0;
  double hk_up = 0.0;    // HK_{lambda d}
  double hk_down = 0.0;  // lambda * HK_{d / lambda}
  double gap_up = 0.0;
  double gap_down = 0.0;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  bool monotone_up = true;
  bool monotone_down = true;
};

inline ScalingTable scaling_limits(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                                   const GroundSpace& space, const std::vector<double>& factors,
                                   const SolveOptions& opts = {}) {
  ScalingTable table;
  for (double lam : factors) {
    if (!(lam > 0.0)) throw std::invalid_argument("scaling_limits: factors must be positive");
    ScalingRow row;
    row.lambda = lam;
    auto up = hk_distance(mu1, mu2, space.scaled(lam), opts);
    row.hk_up = up.value;
    row.gap_up = up.gap;
    auto down = hk_distance(mu1, mu2, space.scaled(1.0 / lam), opts);
    row.hk_down = lam * down.value;
    row.gap_down = down.gap;
    table.rows.push_back(row);
  }
  double slack = 3.0 * std::max(opts.gap_tol, 1e-6) * (1.0 + mu1.total() + mu2.total());
  for (std::size_t k = 1; k < table.rows.size(); ++k) {
    if (table.rows[k].lambda <= table.rows[k - 1].lambda) continue;
    if (table.rows[k].hk_up < table.rows[k - 1].hk_up - slack) table.monotone_up = false;
    if (table.rows[k].hk_down < table.rows[k - 1].hk_down - slack) table.monotone_down = false;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Bounded Lipschitz distance: the finite linear program
//   max <zeta, mu1 - mu2>  s.t.  |zeta| <= s,  |zeta(x)-zeta(y)| <= L d(x,y),
//                                s + L <= 1
// solved exactly by a dense primal simplex (w = zeta + s substitution keeps
// every variable nonnegative and the slack basis feasible).

struct BLResult {
  double value = 0.0;
  double slackness_residual = 0.0;
};

inline BLResult bl_distance(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                            const GroundSpace& space) {
  const int n = space.size();
  auto delta = mu1.dense(n);
  {
    auto b = mu2.dense(n);
    for (int i = 0; i < n; ++i) delta[i] -= b[i];
  }
  // variables: w_0..w_{n-1} (= zeta + s), s, L
  const int cols = n + 2;
  std::vector<std::vector<double>> A;
  std::vector<double> rhs;
  for (int i = 0; i < n; ++i) {  // w_i - 2 s <= 0
    std::vector<double> row(cols, 0.0);
    row[i] = 1.0;
    row[n] = -2.0;
    A.push_back(std::move(row));
    rhs.push_back(0.0);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      std::vector<double> row(cols, 0.0);
      row[i] = 1.0;
      row[j] = -1.0;
      row[n + 1] = -space.dist(i, j);
      A.push_back(std::move(row));
      rhs.push_back(0.0);
    }
  {
    std::vector<double> row(cols, 0.0);
    row[n] = 1.0;
    row[n + 1] = 1.0;
    A.push_back(std::move(row));
    rhs.push_back(1.0);
  }
  std::vector<double> c(cols, 0.0);
  double dsum = 0.0;
  for (int i = 0; i < n; ++i) {
    c[i] = delta[i];
    dsum += delta[i];
  }
  c[n] = -dsum;  // objective <zeta, delta> = <w, delta> - s * sum(delta)
  auto res = detail::simplex_max(A, rhs, c);
  if (!res.ok) throw std::runtime_error("bl_distance: simplex failed");
  return {std::max(res.value, 0.0), res.residual};
}

// discrete convolution of point clouds on R^k (used by the contraction tests)
inline WeightedPointCloud convolve(const WeightedPointCloud& mu, const WeightedPointCloud& nu) {
  WeightedPointCloud out;
  for (std::size_t p = 0; p < mu.points.size(); ++p)
    for (std::size_t q = 0; q < nu.points.size(); ++q) {
      std::vector<double> x = mu.points[p];
      for (std::size_t d = 0; d < x.size(); ++d) x[d] += nu.points[q][d];
      out.add(std::move(x), mu.weights[p] * nu.weights[q]);
    }
  return out.merged();
}

template <typename F>
inline WeightedPointCloud pushforward(const WeightedPointCloud& mu, F&& f) {
  WeightedPointCloud out;
  for (std::size_t p = 0; p < mu.points.size(); ++p) out.add(f(mu.points[p]), mu.weights[p]);
  return out.merged();
}

}  // namespace hellkan
