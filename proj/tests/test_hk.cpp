#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "hellkan/hk.hpp"

using namespace hellkan;

namespace {

GroundSpace line(std::initializer_list<double> xs) {
  std::vector<std::vector<double>> pts;
  for (double x : xs) pts.push_back({x});
  return GroundSpace::from_points(std::move(pts));
}

DiscreteMeasure random_measure_on(Rng& rng, const std::vector<int>& idx, double lo = 0.1,
                                  double hi = 1.5) {
  std::vector<double> w;
  for (std::size_t k = 0; k < idx.size(); ++k) w.push_back(rng.uniform(lo, hi));
  return DiscreteMeasure(idx, w);
}

// exact 1-D balanced transport oracle: the monotone coupling is optimal for
// convex costs of the displacement
double w2_monotone_oracle(std::vector<double> x1, std::vector<double> w1, std::vector<double> x2,
                          std::vector<double> w2) {
  std::vector<int> o1(x1.size()), o2(x2.size());
  std::iota(o1.begin(), o1.end(), 0);
  std::iota(o2.begin(), o2.end(), 0);
  std::sort(o1.begin(), o1.end(), [&](int a, int b) { return x1[a] < x1[b]; });
  std::sort(o2.begin(), o2.end(), [&](int a, int b) { return x2[a] < x2[b]; });
  double cost = 0.0;
  std::size_t i = 0, j = 0;
  double ri = w1[o1[0]], rj = w2[o2[0]];
  while (i < x1.size() && j < x2.size()) {
    double m = std::min(ri, rj);
    double d = x1[o1[i]] - x2[o2[j]];
    cost += m * d * d;
    ri -= m;
    rj -= m;
    if (ri <= 1e-15) {
      ++i;
      if (i < x1.size()) ri = w1[o1[i]];
    }
    if (rj <= 1e-15) {
      ++j;
      if (j < x2.size()) rj = w2[o2[j]];
    }
  }
  return std::sqrt(cost);
}

}  // namespace

TEST_CASE("hk distance closed cases") {
  auto g = line({0.0, pi / 3.0, 2.0});
  auto d1 = hk_distance(DiscreteMeasure({0}, {1.0}), DiscreteMeasure({1}, {1.0}), g);
  CHECK(d1.value == Catch::Approx(1.0).margin(2e-6));
  CHECK(d1.gap <= 1e-5);

  // beyond pi/2 both Diracs die: sqrt(a + b)
  auto d2 = hk_distance(DiscreteMeasure({0}, {1.0}), DiscreteMeasure({2}, {1.0}), g);
  CHECK(d2.value == Catch::Approx(std::sqrt(2.0)).margin(2e-6));

  // identical measures: exactly zero and bitwise symmetric
  auto mu = DiscreteMeasure({0, 1}, {0.4, 0.8});
  CHECK(hk_distance(mu, mu, g).value == 0.0);
  auto nu = DiscreteMeasure({0, 2}, {0.9, 0.2});
  CHECK(hk_distance(mu, nu, g).value == hk_distance(nu, mu, g).value);

  // the vertex-route identity min(d_C^2, r1^2 + r2^2) for two Diracs
  Rng rng(13);
  for (int it = 0; it < 10; ++it) {
    double a = rng.uniform(0.1, 2.0), b = rng.uniform(0.1, 2.0), d = rng.uniform(0.0, 3.0);
    auto g2 = line({0.0, d});
    double hk2 = hk_distance(DiscreteMeasure({0}, {a}), DiscreteMeasure({1}, {b}), g2).value;
    double cone2 = a + b - 2.0 * std::sqrt(a * b) * std::cos(std::min(d, pi));
    CHECK(hk2 * hk2 == Catch::Approx(std::min(cone2, a + b)).margin(1e-5));
  }
}

TEST_CASE("ghk distance") {
  Rng rng(17);
  for (int it = 0; it < 8; ++it) {
    double d = rng.uniform(0.0, 3.0);
    auto g = line({0.0, d});
    auto mu1 = DiscreteMeasure({0}, {1.0});
    auto mu2 = DiscreteMeasure({1}, {1.0});
    auto gd = ghk_distance(mu1, mu2, g);
    double expect = std::sqrt(2.0 - 2.0 * std::exp(-0.5 * d * d));
    CHECK(gd.value == Catch::Approx(expect).margin(2e-6));
    // GHK is the HK distance over the ground metric g(d)
    auto gg = GroundSpace::from_distance({{0.0, ghk_ground(d)}, {ghk_ground(d), 0.0}});
    CHECK(hk_distance(mu1, mu2, gg).value == Catch::Approx(gd.value).margin(2e-6));
  }
  auto g = line({0.0, 0.7, 1.9});
  auto mu = DiscreteMeasure({0, 2}, {0.5, 0.7});
  CHECK(ghk_distance(mu, mu, g).value == 0.0);
  // GHK <= HK
  Rng rng2(19);
  for (int it = 0; it < 10; ++it) {
    auto mu1 = random_measure_on(rng2, {0, 1});
    auto mu2 = random_measure_on(rng2, {1, 2});
    double ghkv = ghk_distance(mu1, mu2, g).value;
    double hkv = hk_distance(mu1, mu2, g).value;
    CHECK(ghkv <= hkv + 2e-6);
  }
}

TEST_CASE("hellinger closed form") {
  CHECK(hellinger_squared(DiscreteMeasure({0}, {0.9}), DiscreteMeasure({0}, {0.4}), 1) ==
        Catch::Approx(std::pow(std::sqrt(0.9) - std::sqrt(0.4), 2)));
  // disjoint supports: m1 + m2
  CHECK(hellinger_squared(DiscreteMeasure({0}, {0.9}), DiscreteMeasure({1}, {0.4}), 2) ==
        Catch::Approx(1.3));
  auto mu = DiscreteMeasure({0, 1}, {0.3, 0.6});
  CHECK(hellinger(mu, mu, 2) == 0.0);
}

TEST_CASE("wasserstein through the indicator specialization") {
  auto g = line({0.0, 1.0});
  CHECK(wasserstein(DiscreteMeasure({0}, {1.0}), DiscreteMeasure({1}, {1.0}), g).value ==
        Catch::Approx(1.0).margin(1e-6));
  CHECK(wasserstein(DiscreteMeasure({0}, {1.0}), DiscreteMeasure({1}, {2.0}), g).value == inf);
  auto mu = DiscreteMeasure({0, 1}, {0.5, 0.5});
  CHECK(wasserstein(mu, mu, g).value == 0.0);

  // against the 1-D monotone-coupling oracle
  Rng rng(23);
  for (int it = 0; it < 6; ++it) {
    int n = rng.uniform_int(2, 5), m = rng.uniform_int(2, 5);
    std::vector<double> xs;
    for (int k = 0; k < n + m; ++k) xs.push_back(rng.uniform(0.0, 2.0));
    std::vector<std::vector<double>> pts;
    for (double x : xs) pts.push_back({x});
    auto space = GroundSpace::from_points(pts);
    std::vector<int> i1, i2;
    std::vector<double> w1, w2, x1, x2;
    for (int k = 0; k < n; ++k) {
      i1.push_back(k);
      w1.push_back(rng.uniform(0.1, 1.0));
      x1.push_back(xs[k]);
    }
    double m1 = stable_sum(w1);
    for (int k = 0; k < m; ++k) {
      i2.push_back(n + k);
      w2.push_back(rng.uniform(0.1, 1.0));
      x2.push_back(xs[n + k]);
    }
    double m2 = stable_sum(w2);
    for (double& w : w2) w *= m1 / m2;  // balance
    auto got = wasserstein(DiscreteMeasure(i1, w1), DiscreteMeasure(i2, w2), space);
    double oracle = w2_monotone_oracle(x1, w1, x2, w2);
    // the solved squared cost sits within [oracle^2, oracle^2 + gap]
    CHECK(got.value * got.value >= oracle * oracle - 1e-9);
    CHECK(got.value * got.value <= oracle * oracle + got.gap + 1e-9);
    CHECK(got.gap <= 1e-6 * (1.0 + 2.0 * stable_sum(w1)));
  }

  // the monotone oracle itself against exhaustive permutation pairing
  Rng rng2(29);
  for (int it = 0; it < 5; ++it) {
    int n = 4;
    std::vector<double> x1, x2, w(n, 1.0 / n);
    for (int k = 0; k < n; ++k) {
      x1.push_back(rng2.uniform(0.0, 2.0));
      x2.push_back(rng2.uniform(0.0, 2.0));
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = inf;
    do {
      double cost = 0.0;
      for (int k = 0; k < n; ++k) cost += (x1[k] - x2[perm[k]]) * (x1[k] - x2[perm[k]]) / n;
      best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(w2_monotone_oracle(x1, w, x2, w) == Catch::Approx(std::sqrt(best)).epsilon(1e-12));
  }
}

TEST_CASE("lifting optimal plans to the cone") {
  auto g = line({0.0, pi / 3.0});
  auto mu1 = DiscreteMeasure({0}, {1.0});
  auto mu2 = DiscreteMeasure({1}, {1.0});
  auto prob = make_let_problem(mu1, mu2, g);
  auto sol = solve_et(prob);
  auto lifted = lift_plan(sol, prob);
  REQUIRE(lifted.atoms.size() == 1);
  CHECK(lifted.atoms[0].r1 == Catch::Approx(std::sqrt(2.0)).margin(1e-4));
  CHECK(lifted.atoms[0].r2 == Catch::Approx(std::sqrt(2.0)).margin(1e-4));
  CHECK(lifted.atoms[0].mass == Catch::Approx(0.5).margin(1e-4));
  // transported atoms satisfy r1 r2 cos(d) = 1
  CHECK(lifted.atoms[0].r1 * lifted.atoms[0].r2 * std::cos(pi / 3.0) ==
        Catch::Approx(1.0).margin(1e-3));
  auto h1 = lifted.homogeneous_marginal(1, 2);
  CHECK(h1[0] == Catch::Approx(1.0).margin(1e-9));

  // mu2 = 0: everything dies at the vertex
  auto prob0 = make_let_problem(mu1, DiscreteMeasure({}, {}), g);
  auto sol0 = solve_et(prob0);
  auto lift0 = lift_plan(sol0, prob0);
  REQUIRE(lift0.atoms.size() == 1);
  CHECK(lift0.atoms[0].x2 == -1);
  CHECK(lift0.atoms[0].r1 == 1.0);
  CHECK(lift0.atoms[0].mass == 1.0);

  // d >= pi/2: no transported atom survives
  auto gfar = line({0.0, 2.0});
  auto probf = make_let_problem(mu1, DiscreteMeasure({1}, {0.7}), gfar);
  auto solf = solve_et(probf);
  auto liftf = lift_plan(solf, probf);
  REQUIRE(liftf.atoms.size() == 2);
  for (const auto& at : liftf.atoms) CHECK((at.x1 == -1 || at.x2 == -1));

  // refusing to lift a poor solution
  auto bad = sol;
  bad.gap = 1.0;
  CHECK_THROWS_AS(lift_plan(bad, prob), std::invalid_argument);

  // random instances: homogeneous marginals reproduce the inputs and nothing
  // is transported across pi/2
  Rng rng(31);
  for (int it = 0; it < 6; ++it) {
    std::vector<std::vector<double>> pts;
    for (int k = 0; k < 6; ++k) pts.push_back({rng.uniform(0.0, 2.2)});
    auto space = GroundSpace::from_points(pts);
    auto m1 = random_measure_on(rng, {0, 1, 2});
    auto m2 = random_measure_on(rng, {3, 4, 5});
    auto p = make_let_problem(m1, m2, space);
    auto s = solve_et(p);
    auto lift = lift_plan(s, p);
    auto hm1 = lift.homogeneous_marginal(1, 6);
    auto hm2 = lift.homogeneous_marginal(2, 6);
    auto a = p.a();
    auto b = p.b();
    for (int x = 0; x < 6; ++x) {
      double vertex1 = 0.0, vertex2 = 0.0;
      for (const auto& at : lift.atoms) {
        if (at.x1 == x && at.x2 == -1) vertex1 += at.mass;
        if (at.x2 == x && at.x1 == -1) vertex2 += at.mass;
      }
      CHECK(hm1[x] + vertex1 == Catch::Approx(a[x]).margin(1e-9));
      CHECK(hm2[x] + vertex2 == Catch::Approx(b[x]).margin(1e-9));
    }
    for (const auto& at : lift.atoms)
      if (at.x1 >= 0 && at.x2 >= 0 && at.r1 > 0.0 && at.r2 > 0.0)
        CHECK(space.dist(at.x1, at.x2) < pi / 2.0);
  }
}

TEST_CASE("geodesic interpolation") {
  auto g = line({0.0, pi / 3.0});
  auto mu1 = DiscreteMeasure({0}, {1.0});
  auto mu2 = DiscreteMeasure({1}, {1.0});
  auto prob = make_let_problem(mu1, mu2, g);
  auto sol = solve_et(prob);
  auto lifted = lift_plan(sol, prob);

  // endpoints are bit-exact copies of the inputs
  auto c0 = geodesic_interp(lifted, 0.0, g);
  REQUIRE(c0.points.size() == 1);
  CHECK(c0.points[0][0] == 0.0);
  CHECK(c0.weights[0] == 1.0);

  // midpoint: single atom of mass r(1/2)^2 * plan mass = 0.75
  auto cm = geodesic_interp(lifted, 0.5, g);
  REQUIRE(cm.points.size() == 1);
  CHECK(cm.weights[0] == Catch::Approx(0.75).margin(1e-4));
  CHECK(cm.points[0][0] > 0.0);
  CHECK(cm.points[0][0] < pi / 3.0);

  // pure growth: mu_t = (1-t)^2 mu_0
  auto prob0 = make_let_problem(DiscreteMeasure({0}, {0.9}), DiscreteMeasure({}, {}), g);
  auto sol0 = solve_et(prob0);
  auto lift0 = lift_plan(sol0, prob0);
  for (double t : {0.25, 0.5, 0.75}) {
    auto ct = geodesic_interp(lift0, t, g);
    REQUIRE(ct.points.size() == 1);
    CHECK(ct.weights[0] == Catch::Approx((1.0 - t) * (1.0 - t) * 0.9).epsilon(1e-12));
    CHECK(ct.points[0][0] == 0.0);
  }

  // constant speed along the interpolation
  Rng rng(37);
  std::vector<std::vector<double>> pts;
  for (int k = 0; k < 5; ++k) pts.push_back({rng.uniform(0.0, 1.2)});
  auto space = GroundSpace::from_points(pts);
  auto m1 = random_measure_on(rng, {0, 1});
  auto m2 = random_measure_on(rng, {2, 3, 4});
  auto p = make_let_problem(m1, m2, space);
  auto s = solve_et(p);
  auto lift = lift_plan(s, p);
  double total = std::sqrt(s.primal);
  for (double ta : {0.0, 0.5}) {
    for (double tb : {0.25, 1.0}) {
      auto ca = geodesic_interp(lift, ta, space);
      auto cb = geodesic_interp(lift, tb, space);
      double d = hk_between_clouds(ca, cb).value;
      CHECK(d == Catch::Approx(std::abs(tb - ta) * total).margin(1e-4));
    }
  }
}

TEST_CASE("scaling limits recover Hellinger and Wasserstein") {
  auto g = line({0.0, 1.0});
  auto mu1 = DiscreteMeasure({0}, {1.0});
  auto mu2 = DiscreteMeasure({1}, {1.0});
  auto table = scaling_limits(mu1, mu2, g, {1.0, 2.0, 4.0, 8.0});
  CHECK(table.monotone_up);
  CHECK(table.monotone_down);
  // lambda = 2 pushes d past pi/2: HK^2 = 2 = Hell^2
  CHECK(table.rows[1].hk_up * table.rows[1].hk_up == Catch::Approx(2.0).margin(1e-5));
  // lambda = 1 Wasserstein side: sqrt(2 - 2 cos 1)
  CHECK(table.rows[0].hk_down == Catch::Approx(std::sqrt(2.0 - 2.0 * std::cos(1.0))).margin(1e-5));
  // the Wasserstein-side limit approaches W = 1
  CHECK(table.rows[3].hk_down <= 1.0 + 1e-6);
  CHECK(table.rows[3].hk_down >= 0.99);
}

TEST_CASE("bounded Lipschitz distance by exact LP") {
  auto g = line({0.0, 1.0});
  auto mu = DiscreteMeasure({0, 1}, {0.4, 0.6});
  CHECK(bl_distance(mu, mu, g).value == Catch::Approx(0.0).margin(1e-12));
  // BL(a delta, 0) = a, optimal zeta = 1
  CHECK(bl_distance(DiscreteMeasure({0}, {0.7}), DiscreteMeasure({}, {}), g).value ==
        Catch::Approx(0.7).epsilon(1e-12));
  // BL(delta_0, delta_1) = 2/3 at sup|zeta| = 1/3, Lip = 2/3
  auto r = bl_distance(DiscreteMeasure({0}, {1.0}), DiscreteMeasure({1}, {1.0}), g);
  CHECK(r.value == Catch::Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(r.slackness_residual <= 1e-6);

  // comparison with HK: BL <= C_* (m1 + m2)^{1/2} HK
  Rng rng(41);
  const double cstar = std::sqrt(2.0 + pi * pi / 2.0);
  for (int it = 0; it < 10; ++it) {
    std::vector<std::vector<double>> pts;
    for (int k = 0; k < 5; ++k) pts.push_back({rng.uniform(0.0, 2.5)});
    auto space = GroundSpace::from_points(pts);
    auto m1 = random_measure_on(rng, {0, 1, 2});
    auto m2 = random_measure_on(rng, {2, 3, 4});
    double bl = bl_distance(m1, m2, space).value;
    double hk = hk_distance(m1, m2, space).value;
    CHECK(bl <= cstar * std::sqrt(m1.total() + m2.total()) * hk + 1e-6);
  }
}

TEST_CASE("metric and order properties on random instances") {
  Rng rng(47);
  for (int it = 0; it < 8; ++it) {
    std::vector<std::vector<double>> pts;
    for (int k = 0; k < 6; ++k) pts.push_back({rng.uniform(0.0, 1.6), rng.uniform(0.0, 1.6)});
    auto space = GroundSpace::from_points(pts);
    auto m0 = random_measure_on(rng, {0, 1});
    auto m1 = random_measure_on(rng, {2, 3});
    auto m2 = random_measure_on(rng, {4, 5});
    double d01 = hk_distance(m0, m1, space).value;
    double d12 = hk_distance(m1, m2, space).value;
    double d02 = hk_distance(m0, m2, space).value;
    CHECK(d02 <= d01 + d12 + 1e-6);
    double g01 = ghk_distance(m0, m1, space).value;
    double g12 = ghk_distance(m1, m2, space).value;
    double g02 = ghk_distance(m0, m2, space).value;
    CHECK(g02 <= g01 + g12 + 1e-6);

    // order: GHK <= HK <= Hell
    CHECK(g01 <= d01 + 1e-6);
    CHECK(d01 <= hellinger(m0, m1, 6) + 1e-6);

    // balanced case: HK <= W_{d ^ pi/2} <= W_d
    double mtot = m0.total();
    auto m1b = m1.scaled(mtot / m1.total());
    double hkb = hk_distance(m0, m1b, space).value;
    double wt = wasserstein(m0, m1b, space, 2.0, pi / 2.0).value;
    double w = wasserstein(m0, m1b, space, 2.0).value;
    CHECK(hkb <= wt + 1e-5);
    CHECK(wt <= w + 1e-5);
  }
}

TEST_CASE("convolution contraction and positive curvature probes") {
  Rng rng(53);
  for (int it = 0; it < 4; ++it) {
    // measures on a small 1-D grid
    double h = 0.3;
    WeightedPointCloud mu1, mu2, nu;
    for (int k = 0; k < 4; ++k) {
      mu1.add({h * k}, rng.uniform(0.1, 1.0));
      mu2.add({h * k}, rng.uniform(0.1, 1.0));
    }
    nu.add({0.0}, rng.uniform(0.1, 0.8));
    nu.add({h}, rng.uniform(0.1, 0.8));
    double numass = nu.total();
    double base = hk_between_clouds(mu1, mu2).value;
    double conv = hk_between_clouds(convolve(mu1, nu), convolve(mu2, nu)).value;
    CHECK(conv * conv <= numass * base * base + 1e-6);

    // 1-Lipschitz pushforward contracts
    auto f = [](const std::vector<double>& x) { return std::vector<double>{0.5 * x[0]}; };
    double push = hk_between_clouds(pushforward(mu1, f), pushforward(mu2, f)).value;
    CHECK(push <= base + 1e-6);
  }

  // PC inequality on families over a shared 1-D grid
  for (int it = 0; it < 3; ++it) {
    std::vector<std::vector<double>> pts;
    for (int k = 0; k < 4; ++k) pts.push_back({0.35 * k});
    auto space = GroundSpace::from_points(pts);
    std::vector<DiscreteMeasure> mus;
    for (int t = 0; t < 4; ++t) mus.push_back(random_measure_on(rng, {0, 1, 2, 3}));
    std::vector<double> lam = {rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0),
                               rng.uniform(0.2, 1.0)};
    double lhs = 0.0, rhs = 0.0;
    std::vector<std::vector<double>> d2(4, std::vector<double>(4, 0.0));
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q) {
        double d = hk_distance(mus[p], mus[q], space).value;
        d2[p][q] = d2[q][p] = d * d;
      }
    for (int p = 1; p <= 3; ++p)
      for (int q = 1; q <= 3; ++q) {
        lhs += lam[p - 1] * lam[q - 1] * d2[p][q];
        rhs += 2.0 * lam[p - 1] * lam[q - 1] * d2[0][q];
      }
    CHECK(lhs <= rhs + 1e-6);
  }
}
