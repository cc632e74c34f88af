#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "hellkan/hk.hpp"
#include "hellkan/hopflax.hpp"

using namespace hellkan;

namespace {

GroundSpace line(std::initializer_list<double> xs) {
  std::vector<std::vector<double>> pts;
  for (double x : xs) pts.push_back({x});
  return GroundSpace::from_points(std::move(pts));
}

GroundSpace random_space(Rng& rng, int n, double span) {
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(0.0, span)});
  return GroundSpace::from_points(std::move(pts));
}

}  // namespace

TEST_CASE("constant data follow the scalar flow xi/(1+2t xi)") {
  auto g = line({0.0, 0.4, 1.1});
  for (double c : {-0.3, -0.1, 0.0, 0.2, 1.5}) {
    std::vector<double> xi(3, c);
    for (double t : {0.25, 0.5, 1.0}) {
      auto out = hopflax_apply(xi, t, g);
      for (double v : out) CHECK(v == Catch::Approx(c / (1.0 + 2.0 * t * c)).margin(1e-12));
    }
  }
}

TEST_CASE("two-point example and small-time limit") {
  auto g = line({0.0, pi / 3.0});
  std::vector<double> xi = {0.0, -0.25};
  auto out = hopflax_apply(xi, 1.0, g);
  CHECK(out[0] == Catch::Approx(0.0).margin(1e-14));
  CHECK(out[1] == Catch::Approx(-0.5).margin(1e-14));

  auto tiny = hopflax_apply(xi, 1e-7, g);
  CHECK(tiny[0] == Catch::Approx(xi[0]).margin(1e-6));
  CHECK(tiny[1] == Catch::Approx(xi[1]).margin(1e-6));
  CHECK(hopflax_apply(xi, 0.0, g) == xi);

  std::vector<double> bad = {0.0, -0.6};
  CHECK_THROWS_AS(hopflax_apply(bad, 0.5, g), std::domain_error);
}

TEST_CASE("sin-squared form agrees with the cos-squared form") {
  Rng rng(61);
  for (int it = 0; it < 20; ++it) {
    auto g = random_space(rng, 7, 3.0);
    std::vector<double> xi;
    for (int k = 0; k < 7; ++k) xi.push_back(rng.uniform(-0.45, 1.0));
    for (double t : {0.2, 0.7, 1.0}) {
      auto a = hopflax_apply(xi, t, g);
      auto b = hopflax_apply_sin_form(xi, t, g);
      for (int k = 0; k < 7; ++k) CHECK(a[k] == Catch::Approx(b[k]).margin(1e-12));
    }
  }
}

TEST_CASE("bounds, monotonicity in time and in the datum") {
  Rng rng(67);
  for (int it = 0; it < 20; ++it) {
    auto g = random_space(rng, 6, 2.5);
    std::vector<double> xi, xi_hi;
    for (int k = 0; k < 6; ++k) {
      xi.push_back(rng.uniform(-0.4, 0.8));
      xi_hi.push_back(xi.back() + rng.uniform(0.0, 0.3));
    }
    double a = *std::min_element(xi.begin(), xi.end());
    double b = *std::max_element(xi.begin(), xi.end());
    std::vector<double> prev = xi;
    for (double t : {0.25, 0.5, 0.75, 1.0}) {
      auto out = hopflax_apply(xi, t, g);
      for (int k = 0; k < 6; ++k) {
        CHECK(out[k] >= a / (1.0 + 2.0 * t * a) - 1e-12);  // per-slice bounds
        CHECK(out[k] <= b / (1.0 + 2.0 * t * b) + 1e-12);
        CHECK(out[k] <= prev[k] + 1e-12);  // nonincreasing in t
      }
      prev = out;
      auto hi = hopflax_apply(xi_hi, t, g);
      for (int k = 0; k < 6; ++k) CHECK(out[k] <= hi[k] + 1e-12);  // monotone in the datum
    }
    // t = 1 bounds of the duality theorem
    auto p1 = hopflax_apply(xi, 1.0, g);
    for (int k = 0; k < 6; ++k) {
      CHECK(p1[k] >= a / (1.0 + 2.0 * a) - 1e-12);
      CHECK(p1[k] <= b / (1.0 + 2.0 * b) + 1e-12);
      CHECK(p1[k] < 0.5);
    }
  }
}

TEST_CASE("semigroup property on constants") {
  auto g = line({0.0, 0.5});
  for (double c : {-0.2, 0.3, 2.0}) {
    std::vector<double> xi(2, c);
    for (double s : {0.2, 0.5}) {
      for (double t : {0.1, 0.4}) {
        auto two_step = hopflax_apply(hopflax_apply(xi, t, g), s, g);
        auto direct = hopflax_apply(xi, s + t, g);
        for (int k = 0; k < 2; ++k) CHECK(two_step[k] == Catch::Approx(direct[k]).margin(1e-12));
      }
    }
  }
}

TEST_CASE("locality: data vanishing outside a ball stay zero far away") {
  // points: a cluster near 0 and a far point at distance > pi/2
  auto g = line({0.0, 0.3, 0.5, 2.2});
  std::vector<double> xi = {-0.3, 0.4, 0.0, 0.0};  // vanishes outside B = {0, 0.3}
  auto out = hopflax_apply(xi, 1.0, g);
  CHECK(out[3] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("upwind residual of the Hamilton-Jacobi operator") {
  // constant datum: the analytic solution kills the operator; the forward
  // difference leaves an O(tau) one-sided error
  {
    std::vector<double> grid;
    for (int k = 0; k <= 100; ++k) grid.push_back(0.01 * k);
    std::vector<double> xi(grid.size(), 0.4);
    auto field = hopflax_field_1d(xi, {0.0, 0.1, 0.2, 0.3}, grid);
    auto res = hj_residual(field, grid);
    CHECK(res.max_residual <= 5.0 * 0.4 * 0.4 * 0.4 * 0.1);
    CHECK(res.max_residual >= -1e-9);  // forward differencing overshoots from below
  }

  // smooth datum on a resolved window (t large enough that the discrete min
  // moves off the diagonal): residual <= C (h + tau) and halving h and tau
  // roughly halves it
  auto run = [&](int npts, double tau) {
    std::vector<double> grid, xi;
    for (int k = 0; k < npts; ++k) {
      double x = 2.0 * pi * k / npts;
      grid.push_back(x);
      xi.push_back(0.3 * std::cos(x));
    }
    std::vector<double> times;
    for (double t = 0.4; t <= 0.6 + 1e-12; t += tau) times.push_back(t);
    auto field = hopflax_field_1d(xi, times, grid);
    return hj_residual(field, grid).max_residual;
  };
  double r1 = run(700, 2e-3);
  double r2 = run(1400, 1e-3);
  double h1 = 2.0 * pi / 700.0;
  CHECK(r1 <= 2.0 * (h1 + 2e-3));
  CHECK(r2 <= 0.65 * r1);
  CHECK(r2 >= 0.05 * r1);  // first order, not superconvergent
}

TEST_CASE("dual lower bound for HK^2") {
  auto g = line({0.0, pi / 3.0});
  auto mu0 = DiscreteMeasure({0}, {1.0});
  auto mu1 = DiscreteMeasure({1}, {1.0});

  std::vector<double> zero(2, 0.0);
  CHECK(hk_dual_lower_bound(mu0, mu1, zero, g) == Catch::Approx(0.0).margin(1e-15));

  auto prob = make_let_problem(mu0, mu1, g);
  auto sol = solve_et(prob);
  auto xi = xi_from_potential(sol.potentials.psi1);
  double bound = hk_dual_lower_bound(mu0, mu1, xi, g);
  CHECK(bound <= sol.primal + 1e-9);
  CHECK(bound == Catch::Approx(sol.primal).margin(1e-5));

  // random admissible data always stay below HK^2
  Rng rng(71);
  for (int it = 0; it < 15; ++it) {
    auto space = random_space(rng, 5, 2.0);
    std::vector<int> idx1 = {0, 1}, idx2 = {2, 3, 4};
    std::vector<double> w1 = {rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)};
    std::vector<double> w2 = {rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0),
                              rng.uniform(0.1, 1.0)};
    DiscreteMeasure m0(idx1, w1), m1(idx2, w2);
    double hk2 = solve_et(make_let_problem(m0, m1, space)).primal;
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> xi0;
      for (int k = 0; k < 5; ++k) xi0.push_back(rng.uniform(-0.45, 1.5));
      CHECK(hk_dual_lower_bound(m0, m1, xi0, space) <= hk2 + 1e-6);
    }
  }
}
