#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "hellkan/entropy.hpp"
#include "hellkan/perspective.hpp"

using namespace hellkan;

TEST_CASE("perspective closed forms at pinned points") {
  // log family
  CHECK(perspective_closed(PerspectiveFamily::Log, 1.0, 1.0, 0.0).value ==
        Catch::Approx(0.0).margin(1e-14));
  CHECK(perspective_closed(PerspectiveFamily::Log, 1.0, 4.0, std::log(2.0)).value ==
        Catch::Approx(5.0 - 2.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(perspective_closed(PerspectiveFamily::Log, 1.0, 1.0, inf).value == Catch::Approx(2.0));
  // quadratic: h(1) = 3, value h/4 at unit radii
  CHECK(perspective_closed(PerspectiveFamily::Quadratic, 1.0, 1.0, 1.0).value ==
        Catch::Approx(0.75));
  // total variation: |r2-r1| + (c ^ 2)(r1 ^ r2)
  CHECK(perspective_closed(PerspectiveFamily::TV, 2.0, 1.0, 1.0).value == Catch::Approx(2.0));
}

TEST_CASE("numeric perspective matches pinned values") {
  auto u1 = EntropyFunction::log();
  auto ev = perspective_numeric(u1, u1, 1.0, 1.0, 0.0);
  CHECK(ev.value == Catch::Approx(0.0).margin(1e-12));
  auto ev2 = perspective_numeric(u1, u1, 1.0, 4.0, std::log(2.0));
  CHECK(ev2.value == Catch::Approx(5.0 - 2.0 * std::sqrt(2.0)).epsilon(1e-10));
  REQUIRE(ev2.argmin_theta.has_value());
  CHECK(*ev2.argmin_theta == Catch::Approx(std::sqrt(4.0) * std::exp(-0.5 * std::log(2.0))).epsilon(1e-6));
  // c = +inf collapses to F1(0) r1 + F2(0) r2
  auto tv = EntropyFunction::total_variation();
  CHECK(perspective_numeric(tv, tv, 2.0, 3.0, inf).value == Catch::Approx(5.0));
  CHECK(perspective_numeric(u1, u1, 1.5, 0.5, inf).value == Catch::Approx(2.0));
}

TEST_CASE("closed and numeric evaluations agree on random inputs") {
  Rng rng(31);
  struct Case {
    PerspectiveFamily fam;
    EntropyFunction e;
    double p;
  };
  std::vector<Case> cases = {
      {PerspectiveFamily::Log, EntropyFunction::log(), 1.0},
      {PerspectiveFamily::ReverseLog, EntropyFunction::power(0.0), 0.0},
      {PerspectiveFamily::Quadratic, EntropyFunction::power(2.0), 2.0},
      {PerspectiveFamily::Power, EntropyFunction::power(2.0), 2.0},
      {PerspectiveFamily::Power, EntropyFunction::power(0.5), 0.5},
      {PerspectiveFamily::Power, EntropyFunction::power(3.0), 3.0},
      {PerspectiveFamily::InversePower, EntropyFunction::power(-1.0), -1.0},
      {PerspectiveFamily::TV, EntropyFunction::total_variation(), 0.0},
  };
  for (const auto& cs : cases) {
    for (int it = 0; it < 1000; ++it) {
      double r1 = rng.uniform(0.0, 3.0);
      double r2 = rng.uniform(0.0, 3.0);
      double c = rng.uniform(0.0, 4.0);
      double closed = cs.fam == PerspectiveFamily::Power
                          ? perspective_closed(cs.fam, r1, r2, c, cs.p).value
                          : perspective_closed(cs.fam, r1, r2, c).value;
      double numeric = perspective_numeric(cs.e, cs.e, r1, r2, c).value;
      if (closed == inf) {
        CHECK(numeric == inf);
        continue;
      }
      CHECK(numeric == Catch::Approx(closed).margin(1e-10 * (1.0 + std::abs(closed))));
    }
  }
}

TEST_CASE("perspective is 1-homogeneous and midpoint convex") {
  Rng rng(37);
  auto u1 = EntropyFunction::log();
  auto tv = EntropyFunction::total_variation();
  for (int it = 0; it < 300; ++it) {
    double r1 = rng.uniform(0.01, 2.0), r2 = rng.uniform(0.01, 2.0);
    double c = rng.uniform(0.0, 3.0);
    double lam = rng.uniform(0.1, 5.0);
    for (const auto& e : {u1, tv}) {
      double h = perspective_numeric(e, e, r1, r2, c).value;
      double hs = perspective_numeric(e, e, lam * r1, lam * r2, c).value;
      CHECK(hs == Catch::Approx(lam * h).margin(1e-12 * (1.0 + lam * h)));
    }
    // midpoint convexity in (r1, r2)
    double s1 = rng.uniform(0.01, 2.0), s2 = rng.uniform(0.01, 2.0);
    double hm = perspective_numeric(u1, u1, 0.5 * (r1 + s1), 0.5 * (r2 + s2), c).value;
    double avg = 0.5 * perspective_numeric(u1, u1, r1, r2, c).value +
                 0.5 * perspective_numeric(u1, u1, s1, s2, c).value;
    CHECK(hm <= avg + 1e-10);
  }
}

TEST_CASE("perspective is nondecreasing and concave in c") {
  Rng rng(41);
  auto u1 = EntropyFunction::log();
  auto q = EntropyFunction::power(2.0);
  for (const auto& e : {u1, q}) {
    for (int it = 0; it < 100; ++it) {
      double r1 = rng.uniform(0.1, 2.0), r2 = rng.uniform(0.1, 2.0);
      double c0 = rng.uniform(0.0, 2.0), dc = rng.uniform(0.01, 1.0);
      double h0 = perspective_numeric(e, e, r1, r2, c0).value;
      double h1 = perspective_numeric(e, e, r1, r2, c0 + dc).value;
      double h2 = perspective_numeric(e, e, r1, r2, c0 + 2.0 * dc).value;
      CHECK(h1 >= h0 - 1e-11);
      CHECK(h2 >= h1 - 1e-11);
      CHECK(h1 >= 0.5 * (h0 + h2) - 1e-9);  // concavity in c
    }
  }
}

TEST_CASE("pure entropy reduction at c = 0 is the squared Hellinger integrand") {
  Rng rng(43);
  auto u1 = EntropyFunction::log();
  for (int it = 0; it < 200; ++it) {
    double r1 = rng.uniform(0.0, 3.0), r2 = rng.uniform(0.0, 3.0);
    double h = perspective_numeric(u1, u1, r1, r2, 0.0).value;
    double hel = (std::sqrt(r1) - std::sqrt(r2)) * (std::sqrt(r1) - std::sqrt(r2));
    CHECK(h == Catch::Approx(hel).margin(1e-10 * (1.0 + hel)));
  }
}

TEST_CASE("perspective upper bound H_c <= F1(0) r1 + F2(0) r2") {
  Rng rng(47);
  for (const auto& e : {EntropyFunction::log(), EntropyFunction::power(2.0),
                        EntropyFunction::total_variation()}) {
    for (int it = 0; it < 200; ++it) {
      double r1 = rng.uniform(0.0, 2.0), r2 = rng.uniform(0.0, 2.0), c = rng.uniform(0.0, 6.0);
      double h = perspective_numeric(e, e, r1, r2, c).value;
      CHECK(h <= mul0inf(r1, e.f_at_zero()) + mul0inf(r2, e.f_at_zero()) + 1e-11);
      CHECK(h >= -1e-12);
    }
  }
}

TEST_CASE("dual characterization of the perspective") {
  auto u1 = EntropyFunction::log();
  // c = 0: value 0 with the best sampled bound nonnegative-ish
  auto rep0 = perspective_dual_check(u1, u1, 1.0, 1.0, 0.0, 0.0, 4000);
  CHECK(rep0.ok);
  CHECK(rep0.best_bound >= -1e-9);
  // tightness on the log example with a dense grid
  double val = 5.0 - 2.0 * std::sqrt(2.0);
  auto rep = perspective_dual_check(u1, u1, 1.0, 4.0, std::log(2.0), val, 10000);
  CHECK(rep.ok);
  CHECK(rep.slack <= 1e-4);
  // c = +inf attains the bound at psi_i = F_i(0)
  auto repi = perspective_dual_check(u1, u1, 1.5, 0.5, inf, 2.0);
  CHECK(repi.ok);
  CHECK(repi.best_bound == Catch::Approx(2.0));
}
