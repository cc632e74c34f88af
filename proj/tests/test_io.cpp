#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "hellkan/io.hpp"

using namespace hellkan;
using hellkan::io::json;

TEST_CASE("entropy serialization round trips") {
  for (const auto& e :
       {EntropyFunction::log(), EntropyFunction::power(0.5), EntropyFunction::total_variation(),
        EntropyFunction::indicator(), EntropyFunction::interval(0.5, 2.5),
        EntropyFunction::interval(0.0, inf)}) {
    auto back = io::parse_entropy(io::entropy_json(e));
    CHECK(back == e);
  }
  CHECK_THROWS_AS(io::parse_entropy(json{{"family", "exotic"}}), io::InputError);
}

TEST_CASE("space and measure serialization") {
  auto g = GroundSpace::from_points({{0.0, 1.0}, {0.5, 0.25}});
  auto back = io::parse_space(io::space_json(g));
  CHECK(back.size() == 2);
  CHECK(back.dist(0, 1) == Catch::Approx(g.dist(0, 1)));

  auto gd = GroundSpace::from_distance({{0.0, 2.0}, {2.0, 0.0}});
  auto backd = io::parse_space(io::space_json(gd));
  CHECK(backd.dist(0, 1) == 2.0);
  CHECK_FALSE(backd.euclidean());

  DiscreteMeasure mu({0, 1}, {0.25, 1.5});
  auto mu2 = io::parse_measure(io::measure_json(mu));
  CHECK(mu2.support == mu.support);
  CHECK(mu2.weights == mu.weights);
}

TEST_CASE("problem parsing with defaults and explicit costs") {
  json j = {
      {"space", {{"points", {{0.0}, {0.7}}}}},
      {"mu1", {{"support", {0}}, {"weights", {1.0}}}},
      {"mu2", {{"support", {1}}, {"weights", {0.5}}}},
  };
  auto bundle = io::parse_problem(j);
  CHECK(bundle.problem.entropy1.family() == EntropyFamily::Power);  // defaults to log
  CHECK(bundle.problem.cost.kind == CostKind::LogCost);
  CHECK(bundle.problem.cost(0, 1) == Catch::Approx(log_cost(0.7)));

  j["cost"] = {{"kind", "explicit"}, {"matrix", {{0.0, "inf"}, {1.0, 0.0}}}};
  auto bundle2 = io::parse_problem(j);
  CHECK(bundle2.problem.cost(0, 1) == inf);
  CHECK(bundle2.problem.cost(1, 0) == 1.0);

  json bad = j;
  bad["mu1"]["support"] = {7};
  CHECK_THROWS(io::parse_problem(bad));
}

TEST_CASE("canonical dump is idempotent and round-trips numbers") {
  json j = {
      {"space", {{"points", {{0.0}, {1.0 / 3.0}}}}},
      {"mu1", {{"support", {0}}, {"weights", {0.123456789012345678}}}},
      {"mu2", {{"support", {1}}, {"weights", {1e-300}}}},
  };
  std::string once = io::dump_canonical(j);
  std::string twice = io::dump_canonical(json::parse(once));
  CHECK(once == twice);

  Rng rng(3);
  for (int it = 0; it < 200; ++it) {
    double x = std::exp(rng.uniform(-200.0, 200.0)) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    std::string s = io::format_number(x);
    CHECK(std::stod(s) == x);  // 17 significant digits round-trip exactly
  }
}

TEST_CASE("extended reals serialize as tagged strings") {
  CHECK(io::format_number(inf) == "\"inf\"");
  CHECK(io::parse_extended(json("inf"), "x") == inf);
  CHECK(io::parse_extended(json("-inf"), "x") == -inf);
  CHECK(io::parse_extended(json(2.5), "x") == 2.5);
  CHECK_THROWS_AS(io::parse_extended(json("wide"), "x"), io::InputError);

  // solutions with -inf potentials survive the dump
  auto g = GroundSpace::from_points({{0.0}, {2.0}});
  auto prob = make_let_problem(DiscreteMeasure({0}, {1.0}), DiscreteMeasure({1}, {1.0}), g);
  auto sol = solve_et(prob);
  auto dumped = io::dump_canonical(io::solution_json(sol));
  auto parsed = json::parse(dumped);
  CHECK(parsed.contains("potentials"));
  CHECK(parsed.at("gap").get<double>() <= 1e-6 * 3.0);
}

TEST_CASE("solver output is deterministic") {
  auto g = GroundSpace::from_points({{0.0}, {0.4}, {0.9}, {1.3}});
  auto mu1 = DiscreteMeasure({0, 1}, {0.7, 0.4});
  auto mu2 = DiscreteMeasure({2, 3}, {0.5, 0.8});
  auto a = solve_et(make_let_problem(mu1, mu2, g));
  auto b = solve_et(make_let_problem(mu1, mu2, g));
  CHECK(a.primal == b.primal);
  CHECK(a.dual == b.dual);
  CHECK(a.plan.v == b.plan.v);
  CHECK(io::dump_canonical(io::solution_json(a)) == io::dump_canonical(io::solution_json(b)));
}
