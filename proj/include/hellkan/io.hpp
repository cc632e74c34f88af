#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hellkan/entropy.hpp"
#include "hellkan/geometry.hpp"
#include "hellkan/hk.hpp"
#include "hellkan/measure.hpp"
#include "hellkan/solver.hpp"

namespace hellkan::io {

using json = nlohmann::json;

class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// ---- canonical serialization: sorted keys, 17 significant digits ----------

inline std::string format_number(double v) {
  if (v == inf) return "\"inf\"";
  if (v == -inf) return "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void dump_canonical(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map keeps keys sorted
        if (!first) out += ',';
        first = false;
        out += '"';
        out += it.key();
        out += "\":";
        dump_canonical(it.value(), out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) out += ',';
        dump_canonical(j[k], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float:
      out += format_number(j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

inline std::string dump_canonical(const json& j) {
  std::string out;
  dump_canonical(j, out);
  out += '\n';
  return out;
}

inline double parse_extended(const json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "inf" || s == "Infinity") return inf;
    if (s == "-inf" || s == "-Infinity") return -inf;
  }
  throw InputError(std::string("expected a number (or \"inf\") for ") + what);
}

inline json extended_json(double v) {
  if (v == inf) return json("inf");
  if (v == -inf) return json("-inf");
  return json(v);
}

// ---- domain types ----------------------------------------------------------

inline GroundSpace parse_space(const json& j) {
  if (j.contains("points")) {
    std::vector<std::vector<double>> pts;
    for (const auto& row : j.at("points")) pts.push_back(row.get<std::vector<double>>());
    if (pts.empty()) throw InputError("space.points must be nonempty");
    return GroundSpace::from_points(std::move(pts));
  }
  if (j.contains("dist")) {
    std::vector<std::vector<double>> d;
    for (const auto& row : j.at("dist")) d.push_back(row.get<std::vector<double>>());
    return GroundSpace::from_distance(std::move(d));
  }
  throw InputError("space needs either \"points\" or \"dist\"");
}

inline json space_json(const GroundSpace& g) {
  json j;
  if (g.euclidean()) {
    json pts = json::array();
    for (int i = 0; i < g.size(); ++i) pts.push_back(g.point(i));
    j["points"] = pts;
  } else {
    json d = json::array();
    for (int i = 0; i < g.size(); ++i) {
      json row = json::array();
      for (int k = 0; k < g.size(); ++k) row.push_back(g.dist(i, k));
      d.push_back(row);
    }
    j["dist"] = d;
  }
  return j;
}

inline EntropyFunction parse_entropy(const json& j) {
  std::string fam = j.at("family").get<std::string>();
  if (fam == "power") return EntropyFunction::power(j.at("p").get<double>());
  if (fam == "tv") return EntropyFunction::total_variation();
  if (fam == "indicator") return EntropyFunction::indicator();
  if (fam == "interval")
    return EntropyFunction::interval(j.at("a").get<double>(),
                                     parse_extended(j.at("b"), "interval entropy bound b"));
  throw InputError("unknown entropy family: " + fam);
}

inline json entropy_json(const EntropyFunction& e) {
  json j;
  switch (e.family()) {
    case EntropyFamily::Power:
      j["family"] = "power";
      j["p"] = e.power_exponent();
      break;
    case EntropyFamily::TotalVariation:
      j["family"] = "tv";
      break;
    case EntropyFamily::Indicator:
      j["family"] = "indicator";
      break;
    case EntropyFamily::Interval:
      j["family"] = "interval";
      j["a"] = e.interval_lo();
      j["b"] = extended_json(e.interval_hi());
      break;
  }
  return j;
}

inline DiscreteMeasure parse_measure(const json& j) {
  return DiscreteMeasure(j.at("support").get<std::vector<int>>(),
                         j.at("weights").get<std::vector<double>>());
}

inline json measure_json(const DiscreteMeasure& mu) {
  return json{{"support", mu.support}, {"weights", mu.weights}};
}

inline CostMatrix parse_cost(const json& j, const GroundSpace& space) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "log") return CostMatrix::log_cost_on(space);
  if (kind == "sqdist") {
    double trunc = j.contains("truncation") ? parse_extended(j.at("truncation"), "truncation") : inf;
    return CostMatrix::squared_distance_on(space, trunc);
  }
  if (kind == "explicit") {
    std::vector<std::vector<double>> rows;
    for (const auto& r : j.at("matrix")) {
      std::vector<double> row;
      for (const auto& x : r) row.push_back(parse_extended(x, "cost entry"));
      rows.push_back(std::move(row));
    }
    return CostMatrix::explicit_matrix(std::move(rows));
  }
  throw InputError("unknown cost kind: " + kind);
}

inline SolveOptions parse_opts(const json& j) {
  SolveOptions o;
  if (j.contains("gap_tol")) o.gap_tol = j.at("gap_tol").get<double>();
  if (j.contains("max_iters")) o.max_iters = j.at("max_iters").get<int>();
  if (j.contains("epsilon_schedule"))
    o.epsilon_schedule = j.at("epsilon_schedule").get<std::vector<double>>();
  if (j.contains("seed")) {
    o.init_seed = j.at("seed").get<std::uint64_t>();
    o.random_init = true;
  }
  return o;
}

struct ProblemBundle {
  GroundSpace space;
  ETProblem problem;
  SolveOptions opts;
};

inline ProblemBundle parse_problem(const json& j) {
  GroundSpace space = parse_space(j.at("space"));
  EntropyFunction e1 =
      j.contains("entropy1") ? parse_entropy(j.at("entropy1")) : EntropyFunction::log();
  EntropyFunction e2 =
      j.contains("entropy2") ? parse_entropy(j.at("entropy2")) : EntropyFunction::log();
  CostMatrix cost = j.contains("cost") ? parse_cost(j.at("cost"), space)
                                       : CostMatrix::log_cost_on(space);
  DiscreteMeasure mu1 = parse_measure(j.at("mu1"));
  DiscreteMeasure mu2 = parse_measure(j.at("mu2"));
  mu1.dense(cost.n);  // validates index ranges
  mu2.dense(cost.m);
  SolveOptions opts = j.contains("opts") ? parse_opts(j.at("opts")) : SolveOptions{};
  return {std::move(space), ETProblem{e1, e2, std::move(cost), std::move(mu1), std::move(mu2)},
          opts};
}

inline json solution_json(const ETSolution& sol) {
  json j;
  json plan = json::array();
  for (const auto& t : sol.plan.triplets(0.0)) plan.push_back(json::array({t.i, t.j, t.mass}));
  j["plan"] = plan;
  json psi1 = json::array(), psi2 = json::array();
  for (double x : sol.potentials.psi1) psi1.push_back(extended_json(x));
  for (double x : sol.potentials.psi2) psi2.push_back(extended_json(x));
  j["potentials"] = json{{"psi1", psi1}, {"psi2", psi2}};
  j["primal"] = extended_json(sol.primal);
  j["dual"] = extended_json(sol.dual);
  j["gap"] = extended_json(sol.gap);
  j["status"] = sol.status == SolveStatus::Converged ? "converged" : "max_iterations";
  j["sweeps"] = sol.sweeps;
  return j;
}

inline std::string plan_csv(const ETSolution& sol) {
  std::string out = "i,j,mass\n";
  char buf[96];
  for (const auto& t : sol.plan.triplets(0.0)) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", t.i, t.j, t.mass);
    out += buf;
  }
  return out;
}

inline std::string potentials_csv(const ETSolution& sol) {
  std::string out = "side,index,psi\n";
  char buf[96];
  for (std::size_t i = 0; i < sol.potentials.psi1.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "1,%zu,%.17g\n", i, sol.potentials.psi1[i]);
    out += buf;
  }
  for (std::size_t j = 0; j < sol.potentials.psi2.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "2,%zu,%.17g\n", j, sol.potentials.psi2[j]);
    out += buf;
  }
  return out;
}

inline json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON in ") + path + ": " + e.what());
  }
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open output file: " + path);
  out << content;
}

}  // namespace hellkan::io
