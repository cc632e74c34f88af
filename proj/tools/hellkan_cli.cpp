// hellkan - certified solver for discrete optimal entropy-transport problems
// and the Hellinger-Kantorovich distance.
//
// Subcommands: distance, plan, geodesic, limits, perspective, hopflax,
// selftest.  Exit codes: 0 success, 1 numerical non-convergence, 2 input
// error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hellkan/hk.hpp"
#include "hellkan/hopflax.hpp"
#include "hellkan/io.hpp"
#include "hellkan/selftest.hpp"
#include "hellkan/solver.hpp"

namespace {

using hellkan::io::json;

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty())
    std::fputs(content.c_str(), stdout);
  else
    hellkan::io::write_file(path, content);
}

struct DistanceArgs {
  std::string metric = "hk";
  std::string input;
  std::string out;
  std::string format = "json";
  double tol = 1e-6;
  std::string eps_schedule;
};

int run_distance(const DistanceArgs& args) {
  auto j = hellkan::io::parse_file(args.input);
  auto space = hellkan::io::parse_space(j.at("space"));
  auto mu1 = hellkan::io::parse_measure(j.at("mu1"));
  auto mu2 = hellkan::io::parse_measure(j.at("mu2"));
  mu1.dense(space.size());
  mu2.dense(space.size());
  hellkan::SolveOptions opts;
  if (j.contains("opts")) opts = hellkan::io::parse_opts(j.at("opts"));
  opts.gap_tol = args.tol;
  if (!args.eps_schedule.empty()) opts.epsilon_schedule = parse_list(args.eps_schedule);

  hellkan::DistanceCertificate cert;
  if (args.metric == "hk")
    cert = hellkan::hk_distance(mu1, mu2, space, opts);
  else if (args.metric == "ghk")
    cert = hellkan::ghk_distance(mu1, mu2, space, opts);
  else if (args.metric == "hell")
    cert = {hellkan::hellinger(mu1, mu2, space.size()), 0.0};
  else if (args.metric == "w2")
    cert = hellkan::wasserstein(mu1, mu2, space, 2.0, hellkan::inf, opts);
  else if (args.metric == "bl") {
    auto bl = hellkan::bl_distance(mu1, mu2, space);
    cert = {bl.value, bl.slackness_residual};
  } else {
    throw hellkan::io::InputError("unknown metric: " + args.metric);
  }

  std::printf("%.6f +- %.3e\n", cert.value, cert.gap);
  if (!args.out.empty()) {
    if (args.format == "csv") {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "metric,value,gap\n%s,%.17g,%.17g\n", args.metric.c_str(),
                    cert.value, cert.gap);
      emit(args.out, buf);
    } else {
      json out;
      out["metric"] = args.metric;
      out["value"] = hellkan::io::extended_json(cert.value);
      out["gap"] = cert.gap;
      emit(args.out, hellkan::io::dump_canonical(out));
    }
  }
  return 0;
}

int run_plan(const std::string& input, const std::string& out, const std::string& format) {
  auto bundle = hellkan::io::parse_problem(hellkan::io::parse_file(input));
  auto sol = hellkan::solve_et(bundle.problem, bundle.opts);
  if (format == "csv") {
    emit(out, hellkan::io::plan_csv(sol) + hellkan::io::potentials_csv(sol));
  } else {
    emit(out, hellkan::io::dump_canonical(hellkan::io::solution_json(sol)));
  }
  return sol.status == hellkan::SolveStatus::Converged ? 0 : 1;
}

int run_geodesic(const std::string& input, const std::string& times_csv, const std::string& out) {
  auto j = hellkan::io::parse_file(input);
  auto space = hellkan::io::parse_space(j.at("space"));
  if (!space.euclidean())
    throw hellkan::io::InputError("geodesic interpolation needs a Euclidean space");
  auto mu1 = hellkan::io::parse_measure(j.at("mu1"));
  auto mu2 = hellkan::io::parse_measure(j.at("mu2"));
  auto prob = hellkan::make_let_problem(mu1, mu2, space);
  auto sol = hellkan::solve_et(prob);
  if (sol.status != hellkan::SolveStatus::Converged) return 1;
  auto lifted = hellkan::lift_plan(sol, prob);
  auto times = parse_list(times_csv);
  if (times.empty()) throw hellkan::io::InputError("geodesic: provide at least one time via --t");

  std::string csv = "t";
  for (int d = 0; d < space.dimension(); ++d) csv += ",x" + std::to_string(d);
  csv += ",mass\n";
  char buf[64];
  for (double t : times) {
    auto cloud = hellkan::geodesic_interp(lifted, t, space);
    for (std::size_t k = 0; k < cloud.points.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", t);
      csv += buf;
      for (double c : cloud.points[k]) {
        std::snprintf(buf, sizeof(buf), ",%.17g", c);
        csv += buf;
      }
      std::snprintf(buf, sizeof(buf), ",%.17g\n", cloud.weights[k]);
      csv += buf;
    }
  }
  emit(out, csv);
  return 0;
}

int run_limits(const std::string& input, const std::string& factors_csv, const std::string& out) {
  auto j = hellkan::io::parse_file(input);
  auto space = hellkan::io::parse_space(j.at("space"));
  auto mu1 = hellkan::io::parse_measure(j.at("mu1"));
  auto mu2 = hellkan::io::parse_measure(j.at("mu2"));
  auto factors = parse_list(factors_csv);
  if (factors.empty()) factors = {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
  auto table = hellkan::scaling_limits(mu1, mu2, space, factors);
  std::string csv = "lambda,hk_scaled_up,hk_scaled_down,gap_up,gap_down\n";
  char buf[200];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.lambda, r.hk_up,
                  r.hk_down, r.gap_up, r.gap_down);
    csv += buf;
  }
  emit(out, csv);
  return 0;
}

int run_perspective(const std::string& family, double p, double r1, double r2, double c) {
  using hellkan::PerspectiveFamily;
  hellkan::EntropyFunction e1 = hellkan::EntropyFunction::log();
  hellkan::EntropyFunction e2 = e1;
  bool has_closed = true;
  PerspectiveFamily fam = PerspectiveFamily::Log;
  if (family == "log") {
    fam = PerspectiveFamily::Log;
  } else if (family == "rlog") {
    fam = PerspectiveFamily::ReverseLog;
    e1 = e2 = hellkan::EntropyFunction::power(0.0);
  } else if (family == "quadratic") {
    fam = PerspectiveFamily::Quadratic;
    e1 = e2 = hellkan::EntropyFunction::power(2.0);
  } else if (family == "invpower") {
    fam = PerspectiveFamily::InversePower;
    e1 = e2 = hellkan::EntropyFunction::power(-1.0);
  } else if (family == "tv") {
    fam = PerspectiveFamily::TV;
    e1 = e2 = hellkan::EntropyFunction::total_variation();
  } else if (family == "power") {
    fam = PerspectiveFamily::Power;
    e1 = e2 = hellkan::EntropyFunction::power(p);
    has_closed = p != 0.0 && p != 1.0;
  } else {
    throw hellkan::io::InputError("unknown perspective family: " + family);
  }
  auto numeric = hellkan::perspective_numeric(e1, e2, r1, r2, c);
  std::printf("numeric value  %.12g\n", numeric.value);
  if (numeric.argmin_theta)
    std::printf("argmin theta   %.12g\n", *numeric.argmin_theta);
  else
    std::printf("argmin theta   boundary (theta -> 0)\n");
  if (has_closed) {
    auto closed = hellkan::perspective_closed(fam, r1, r2, c, p);
    std::printf("closed form    %.12g\n", closed.value);
  }
  return 0;
}

int run_hopflax(const std::string& space_path, const std::string& xi_path,
                const std::string& times_csv, const std::string& out) {
  auto space = hellkan::io::parse_space(hellkan::io::parse_file(space_path));
  std::ifstream in(xi_path);
  if (!in) throw hellkan::io::InputError("cannot open xi0 file: " + xi_path);
  std::vector<double> xi;
  std::string linebuf;
  while (std::getline(in, linebuf)) {
    if (linebuf.empty()) continue;
    try {
      xi.push_back(std::stod(linebuf));
    } catch (const std::exception&) {
      continue;  // header line
    }
  }
  if (static_cast<int>(xi.size()) != space.size())
    throw hellkan::io::InputError("xi0 length does not match the space size");
  auto times = parse_list(times_csv);
  if (times.empty()) throw hellkan::io::InputError("hopflax: provide times via --times");

  std::string csv = "t,index,value\n";
  char buf[96];
  for (double t : times) {
    auto vals = hellkan::hopflax_apply(xi, t, space);
    for (std::size_t k = 0; k < vals.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g,%zu,%.17g\n", t, k, vals[k]);
      csv += buf;
    }
  }
  emit(out, csv);
  return 0;
}

int run_selftest(std::uint64_t seed, bool quick, const std::string& out) {
  auto results = hellkan::run_acceptance(seed, quick);
  int failures = hellkan::print_acceptance(results);
  if (!out.empty()) {
    std::string csv = "id,name,pass,detail\n";
    for (const auto& r : results) {
      csv += std::to_string(r.id) + ",\"" + r.name + "\"," + (r.pass ? "1" : "0") + ",\"" +
             r.detail + "\"\n";
    }
    hellkan::io::write_file(out, csv);
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hellkan: optimal entropy-transport and Hellinger-Kantorovich distances"};
  app.require_subcommand(1);

  DistanceArgs dargs;
  auto* dist = app.add_subcommand("distance", "distance between two measures");
  dist->add_option("--metric", dargs.metric, "hk | ghk | hell | w2 | bl");
  dist->add_option("input", dargs.input, "problem JSON: {space, mu1, mu2}")->required();
  dist->add_option("--out", dargs.out, "output file");
  dist->add_option("--format", dargs.format, "json | csv");
  dist->add_option("--tol", dargs.tol, "duality gap tolerance");
  dist->add_option("--eps-schedule", dargs.eps_schedule, "comma-separated epsilon annealing");

  std::string plan_input, plan_out, plan_format = "json";
  auto* plan = app.add_subcommand("plan", "solve a full entropy-transport problem");
  plan->add_option("input", plan_input)->required();
  plan->add_option("--out", plan_out);
  plan->add_option("--format", plan_format, "json | csv");

  std::string geo_input, geo_times = "0,0.25,0.5,0.75,1", geo_out;
  auto* geo = app.add_subcommand("geodesic", "HK geodesic interpolation frames");
  geo->add_option("input", geo_input)->required();
  geo->add_option("--t", geo_times, "comma-separated times in [0,1]");
  geo->add_option("--out", geo_out);

  std::string lim_input, lim_factors, lim_out;
  auto* lim = app.add_subcommand("limits", "scaling limits toward Hellinger and Wasserstein");
  lim->add_option("input", lim_input)->required();
  lim->add_option("--factors", lim_factors, "comma-separated scale factors");
  lim->add_option("--out", lim_out);

  std::string per_family = "log";
  double per_p = 2.0, per_r1 = 1.0, per_r2 = 1.0, per_c = 1.0;
  auto* per = app.add_subcommand("perspective", "marginal perspective function H_c(r1,r2)");
  per->add_option("--family", per_family, "log | rlog | power | quadratic | invpower | tv");
  per->add_option("--p", per_p, "exponent for --family power");
  per->add_option("--r1", per_r1)->required();
  per->add_option("--r2", per_r2)->required();
  per->add_option("--c", per_c, "cost parameter (inf allowed via large value)");

  std::string hl_space, hl_xi, hl_times = "1", hl_out;
  auto* hl = app.add_subcommand("hopflax", "generalized Hopf-Lax semigroup");
  hl->add_option("--space", hl_space)->required();
  hl->add_option("--xi0", hl_xi, "CSV file with one value per point")->required();
  hl->add_option("--times", hl_times, "comma-separated times in (0,1]");
  hl->add_option("--out", hl_out);

  std::uint64_t st_seed = 20240817ull;
  bool st_quick = false;
  std::string st_out;
  auto* st = app.add_subcommand("selftest", "run the full acceptance suite");
  st->add_option("--seed", st_seed, "seed for the randomized suites");
  st->add_flag("--quick", st_quick, "smaller instance counts");
  st->add_option("--out", st_out, "write the report as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dist->parsed()) return run_distance(dargs);
    if (plan->parsed()) return run_plan(plan_input, plan_out, plan_format);
    if (geo->parsed()) return run_geodesic(geo_input, geo_times, geo_out);
    if (lim->parsed()) return run_limits(lim_input, lim_factors, lim_out);
    if (per->parsed()) return run_perspective(per_family, per_p, per_r1, per_r2, per_c);
    if (hl->parsed()) return run_hopflax(hl_space, hl_xi, hl_times, hl_out);
    if (st->parsed()) return run_selftest(st_seed, st_quick, st_out);
  } catch (const hellkan::io::InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const hellkan::InfeasibleError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
