// rmab: generate scenarios, check indexability, compute index tables,
// simulate allocation policies and time them.

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rmab/errors.hpp"
#include "rmab/indexability.hpp"
#include "rmab/io.hpp"
#include "rmab/policies.hpp"
#include "rmab/simulator.hpp"
#include "rmab/whittle.hpp"

using namespace rmab;
using io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNonIndexable = 3;
constexpr int kExitOracle = 4;

struct GenerateArgs {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma;
  std::optional<int> robots, operators, waypoints;
  std::optional<double> zone_mix;
  std::optional<std::string> sampling;
};

struct CheckArgs {
  std::string scenario;
  std::string out;
  std::string method = "both";
  std::optional<double> gamma;
};

struct SolveArgs {
  std::string scenario;
  std::string out;
  bool force = false;
  bool oracle = false;
  std::optional<double> gamma;
};

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::string policies = "whittle,benefit,myopic1,reactive";
  std::string tables;
  int iterations = 500;
  double timeout = 10.0;
  std::optional<std::uint64_t> seed;
  std::uint64_t instance = 0;
  bool independent = false;
};

struct BenchArgs {
  std::string scenario;
  std::string out;
  std::string policies = "whittle,benefit,myopic1,myopic2,reactive";
  int calls = 1000;
  int warmup = 100;
  int repeats = 5;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

JointScenario load_checked(const std::string& path, std::optional<double> gamma = std::nullopt) {
  JointScenario s = io::scenario_from_json(io::read_json_file(path));
  if (gamma) s.gamma = *gamma;
  const auto v = validate(s);
  if (!v.empty()) {
    std::string msg = "invalid scenario: " + v.front().message;
    if (v.size() > 1) msg += " (and " + std::to_string(v.size() - 1) + " more)";
    throw InvalidStateError(msg);
  }
  return s;
}

void emit(const std::string& out, const json& j) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    io::write_json(out, j);
  }
}

void write_manifest(const std::string& out, const io::RunManifest& m) {
  if (!out.empty()) io::write_json(io::manifest_path(out), io::manifest_to_json(m));
}

std::string manifest_ref(const std::string& out) {
  return std::filesystem::path(io::manifest_path(out)).filename().string();
}

int run_generate(const GenerateArgs& a) {
  GeneratorConfig c;
  if (!a.config_path.empty()) c = io::config_from_json(io::read_json_file(a.config_path));
  if (a.seed) c.seed = *a.seed;
  if (a.gamma) c.gamma = *a.gamma;
  if (a.robots) c.robots = *a.robots;
  if (a.operators) c.operators = *a.operators;
  if (a.waypoints) c.waypoints = *a.waypoints;
  if (a.zone_mix) c.zone_mix = *a.zone_mix;
  if (a.sampling) c.sampling = sampling_mode_from_string(*a.sampling);

  const JointScenario s = generate_scenario(c);
  json j = io::scenario_to_json(s);
  if (!a.out.empty()) j["manifest"] = manifest_ref(a.out);
  emit(a.out, j);
  io::RunManifest m{"generate", io::config_to_json(c), c.seed, {}, {a.out}};
  if (!a.config_path.empty()) m.inputs.push_back(a.config_path);
  write_manifest(a.out, m);
  return kExitOk;
}

int run_check(const CheckArgs& a) {
  if (a.method != "theorem" && a.method != "numeric" && a.method != "both") {
    throw ConfigError("--method must be theorem, numeric or both");
  }
  const JointScenario s = load_checked(a.scenario, a.gamma);
  const bool want_theorem = a.method != "numeric";
  const bool want_numeric = a.method != "theorem";

  bool all_indexable = true;
  int defects = 0;
  json robots = json::array();
  for (int k = 0; k < s.num_robots(); ++k) {
    json r = {{"robot", k}};
    std::optional<bool> th, nu;
    if (want_theorem) {
      const auto v = theorem_check(s.robots[k], s.gamma);
      th = v.indexable;
      r["theorem"] = io::verdict_to_json(v);
    }
    if (want_numeric) {
      const auto v = numeric_verify(s.robots[k], s.gamma);
      nu = v.indexable;
      r["numeric"] = io::verdict_to_json(v);
    }
    // The theorem is only sufficient; numeric decides when both ran.
    const bool indexable = nu ? *nu : *th;
    if (th && nu && *th && !*nu) {
      ++defects;
      r["disagreement"] = "theorem passes but numeric check finds a violation";
    } else if (th && nu && !*th && *nu) {
      r["disagreement"] = "theorem inconclusive, numerically indexable";
    }
    r["indexable"] = indexable;
    all_indexable = all_indexable && indexable;
    robots.push_back(std::move(r));
  }
  json j = {{"format_version", io::kFormatVersion},
            {"method", a.method},
            {"gamma", s.gamma},
            {"indexable", all_indexable},
            {"defects", defects},
            {"robots", robots}};
  if (!a.out.empty()) j["manifest"] = manifest_ref(a.out);
  emit(a.out, j);
  write_manifest(a.out, {"check", {{"method", a.method}, {"gamma", s.gamma}}, s.seed, {a.scenario}, {a.out}});
  if (defects > 0) std::cerr << "rmab: " << defects << " robot(s) where the theorem and numeric check conflict\n";
  return all_indexable ? kExitOk : kExitNonIndexable;
}

int run_solve(const SolveArgs& a) {
  const JointScenario s = load_checked(a.scenario, a.gamma);
  std::vector<int> non_indexable;
  for (int k = 0; k < s.num_robots(); ++k) {
    if (theorem_check(s.robots[k], s.gamma).indexable) continue;
    if (!numeric_verify(s.robots[k], s.gamma).indexable) non_indexable.push_back(k);
  }
  if (!non_indexable.empty()) {
    if (!a.force) {
      std::cerr << "rmab: robot " << non_indexable.front()
                << " is not indexable; rerun with --force to compute indices anyway\n";
      return kExitNonIndexable;
    }
    std::cerr << "rmab: warning: " << non_indexable.size()
              << " robot(s) not indexable; indices are not meaningful for them\n";
  }

  const std::vector<IndexTable> tables = compute_index_tables(s);
  json j = io::index_tables_to_json(tables, s.gamma);

  int exit_code = kExitOk;
  if (a.oracle) {
    double worst = 0.0;
    for (int k = 0; k < s.num_robots(); ++k) {
      for (StateIndex x = 0; x < s.robots[k].num_states(); ++x) {
        try {
          const double w = whittle_index_bisection(s.robots[k], s.gamma, x);
          worst = std::max(worst, std::abs(w - tables[k].w_by_state[x]));
        } catch (const NonIndexableError&) {
          // No crossing inside the bracket: the greedy value has no counterpart.
          worst = std::numeric_limits<double>::infinity();
        }
      }
    }
    j["oracle"] = {{"method", "bisection"}, {"tolerance", 1e-6}};
    j["oracle"]["max_abs_diff"] = std::isfinite(worst) ? json(worst) : json(nullptr);
    if (worst > 1e-6) {
      std::cerr << "rmab: bisection disagrees with adaptive greedy by " << worst << '\n';
      exit_code = kExitOracle;
    }
  }
  if (!a.out.empty()) j["manifest"] = manifest_ref(a.out);
  emit(a.out, j);
  write_manifest(a.out, {"solve", {{"force", a.force}, {"oracle", a.oracle}, {"gamma", s.gamma}}, s.seed,
                         {a.scenario}, {a.out}});
  return exit_code;
}

std::string sibling_json(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

int run_simulate(const SimulateArgs& a) {
  JointScenario s = load_checked(a.scenario);
  if (a.seed) s.seed = *a.seed;
  const std::vector<std::string> names = split_list(a.policies);
  if (names.empty()) throw ConfigError("--policies is empty");
  for (const std::string& n : names) {
    const auto& known = policy_names();
    if (std::find(known.begin(), known.end(), n) == known.end()) throw ConfigError("unknown policy '" + n + "'");
  }

  EvaluateOptions opts;
  opts.iterations = a.iterations;
  opts.timeout_seconds = a.timeout;
  opts.common_random_numbers = !a.independent;
  opts.instance = a.instance;

  std::vector<RolloutReport> reports;
  for (const std::string& name : names) {
    std::unique_ptr<AllocationPolicy> policy;
    try {
      if (name == "whittle" && !a.tables.empty()) {
        auto tables = io::index_tables_from_json(io::read_json_file(a.tables));
        if (static_cast<int>(tables.size()) != s.num_robots()) throw ConfigError("index tables do not match the scenario");
        policy = std::make_unique<WhittlePolicy>(std::move(tables), s.operators);
      } else {
        policy = make_policy(name, s);
      }
    } catch (const CapExceededError& e) {
      RolloutReport r;
      r.policy = name;
      r.robots = s.num_robots();
      r.operators = s.operators;
      r.iterations = 0;
      r.mean_cost = r.std_cost = r.mean_cost_per_robot = r.std_cost_per_robot = std::nan("");
      r.error = e.what();
      std::cerr << "rmab: " << name << ": " << e.what() << '\n';
      reports.push_back(std::move(r));
      continue;
    }
    auto rows = evaluate(s, {policy.get()}, opts);
    // Per-policy evaluation keeps stream indices aligned with the policy's
    // position in the request, not with which policies failed.
    reports.push_back(std::move(rows.front()));
  }

  json jr = json::array();
  for (const RolloutReport& r : reports) jr.push_back(io::report_to_json(r));
  json j = {{"format_version", io::kFormatVersion},
            {"scenario", a.scenario},
            {"seed", s.seed},
            {"iterations", a.iterations},
            {"common_random_numbers", !a.independent},
            {"reports", jr}};
  const std::string csv = io::reports_to_csv(reports);
  if (a.out.empty()) {
    std::cout << csv;
    return kExitOk;
  }
  const std::string json_path = sibling_json(a.out);
  j["manifest"] = manifest_ref(a.out);
  io::write_atomic(a.out, csv);
  io::write_json(json_path, j);
  write_manifest(a.out, {"simulate",
                         {{"policies", a.policies},
                          {"iterations", a.iterations},
                          {"timeout", a.timeout},
                          {"instance", a.instance},
                          {"common_random_numbers", !a.independent},
                          {"tables", a.tables}},
                         s.seed,
                         {a.scenario},
                         {a.out, json_path}});
  return kExitOk;
}

int run_bench(const BenchArgs& a) {
  const JointScenario s = load_checked(a.scenario);
  BenchmarkOptions opts;
  opts.calls = a.calls;
  opts.warmup = a.warmup;
  opts.repeats = a.repeats;
  const auto rows = benchmark_decision_time(s, split_list(a.policies), opts);
  for (const BenchmarkRow& r : rows) {
    if (!r.error.empty()) std::cerr << "rmab: " << r.policy << ": " << r.error << '\n';
  }
  const std::string csv = io::bench_to_csv(rows);
  if (a.out.empty()) {
    std::cout << csv;
    return kExitOk;
  }
  io::write_atomic(a.out, csv);
  write_manifest(a.out, {"bench",
                         {{"policies", a.policies}, {"calls", a.calls}, {"warmup", a.warmup}, {"repeats", a.repeats}},
                         s.seed,
                         {a.scenario},
                         {a.out}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator allocation for robot fleets via Whittle indices"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Sample a random scenario");
  gen->add_option("--config", ga.config_path, "Generator config JSON");
  gen->add_option("--out", ga.out, "Scenario JSON path (stdout if omitted)");
  gen->add_option("--seed", ga.seed);
  gen->add_option("--gamma", ga.gamma);
  gen->add_option("--robots", ga.robots);
  gen->add_option("--operators", ga.operators);
  gen->add_option("--waypoints", ga.waypoints);
  gen->add_option("--zone-mix", ga.zone_mix, "Fraction of Type-1 tasks");
  gen->add_option("--sampling", ga.sampling, "bounded, unbounded or unconstrained");

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "Indexability verdict per robot");
  check->add_option("scenario", ca.scenario)->required();
  check->add_option("--method", ca.method, "theorem, numeric or both");
  check->add_option("--gamma", ca.gamma, "Override the scenario discount");
  check->add_option("--out", ca.out);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Compute Whittle index tables");
  solve->add_option("scenario", sa.scenario)->required();
  solve->add_option("--out", sa.out);
  solve->add_option("--gamma", sa.gamma, "Override the scenario discount");
  solve->add_flag("--force", sa.force, "Compute even if a robot is not indexable");
  solve->add_flag("--oracle", sa.oracle, "Cross-check every index by bisection");

  SimulateArgs ma;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo policy comparison");
  sim->add_option("scenario", ma.scenario)->required();
  sim->add_option("--out", ma.out, "CSV path; full JSON goes next to it");
  sim->add_option("--policies", ma.policies, "Comma-separated policy names");
  sim->add_option("--tables", ma.tables, "Precomputed index tables for the whittle policy");
  sim->add_option("--iterations", ma.iterations)->check(CLI::PositiveNumber);
  sim->add_option("--timeout", ma.timeout, "Seconds per policy before giving up");
  sim->add_option("--seed", ma.seed, "Override the scenario seed");
  sim->add_option("--instance", ma.instance);
  sim->add_flag("--independent", ma.independent, "Independent noise per policy instead of common random numbers");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Single-threaded decision timing");
  bench->add_option("scenario", ba.scenario)->required();
  bench->add_option("--out", ba.out);
  bench->add_option("--policies", ba.policies);
  bench->add_option("--calls", ba.calls)->check(CLI::PositiveNumber);
  bench->add_option("--warmup", ba.warmup)->check(CLI::NonNegativeNumber);
  bench->add_option("--repeats", ba.repeats)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*gen) return run_generate(ga);
    if (*check) return run_check(ca);
    if (*solve) return run_solve(sa);
    if (*sim) return run_simulate(ma);
    if (*bench) return run_bench(ba);
  } catch (const CapExceededError& e) {
    std::cerr << "rmab: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "rmab: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
