#include "rmab/io.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "rmab/errors.hpp"

namespace rmab::io {

namespace {

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for field '") + key + "'");
  }
}

void check_version(const json& j) {
  const int v = get_field<int>(j, "format_version");
  if (v != kFormatVersion) throw ConfigError("unsupported format_version " + std::to_string(v));
}

// JSON has no NaN; store it as null.
json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string fmt(double x, int digits) {
  if (std::isnan(x)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

}  // namespace

json scenario_to_json(const JointScenario& s) {
  json robots = json::array();
  for (const RobotModel& r : s.robots) {
    json tasks = json::array();
    for (const TaskTransition& t : r.tasks()) {
      tasks.push_back({{"type", to_string(t.type)},
                       {"p0", t.p0},
                       {"q0", t.q0},
                       {"p1n0", t.p1n0},
                       {"q1n0", t.q1n0},
                       {"p1n1", t.p1n1},
                       {"q1n1", t.q1n1}});
    }
    json costs = json::array();
    for (const TaskCost& c : r.costs()) costs.push_back({{"rho", c.rho}, {"phi", c.phi}});
    robots.push_back({{"tasks", tasks}, {"costs", costs}, {"teleop_surcharge", r.teleop_surcharge()}});
  }
  return {{"format_version", kFormatVersion},
          {"gamma", s.gamma},
          {"operators", s.operators},
          {"seed", s.seed},
          {"robots", robots}};
}

JointScenario scenario_from_json(const json& j) {
  check_version(j);
  JointScenario s;
  s.gamma = get_field<double>(j, "gamma");
  s.operators = get_field<int>(j, "operators");
  if (j.contains("seed")) s.seed = get_field<std::uint64_t>(j, "seed");
  const json robots = get_field<json>(j, "robots");
  if (!robots.is_array()) throw ConfigError("'robots' must be an array");
  for (const json& r : robots) {
    std::vector<TaskTransition> tasks;
    for (const json& t : get_field<json>(r, "tasks")) {
      TaskTransition tr;
      tr.type = t.contains("type") ? task_type_from_string(get_field<std::string>(t, "type"))
                                   : TaskType::general;
      tr.p0 = get_field<double>(t, "p0");
      tr.q0 = get_field<double>(t, "q0");
      tr.p1n0 = get_field<double>(t, "p1n0");
      tr.q1n0 = get_field<double>(t, "q1n0");
      tr.p1n1 = get_field<double>(t, "p1n1");
      tr.q1n1 = get_field<double>(t, "q1n1");
      tasks.push_back(tr);
    }
    std::vector<TaskCost> costs;
    for (const json& c : get_field<json>(r, "costs")) {
      costs.push_back({get_field<double>(c, "rho"), get_field<double>(c, "phi")});
    }
    s.robots.emplace_back(std::move(tasks), std::move(costs), get_field<double>(r, "teleop_surcharge"));
  }
  return s;
}

json config_to_json(const GeneratorConfig& c) {
  auto range = [](const ProbabilityRange& r) { return json::array({r.lo, r.hi}); };
  return {{"robots", c.robots},
          {"operators", c.operators},
          {"waypoints", c.waypoints},
          {"zone_mix", c.zone_mix},
          {"sampling", to_string(c.sampling)},
          {"r0", range(c.r0)},
          {"type1_q0", range(c.type1_q0)},
          {"type2_q0_floor", c.type2_q0_floor},
          {"r1n0", range(c.r1n0)},
          {"type2_q1n1", range(c.type2_q1n1)},
          {"rho", c.rho},
          {"phi", c.phi},
          {"teleop_surcharge", c.teleop_surcharge},
          {"gamma", c.gamma},
          {"seed", c.seed},
          {"max_retries", c.max_retries}};
}

GeneratorConfig config_from_json(const json& j, GeneratorConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  auto range = [&](const char* key, ProbabilityRange& r) {
    const auto v = get_field<std::vector<double>>(j, key);
    if (v.size() != 2) throw ConfigError(std::string("'") + key + "' must be [lo, hi]");
    r = {v[0], v[1]};
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "robots") c.robots = get_field<int>(j, "robots");
    else if (key == "operators") c.operators = get_field<int>(j, "operators");
    else if (key == "waypoints") c.waypoints = get_field<int>(j, "waypoints");
    else if (key == "zone_mix") c.zone_mix = get_field<double>(j, "zone_mix");
    else if (key == "sampling") c.sampling = sampling_mode_from_string(get_field<std::string>(j, "sampling"));
    else if (key == "r0") range("r0", c.r0);
    else if (key == "type1_q0") range("type1_q0", c.type1_q0);
    else if (key == "type2_q0_floor") c.type2_q0_floor = get_field<double>(j, "type2_q0_floor");
    else if (key == "r1n0") range("r1n0", c.r1n0);
    else if (key == "type2_q1n1") range("type2_q1n1", c.type2_q1n1);
    else if (key == "rho") c.rho = get_field<double>(j, "rho");
    else if (key == "phi") c.phi = get_field<double>(j, "phi");
    else if (key == "teleop_surcharge") c.teleop_surcharge = get_field<double>(j, "teleop_surcharge");
    else if (key == "gamma") c.gamma = get_field<double>(j, "gamma");
    else if (key == "seed") c.seed = get_field<std::uint64_t>(j, "seed");
    else if (key == "max_retries") c.max_retries = get_field<int>(j, "max_retries");
    else if (key == "format_version") check_version(j);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return c;
}

json index_table_to_json(const IndexTable& t) {
  json rounds = json::array();
  for (const IndexRound& r : t.rounds) rounds.push_back({{"lambda", r.lambda}, {"states", r.states}});
  json j = {{"w_by_state", t.w_by_state}, {"rounds", rounds}, {"monotone", t.monotone}};
  if (!t.warning.empty()) j["warning"] = t.warning;
  return j;
}

IndexTable index_table_from_json(const json& j) {
  IndexTable t;
  t.w_by_state = get_field<std::vector<double>>(j, "w_by_state");
  for (const json& r : get_field<json>(j, "rounds")) {
    t.rounds.push_back({get_field<double>(r, "lambda"), get_field<std::vector<StateIndex>>(r, "states")});
  }
  t.monotone = get_field<bool>(j, "monotone");
  if (j.contains("warning")) t.warning = get_field<std::string>(j, "warning");
  return t;
}

json index_tables_to_json(const std::vector<IndexTable>& tables, double gamma) {
  json robots = json::array();
  for (const IndexTable& t : tables) robots.push_back(index_table_to_json(t));
  return {{"format_version", kFormatVersion}, {"gamma", gamma}, {"robots", robots}};
}

std::vector<IndexTable> index_tables_from_json(const json& j) {
  check_version(j);
  std::vector<IndexTable> out;
  for (const json& r : get_field<json>(j, "robots")) out.push_back(index_table_from_json(r));
  return out;
}

json verdict_to_json(const IndexabilityVerdict& v) {
  json tasks = json::array();
  for (const TaskDiagnostic& d : v.per_task) {
    tasks.push_back({{"task", d.task},
                     {"alpha1", number_or_null(d.alpha1)},
                     {"beta0", number_or_null(d.beta0)},
                     {"condition_pass", d.condition_pass}});
  }
  json violations = json::array();
  for (const PassiveSetViolation& x : v.violations) {
    violations.push_back({{"state", x.state}, {"lambda", x.lambda}, {"next_lambda", x.next_lambda}});
  }
  json j = {{"method", to_string(v.method)}, {"indexable", v.indexable}, {"violations", violations}};
  if (v.method == VerdictMethod::theorem) j["per_task"] = tasks;
  if (!v.lambda_grid.empty()) {
    j["grid"] = {{"points", v.lambda_grid.size()}, {"lo", v.lambda_grid.front()}, {"hi", v.lambda_grid.back()}};
  }
  return j;
}

json report_to_json(const RolloutReport& r, bool include_costs) {
  json j = {{"policy", r.policy},
            {"K", r.robots},
            {"M", r.operators},
            {"iterations", r.iterations},
            {"mean_cost", number_or_null(r.mean_cost)},
            {"std_cost", number_or_null(r.std_cost)},
            {"mean_cost_per_robot", number_or_null(r.mean_cost_per_robot)},
            {"std_cost_per_robot", number_or_null(r.std_cost_per_robot)},
            {"timed_out", r.timed_out},
            {"truncated", r.truncated},
            {"max_tail_bound", r.max_tail_bound}};
  if (!r.error.empty()) j["error"] = r.error;
  if (include_costs) j["costs"] = r.costs;
  return j;
}

std::string reports_to_csv(const std::vector<RolloutReport>& reports) {
  std::ostringstream out;
  out << kReportCsvHeader << '\n';
  for (const RolloutReport& r : reports) {
    out << r.policy << ',' << r.robots << ',' << r.operators << ',' << fmt(r.mean_cost_per_robot, 12)
        << ',' << fmt(r.std_cost_per_robot, 12) << ',' << (r.timed_out ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string bench_to_csv(const std::vector<BenchmarkRow>& rows) {
  std::ostringstream out;
  out << kBenchCsvHeader << '\n';
  for (const BenchmarkRow& r : rows) {
    out << r.policy << ',' << r.robots << ',' << r.operators << ',' << fmt(r.precompute_seconds, 6)
        << ',' << fmt(r.per_decision_seconds, 6) << '\n';
  }
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ConfigError("cannot rename onto '" + path + "'");
  }
}

void write_json(const std::string& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

std::string manifest_path(const std::string& output_path) { return output_path + ".manifest.json"; }

json manifest_to_json(const RunManifest& m) {
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  char host[256] = "unknown";
  ::gethostname(host, sizeof host - 1);
  return {{"format_version", kFormatVersion},
          {"tool_version", kToolVersion},
          {"command", m.command},
          {"config", m.config},
          {"seed", m.seed},
          {"inputs", m.inputs},
          {"outputs", m.outputs},
          {"timestamp", stamp},
          {"machine", {{"host", host}, {"hardware_threads", std::thread::hardware_concurrency()}}}};
}

}  // namespace rmab::io
