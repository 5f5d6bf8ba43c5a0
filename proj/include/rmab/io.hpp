#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "rmab/indexability.hpp"
#include "rmab/simulator.hpp"
#include "rmab/whittle.hpp"

namespace rmab::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

/// CSV headers. Kept fixed so downstream plotting scripts can rely on them.
inline constexpr const char* kReportCsvHeader = "policy,K,M,mean_cost_per_robot,std,timed_out";
inline constexpr const char* kBenchCsvHeader = "policy,K,M,precompute_s,per_decision_s";

// Scenario: {format_version, gamma, operators, seed, robots:[{tasks:[{type,
// p0,q0,p1n0,q1n0,p1n1,q1n1}], costs:[{rho,phi}], teleop_surcharge}]}
json scenario_to_json(const JointScenario& scenario);
/// Throws ConfigError on missing fields or an unknown format version.
JointScenario scenario_from_json(const json& j);

json config_to_json(const GeneratorConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
GeneratorConfig config_from_json(const json& j, GeneratorConfig base = {});

json index_table_to_json(const IndexTable& table);
IndexTable index_table_from_json(const json& j);
/// {format_version, gamma, robots:[table...]}
json index_tables_to_json(const std::vector<IndexTable>& tables, double gamma);
std::vector<IndexTable> index_tables_from_json(const json& j);

json verdict_to_json(const IndexabilityVerdict& verdict);

json report_to_json(const RolloutReport& report, bool include_costs = false);
std::string reports_to_csv(const std::vector<RolloutReport>& reports);
std::string bench_to_csv(const std::vector<BenchmarkRow>& rows);

/// Parses a file; throws ConfigError with the path on I/O or syntax errors.
json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);

/// Writes to a temporary file next to `path`, then renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);
void write_json(const std::string& path, const json& j);

/// "<path>.manifest.json"
std::string manifest_path(const std::string& output_path);

struct RunManifest {
  std::string command;
  json config;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

/// Adds tool version, format version, timestamp and machine details.
json manifest_to_json(const RunManifest& manifest);

}  // namespace rmab::io
