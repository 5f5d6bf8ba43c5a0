#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "rmab/errors.hpp"
#include "rmab/io.hpp"
#include "rmab/policies.hpp"

using namespace rmab;
namespace fs = std::filesystem;

TEST_CASE("scenario JSON round-trips exactly") {
  GeneratorConfig c;
  c.robots = 3;
  c.operators = 2;
  const JointScenario s = generate_scenario(c);
  const io::json j = io::scenario_to_json(s);
  CHECK(j["format_version"] == io::kFormatVersion);
  const JointScenario back = io::scenario_from_json(io::json::parse(j.dump()));
  CHECK(back.gamma == s.gamma);
  CHECK(back.operators == s.operators);
  CHECK(back.seed == s.seed);
  REQUIRE(back.robots.size() == s.robots.size());
  for (std::size_t k = 0; k < s.robots.size(); ++k) {
    for (int n = 0; n < s.robots[k].num_tasks(); ++n) {
      const auto& a = s.robots[k].tasks()[n];
      const auto& b = back.robots[k].tasks()[n];
      CHECK(a.p0 == b.p0);
      CHECK(a.q0 == b.q0);
      CHECK(a.p1n0 == b.p1n0);
      CHECK(a.q1n0 == b.q1n0);
      CHECK(a.p1n1 == b.p1n1);
      CHECK(a.q1n1 == b.q1n1);
      CHECK(a.type == b.type);
      CHECK(s.robots[k].costs()[n].phi == back.robots[k].costs()[n].phi);
    }
    CHECK(s.robots[k].teleop_surcharge() == back.robots[k].teleop_surcharge());
  }
  CHECK(io::scenario_to_json(back).dump() == j.dump());
}

TEST_CASE("scenario parsing errors") {
  CHECK_THROWS_AS(io::scenario_from_json(io::json::object()), ConfigError);
  io::json j = io::scenario_to_json(generate_scenario(GeneratorConfig{}));
  j["format_version"] = 99;
  CHECK_THROWS_AS(io::scenario_from_json(j), ConfigError);
  j["format_version"] = io::kFormatVersion;
  j["robots"][0]["tasks"][0].erase("p0");
  CHECK_THROWS_AS(io::scenario_from_json(j), ConfigError);
  j = io::scenario_to_json(generate_scenario(GeneratorConfig{}));
  j["robots"][0]["tasks"][0]["type"] = "type9";
  CHECK_THROWS_AS(io::scenario_from_json(j), ConfigError);
}

TEST_CASE("config JSON") {
  GeneratorConfig c;
  c.robots = 9;
  c.sampling = SamplingMode::unconstrained;
  const GeneratorConfig back = io::config_from_json(io::config_to_json(c));
  CHECK(back.robots == 9);
  CHECK(back.sampling == SamplingMode::unconstrained);
  CHECK(io::config_from_json(io::json{{"zone_mix", 0.25}}).zone_mix == 0.25);
  CHECK_THROWS_AS(io::config_from_json(io::json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(io::config_from_json(io::json{{"r0", {0.1}}}), ConfigError);
}

TEST_CASE("index tables round-trip losslessly") {
  GeneratorConfig c;
  c.robots = 2;
  c.operators = 1;
  const JointScenario s = generate_scenario(c);
  auto tables = compute_index_tables(s);
  tables[1].monotone = false;
  tables[1].warning = "w";
  const auto back = io::index_tables_from_json(io::json::parse(io::index_tables_to_json(tables, s.gamma).dump()));
  REQUIRE(back.size() == 2u);
  for (int k = 0; k < 2; ++k) {
    CHECK(back[k].w_by_state == tables[k].w_by_state);
    CHECK(back[k].monotone == tables[k].monotone);
    CHECK(back[k].warning == tables[k].warning);
    REQUIRE(back[k].rounds.size() == tables[k].rounds.size());
    for (std::size_t r = 0; r < back[k].rounds.size(); ++r) {
      CHECK(back[k].rounds[r].lambda == tables[k].rounds[r].lambda);
      CHECK(back[k].rounds[r].states == tables[k].rounds[r].states);
    }
  }
}

TEST_CASE("csv layouts") {
  RolloutReport r;
  r.policy = "whittle";
  r.robots = 4;
  r.operators = 2;
  r.mean_cost_per_robot = 12.5;
  r.std_cost_per_robot = 0.25;
  const std::string csv = io::reports_to_csv({r});
  CHECK(csv == "policy,K,M,mean_cost_per_robot,std,timed_out\nwhittle,4,2,12.5,0.25,0\n");

  BenchmarkRow b;
  b.policy = "myopic1";
  b.robots = 9;
  b.operators = 3;
  b.precompute_seconds = 0.5;
  b.per_decision_seconds = 2e-6;
  CHECK(io::bench_to_csv({b}) == "policy,K,M,precompute_s,per_decision_s\nmyopic1,9,3,0.5,2e-06\n");

  r.mean_cost_per_robot = std::nan("");
  r.std_cost_per_robot = std::nan("");
  r.error = "cap";
  CHECK(io::reports_to_csv({r}) == "policy,K,M,mean_cost_per_robot,std,timed_out\nwhittle,4,2,,,0\n");
  CHECK(io::report_to_json(r)["mean_cost_per_robot"].is_null());
  CHECK(io::report_to_json(r)["error"] == "cap");
}

TEST_CASE("atomic writes replace the target") {
  const fs::path dir = fs::temp_directory_path() / "rmab_io_test";
  fs::create_directories(dir);
  const std::string path = (dir / "out.txt").string();
  io::write_atomic(path, "first");
  io::write_atomic(path, "second");
  CHECK(io::read_text_file(path) == "second");
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().filename() == "out.txt");
  CHECK_THROWS_AS(io::write_atomic((dir / "missing" / "x").string(), "x"), ConfigError);
  CHECK_THROWS_AS(io::read_json_file((dir / "nope.json").string()), ConfigError);
  io::write_atomic(path, "{ not json");
  CHECK_THROWS_AS(io::read_json_file(path), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("manifest fields") {
  io::RunManifest m{"generate", io::json{{"robots", 4}}, 7, {"in.json"}, {"out.json"}};
  const io::json j = io::manifest_to_json(m);
  for (const char* key : {"command", "config", "seed", "tool_version", "timestamp", "inputs", "outputs", "machine"}) {
    CHECK(j.contains(key));
  }
  CHECK(io::manifest_path("a/b.csv") == "a/b.csv.manifest.json");
}
