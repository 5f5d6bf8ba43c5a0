#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "rmab/indexability.hpp"
#include "rmab/io.hpp"

using namespace rmab;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(RMAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) { return io::read_text_file(path); }

struct Workdir {
  fs::path dir;
  Workdir() {
    dir = fs::current_path() / "cli_work";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("generate") {
  Workdir w;
  REQUIRE(run("generate --seed 5 --out " + (w / "a.json")) == 0);
  REQUIRE(run("generate --seed 5 --out " + (w / "b.json")) == 0);
  const auto j = io::read_json_file(w / "a.json");
  CHECK(j["robots"].size() == 4u);
  for (const auto& r : j["robots"]) CHECK(r["tasks"].size() == 7u);
  CHECK(fs::exists(w / "a.json.manifest.json"));
  // Same inputs, same bytes (apart from the embedded manifest name).
  auto a = io::read_json_file(w / "a.json"), b = io::read_json_file(w / "b.json");
  a.erase("manifest");
  b.erase("manifest");
  CHECK(a.dump() == b.dump());
  REQUIRE(run("generate --seed 5 --out " + (w / "a.json")) == 0);
  CHECK(slurp(w / "a.json") == j.dump(2) + "\n");

  CHECK(run("generate --robots 0 --out " + (w / "c.json")) == 2);
  CHECK(!fs::exists(w / "c.json"));
  CHECK(run("generate --sampling nonsense") == 2);
  CHECK(run("generate --no-such-flag") == 2);

  io::write_atomic(w / "cfg.json", R"({"robots": 2, "operators": 1, "waypoints": 3})");
  REQUIRE(run("generate --config " + (w / "cfg.json") + " --out " + (w / "d.json")) == 0);
  const auto d = io::read_json_file(w / "d.json");
  CHECK(d["robots"].size() == 2u);
  CHECK(d["robots"][0]["tasks"].size() == 3u);
}

TEST_CASE("check") {
  Workdir w;
  REQUIRE(run("generate --zone-mix 1 --out " + (w / "t1.json")) == 0);
  CHECK(run("check " + (w / "t1.json") + " --method theorem --out " + (w / "v.json")) == 0);
  const auto v = io::read_json_file(w / "v.json");
  CHECK(v["indexable"] == true);
  CHECK(v["robots"][0]["theorem"]["per_task"].size() == 7u);
  CHECK(run("check " + (w / "t1.json") + " --method both") == 0);
  CHECK(run("check " + (w / "t1.json") + " --method guess") == 2);

  io::write_atomic(w / "corrupt.json", "{\"gamma\": 0.9, ");
  CHECK(run("check " + (w / "corrupt.json")) == 2);
  CHECK(run("check " + (w / "missing.json")) == 2);

  auto bad = io::read_json_file(w / "t1.json");
  bad["robots"][0]["tasks"][1]["p0"] = 0.9;
  bad["robots"][0]["tasks"][1]["q0"] = 0.9;
  io::write_json(w / "bad.json", bad);
  CHECK(run("check " + (w / "bad.json")) == 2);
}

TEST_CASE("non-indexable scenarios") {
  Workdir w;
  RandomStream rng(13, 0, 0, StreamTag::generator);
  JointScenario s;
  s.gamma = 0.9;
  s.operators = 1;
  for (int i = 0; i < 5000 && s.robots.empty(); ++i) {
    RobotModel m = oracle::random_arm(rng, 7, oracle::random_type2);
    if (!numeric_verify(m, 0.9).indexable) s.robots.push_back(m);
  }
  REQUIRE(s.robots.size() == 1u);
  io::write_json(w / "ni.json", io::scenario_to_json(s));
  CHECK(run("check " + (w / "ni.json") + " --method numeric") == 3);
  CHECK(run("solve " + (w / "ni.json") + " --out " + (w / "t.json")) == 3);
  CHECK(!fs::exists(w / "t.json"));
  CHECK(run("solve " + (w / "ni.json") + " --force --out " + (w / "t.json")) == 0);
  CHECK(fs::exists(w / "t.json"));
  // Bisection cannot reproduce greedy values on a non-indexable arm.
  CHECK(run("solve " + (w / "ni.json") + " --force --oracle --out " + (w / "t2.json")) == 4);
}

TEST_CASE("solve") {
  Workdir w;
  REQUIRE(run("generate --robots 3 --operators 1 --out " + (w / "s.json")) == 0);
  REQUIRE(run("solve " + (w / "s.json") + " --oracle --out " + (w / "t.json")) == 0);
  const auto j = io::read_json_file(w / "t.json");
  CHECK(j["oracle"]["max_abs_diff"].get<double>() <= 1e-6);
  const auto tables = io::index_tables_from_json(j);
  REQUIRE(tables.size() == 3u);
  for (const auto& t : tables) {
    CHECK(t.w_by_state.size() == 15u);
    CHECK(t.w_by_state.back() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(!t.rounds.empty());
  }
  REQUIRE(run("simulate " + (w / "s.json") + " --policies whittle --tables " + (w / "t.json") +
              " --iterations 50 --out " + (w / "r1.csv")) == 0);
  REQUIRE(run("simulate " + (w / "s.json") + " --policies whittle --iterations 50 --out " + (w / "r2.csv")) == 0);
  CHECK(slurp(w / "r1.csv") == slurp(w / "r2.csv"));
}

TEST_CASE("simulate") {
  Workdir w;
  REQUIRE(run("generate --robots 9 --operators 3 --seed 4 --out " + (w / "k9.json")) == 0);
  REQUIRE(run("simulate " + (w / "k9.json") + " --policies whittle,reactive --iterations 400 --out " +
              (w / "r.csv")) == 0);
  const std::string csv = slurp(w / "r.csv");
  CHECK(csv.rfind("policy,K,M,mean_cost_per_robot,std,timed_out\n", 0) == 0);
  const auto j = io::read_json_file(w / "r.json");
  REQUIRE(j["reports"].size() == 2u);
  CHECK(j["reports"][0]["policy"] == "whittle");
  CHECK(j["reports"][0]["K"] == 9);
  CHECK(j["reports"][0]["mean_cost_per_robot"].get<double>() <= j["reports"][1]["mean_cost_per_robot"].get<double>());
  CHECK(fs::exists(w / "r.csv.manifest.json"));

  REQUIRE(run("simulate " + (w / "k9.json") + " --policies whittle,reactive --iterations 400 --threads 1 --out " +
              (w / "r2.csv")) == 0);
  CHECK(slurp(w / "r2.csv") == csv);

  REQUIRE(run("generate --robots 25 --operators 2 --out " + (w / "k25.json")) == 0);
  REQUIRE(run("simulate " + (w / "k25.json") + " --policies optimal,reactive --iterations 20 --out " +
              (w / "big.csv")) == 0);
  const auto big = io::read_json_file(w / "big.json");
  CHECK(big["reports"][0]["policy"] == "optimal");
  CHECK(big["reports"][0].contains("error"));
  CHECK(big["reports"][0]["mean_cost_per_robot"].is_null());
  CHECK(big["reports"][1]["mean_cost_per_robot"].is_number());

  CHECK(run("simulate " + (w / "k9.json") + " --policies whittle,unknown") == 2);
}

TEST_CASE("bench") {
  Workdir w;
  REQUIRE(run("generate --robots 3 --operators 1 --out " + (w / "s.json")) == 0);
  REQUIRE(run("bench " + (w / "s.json") + " --calls 20 --warmup 2 --repeats 1 --out " + (w / "b.csv")) == 0);
  const std::string csv = slurp(w / "b.csv");
  CHECK(csv.rfind("policy,K,M,precompute_s,per_decision_s\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}
