#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "rmab/errors.hpp"
#include "rmab/indexability.hpp"
#include "rmab/simulator.hpp"
#include "rmab/whittle.hpp"

using namespace rmab;

namespace {

RobotModel sure_step() {
  TaskTransition t;
  t.p0 = 1.0;
  t.p1n0 = 1.0;
  t.p1n1 = 1.0;
  return RobotModel({t}, {{2.0, 4.0}}, 0.75);
}

JointScenario single(RobotModel r, double g = 0.99) {
  JointScenario s;
  s.robots = {std::move(r)};
  s.operators = 1;
  s.gamma = g;
  s.seed = 3;
  return s;
}

}  // namespace

TEST_CASE("random streams are reproducible and distinct") {
  RandomStream a(1, 2, 3, StreamTag::environment), b(1, 2, 3, StreamTag::environment);
  RandomStream c(1, 2, 4, StreamTag::environment), d(1, 2, 3, StreamTag::policy);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    differs_c = differs_c || x != c.uniform();
    differs_d = differs_d || x != d.uniform();
  }
  CHECK(differs_c);
  CHECK(differs_d);
  std::vector<double> counts(7, 0.0);
  for (int i = 0; i < 70000; ++i) counts[a.below(7)] += 1;
  CHECK(oracle::chi_square(counts, std::vector<double>(7, 10000.0)) < 22.46);  // df=6, 99.9%
}

TEST_CASE("generated task shapes") {
  GeneratorConfig c;
  RandomStream rng(1, 0, 0, StreamTag::generator);
  for (int i = 0; i < 2000; ++i) {
    const TaskTransition t1 = sample_task(c, TaskType::type1, rng);
    CHECK(t1.q1n0 == 0.0);
    CHECK(t1.q1n1 == 0.0);
    CHECK(t1.p1n1 == t1.p1n0);
    CHECK(t1.r0() >= 0.2 - 1e-12);
    CHECK(t1.r0() <= 0.5 + 1e-12);
    CHECK(t1.q0 >= 0.2);
    CHECK(t1.q0 <= 0.5);
    CHECK(t1.r1n0() >= 0.1 - 1e-12);
    CHECK(t1.r1n0() <= 0.4 + 1e-12);

    const TaskTransition t2 = sample_task(c, TaskType::type2, rng);
    CHECK(t2.q1n0 == 0.0);
    CHECK(t2.p1n1 == 0.0);
    CHECK(t2.q0 >= 0.1);
    CHECK(t2.q0 <= type2_bounds(t2, c.gamma).q0_max + 1e-12);
    CHECK(t2.q1n1 >= std::max(type2_bounds(t2, c.gamma).q1n1_min, 0.1) - 1e-12);
    CHECK(t2.q1n1 <= 0.9);
  }
}

TEST_CASE("bounded scenarios pass the theorem") {
  GeneratorConfig c;
  c.robots = 1;
  c.operators = 1;
  for (int i = 0; i < 1000; ++i) {
    c.seed = i;
    const JointScenario s = generate_scenario(c);
    REQUIRE(s.robots.size() == 1u);
    CHECK(s.robots[0].num_tasks() == 7);
    CHECK(theorem_check(s.robots[0], 0.99).indexable);
  }
}

TEST_CASE("generator configuration errors") {
  GeneratorConfig c;
  c.robots = 0;
  CHECK_THROWS_AS(generate_scenario(c), ConfigError);
  c = {};
  c.operators = 5;
  CHECK_THROWS_AS(generate_scenario(c), ConfigError);
  c = {};
  c.r0 = {0.6, 0.3};
  CHECK_THROWS_AS(generate_scenario(c), ConfigError);
  c = {};
  c.zone_mix = 0.0;
  c.r0 = {0.95, 0.95};
  c.max_retries = 20;
  CHECK_THROWS_AS(generate_scenario(c), GeneratorError);
}

TEST_CASE("generation is deterministic in the seed") {
  GeneratorConfig c;
  const JointScenario a = generate_scenario(c), b = generate_scenario(c);
  c.seed = 2;
  const JointScenario d = generate_scenario(c);
  CHECK(a.robots[0].tasks()[0].p0 == b.robots[0].tasks()[0].p0);
  CHECK(a.robots[0].tasks()[0].p0 != d.robots[0].tasks()[0].p0);
}

TEST_CASE("rollout edge cases") {
  const JointScenario s = single(sure_step());
  RandomStream env(1, 0, 0, StreamTag::environment), pol(1, 0, 0, StreamTag::policy);
  const auto reactive = make_policy("reactive", s);
  RolloutOptions o;
  o.start = JointState{{2}};
  RolloutResult r = rollout(s, *reactive, env, pol, o);
  CHECK(r.cost == 0.0);
  CHECK(r.steps == 0);
  for (int i = 0; i < 50; ++i) {
    r = rollout(s, *reactive, env, pol);
    CHECK(r.cost == 2.0);
    CHECK(r.steps == 1);
  }
}

TEST_CASE("default horizon bounds the tail") {
  RandomStream rng(2, 0, 0, StreamTag::generator);
  JointScenario s = single(oracle::random_arm(rng, 3));
  const int t = default_horizon(s);
  const double tail = [&](int h) { return std::pow(s.gamma, h) * s.max_step_cost() / (1 - s.gamma); }(t);
  CHECK(tail <= 1e-6);
  CHECK(std::pow(s.gamma, t - 1) * s.max_step_cost() / (1 - s.gamma) > 1e-6);
}

TEST_CASE("truncation reports a tail bound") {
  // Passive fault self-loop never reaches Goal.
  TaskTransition t;
  t.q0 = 1.0;
  t.p1n1 = 1.0;
  const JointScenario s = single(RobotModel({t}, {{1.0, 1.0}}, 0.0), 0.9);
  FixedArmPolicy passive(ArmPolicy::all(3, kPassive));
  RandomStream env(1, 0, 0, StreamTag::environment), pol(1, 0, 0, StreamTag::policy);
  RolloutOptions o;
  o.horizon = 50;
  const RolloutResult r = rollout(s, passive, env, pol, o);
  CHECK(r.truncated);
  CHECK(r.steps == 50);
  CHECK(r.tail_bound == doctest::Approx(std::pow(0.9, 50) * 1.0 / 0.1));
  CHECK(r.cost == doctest::Approx((1 - std::pow(0.9, 50)) / 0.1));
}

TEST_CASE("fixed-policy rollouts match the linear solve") {
  RandomStream rng(3, 0, 0, StreamTag::generator);
  for (int i = 0; i < 10; ++i) {
    const RobotModel m = oracle::random_arm(rng, 3);
    ArmPolicy pi;
    for (int x = 0; x < m.num_states(); ++x) {
      // Faults active so every trajectory terminates.
      pi.action_by_state.push_back(x == m.goal_index() ? kPassive : (m.is_fault(x) ? kActive : static_cast<int>(rng.below(2))));
    }
    const JointScenario s = single(m, 0.95);
    const double d = evaluate_policy(m, pi, s.gamma).D(0);
    FixedArmPolicy fixed(pi);
    EvaluateOptions o;
    o.iterations = 20000;
    o.timeout_seconds = 60;
    o.instance = i;
    const auto rep = evaluate(s, {&fixed}, o).front();
    CHECK(std::abs(rep.mean_cost - d) <= 3.0 * rep.std_cost / std::sqrt(20000.0));
  }
}

TEST_CASE("evaluation is deterministic and thread-count independent") {
  GeneratorConfig c;
  c.robots = 3;
  c.operators = 1;
  const JointScenario s = generate_scenario(c);
  const auto w = make_policy("whittle", s);
  const auto r = make_policy("reactive", s);
  EvaluateOptions o;
  o.iterations = 300;
  o.timeout_seconds = 60;
  const auto a = evaluate(s, {w.get(), r.get()}, o);
  const auto b = evaluate(s, {w.get(), r.get()}, o);
  const auto ref = evaluate_reference(s, {w.get(), r.get()}, o);
  for (int p = 0; p < 2; ++p) {
    CHECK(a[p].costs == b[p].costs);
    CHECK(a[p].costs == ref[p].costs);
    CHECK(a[p].mean_cost == ref[p].mean_cost);
    CHECK(a[p].std_cost == ref[p].std_cost);
    CHECK(a[p].std_cost >= 0.0);
    CHECK(a[p].iterations == 300);
  }
}

TEST_CASE("common random numbers give identical noise to identical policies") {
  GeneratorConfig c;
  c.robots = 3;
  c.operators = 1;
  const JointScenario s = generate_scenario(c);
  const auto b1 = make_policy("benefit", s);
  const auto b2 = make_policy("benefit", s);
  EvaluateOptions o;
  o.iterations = 200;
  o.timeout_seconds = 60;
  auto rep = evaluate(s, {b1.get(), b2.get()}, o);
  CHECK(rep[0].costs == rep[1].costs);
  o.common_random_numbers = false;
  rep = evaluate(s, {b1.get(), b2.get()}, o);
  CHECK(rep[0].costs != rep[1].costs);
}

TEST_CASE("timeouts are flagged") {
  GeneratorConfig c;
  c.robots = 4;
  c.operators = 2;
  const JointScenario s = generate_scenario(c);
  const auto p = make_policy("myopic2", s);
  EvaluateOptions o;
  o.iterations = 100000;
  o.timeout_seconds = 1e-6;
  const auto rep = evaluate(s, {p.get()}, o).front();
  CHECK(rep.timed_out);
  CHECK(std::isnan(rep.mean_cost_per_robot));
  o.iterations = 0;
  CHECK_THROWS_AS(evaluate(s, {p.get()}, o), ConfigError);
}

TEST_CASE("compensated summation") {
  std::vector<double> xs = {1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_sum(xs) == 2.0);
  std::vector<double> many(100000, 0.1);
  CHECK(std::abs(compensated_sum(many) - 10000.0) < 1e-9);
}

TEST_CASE("benchmark rows") {
  GeneratorConfig c;
  c.robots = 3;
  c.operators = 1;
  const JointScenario s = generate_scenario(c);
  BenchmarkOptions o;
  o.calls = 50;
  o.warmup = 5;
  o.repeats = 2;
  const auto rows = benchmark_decision_time(s, {"whittle", "reactive", "optimal"}, o);
  REQUIRE(rows.size() == 3u);
  for (const auto& r : rows) {
    CHECK(r.error.empty());
    CHECK(r.per_decision_seconds > 0.0);
    CHECK(r.precompute_seconds >= 0.0);
    CHECK(r.robots == 3);
  }
  BenchmarkOptions tight = o;
  tight.joint.state_cap = 10;
  const auto capped = benchmark_decision_time(s, {"optimal"}, tight);
  CHECK(!capped[0].error.empty());
}
