#include "rmab/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rmab/errors.hpp"
#include "rmab/indexability.hpp"

namespace rmab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Restores the OpenMP thread count on scope exit.
class SingleThreadScope {
 public:
  SingleThreadScope() {
#ifdef _OPENMP
    saved_ = omp_get_max_threads();
    omp_set_num_threads(1);
#endif
  }
  ~SingleThreadScope() {
#ifdef _OPENMP
    omp_set_num_threads(saved_);
#endif
  }
  SingleThreadScope(const SingleThreadScope&) = delete;
  SingleThreadScope& operator=(const SingleThreadScope&) = delete;

 private:
  int saved_ = 1;
};

}  // namespace

std::string to_string(SamplingMode m) {
  switch (m) {
    case SamplingMode::unbounded:
      return "unbounded";
    case SamplingMode::unconstrained:
      return "unconstrained";
    case SamplingMode::bounded:
      break;
  }
  return "bounded";
}

SamplingMode sampling_mode_from_string(const std::string& s) {
  if (s == "bounded") return SamplingMode::bounded;
  if (s == "unbounded") return SamplingMode::unbounded;
  if (s == "unconstrained") return SamplingMode::unconstrained;
  throw ConfigError("unknown sampling mode '" + s + "'");
}

void validate(const GeneratorConfig& c) {
  auto range_ok = [](const ProbabilityRange& r) {
    return r.lo >= 0.0 && r.hi <= 1.0 && r.lo <= r.hi;
  };
  if (c.robots < 1) throw ConfigError("robots must be at least 1");
  if (c.operators < 1 || c.operators > c.robots) throw ConfigError("operators must satisfy 1 <= M <= K");
  if (c.waypoints < 1) throw ConfigError("waypoints must be at least 1");
  if (!(c.zone_mix >= 0.0 && c.zone_mix <= 1.0)) throw ConfigError("zone_mix must lie in [0,1]");
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
  if (!range_ok(c.r0) || !range_ok(c.type1_q0) || !range_ok(c.r1n0) || !range_ok(c.type2_q1n1) ||
      !(c.type2_q0_floor >= 0.0 && c.type2_q0_floor <= 1.0)) {
    throw ConfigError("probability ranges must lie within [0,1]");
  }
  if (!(c.rho >= 0.0 && c.phi >= 0.0 && c.teleop_surcharge >= 0.0)) {
    throw ConfigError("costs must be nonnegative");
  }
  if (c.max_retries < 1) throw ConfigError("max_retries must be positive");
}

TaskTransition sample_task(const GeneratorConfig& c, TaskType type, RandomStream& rng) {
  const double g = c.gamma;
  if (c.sampling == SamplingMode::unconstrained) {
    TaskTransition t;
    t.type = TaskType::type2;
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    t.p0 = u;
    t.q0 = v;
    t.p1n0 = rng.uniform();
    do {
      t.q1n1 = rng.uniform();
    } while (t.q1n1 == 0.0);  // A2
    return t;
  }

  for (int attempt = 0; attempt < c.max_retries; ++attempt) {
    TaskTransition t;
    t.type = type;
    const double r0 = rng.uniform(c.r0.lo, c.r0.hi);
    const double r1 = rng.uniform(c.r1n0.lo, c.r1n0.hi);
    t.p1n0 = 1.0 - r1;
    t.q1n0 = 0.0;
    if (type == TaskType::type1) {
      t.q0 = rng.uniform(c.type1_q0.lo, c.type1_q0.hi);
      t.p0 = std::max(0.0, 1.0 - r0 - t.q0);
      t.p1n1 = t.p1n0;
      t.q1n1 = 0.0;
      return t;
    }
    // Type-2: fault resets to the current task.
    t.p1n1 = 0.0;
    double q0_hi = 1.0 - r0;
    if (c.sampling == SamplingMode::bounded) {
      q0_hi = std::min(q0_hi, (1.0 - g * r0) / (g * (1.0 + g * t.p1n0)));
    }
    if (q0_hi < c.type2_q0_floor) continue;
    t.q0 = rng.uniform(c.type2_q0_floor, q0_hi);
    t.p0 = std::max(0.0, 1.0 - r0 - t.q0);
    double q1_lo = c.type2_q1n1.lo;
    if (c.sampling == SamplingMode::bounded) {
      const double bound = 1.0 - 1.0 / g + g * t.q0 * t.p1n0 / (1.0 - g * r0 - g * t.q0);
      q1_lo = std::max(bound, q1_lo);
    }
    if (q1_lo > c.type2_q1n1.hi) continue;
    t.q1n1 = rng.uniform(q1_lo, c.type2_q1n1.hi);
    return t;
  }
  throw GeneratorError("no feasible Type-2 draw after " + std::to_string(c.max_retries) +
                       " attempts");
}

RobotModel sample_robot(const GeneratorConfig& c, RandomStream& rng) {
  std::vector<TaskTransition> tasks;
  std::vector<TaskCost> costs;
  for (int n = 0; n < c.waypoints; ++n) {
    const TaskType type = rng.uniform() < c.zone_mix ? TaskType::type1 : TaskType::type2;
    tasks.push_back(sample_task(c, type, rng));
    costs.push_back({c.rho, c.phi});
  }
  return RobotModel(std::move(tasks), std::move(costs), c.teleop_surcharge);
}

JointScenario generate_scenario(const GeneratorConfig& config, RandomStream& rng) {
  validate(config);
  JointScenario s;
  s.operators = config.operators;
  s.gamma = config.gamma;
  s.seed = config.seed;
  for (int k = 0; k < config.robots; ++k) {
    RobotModel r = sample_robot(config, rng);
    const auto violations = validate(r);
    if (!violations.empty()) throw GeneratorError("generated robot invalid: " + violations[0].message);
    s.robots.push_back(std::move(r));
  }
  return s;
}

JointScenario generate_scenario(const GeneratorConfig& config) {
  RandomStream rng(config.seed, 0, 0, StreamTag::generator);
  return generate_scenario(config, rng);
}

Allocation FixedArmPolicy::decide(const JointState& state, RandomStream&) const {
  Allocation a;
  a.a.assign(state.per_robot.size(), 0);
  a.a.at(0) = static_cast<int>(policy_.action_by_state.at(state.per_robot[0]));
  return a;
}

int default_horizon(const JointScenario& s, double eps_tail) {
  const double scale = s.num_robots() * std::max(s.max_step_cost(), 1e-12) / (1.0 - s.gamma);
  const double t = std::log(eps_tail / scale) / std::log(s.gamma);
  return std::max(1, static_cast<int>(std::ceil(t)));
}

RolloutResult rollout(const JointScenario& s, const AllocationPolicy& policy, RandomStream& env,
                      RandomStream& policy_rng, const RolloutOptions& options) {
  const int k = s.num_robots();
  const int horizon = options.horizon > 0 ? options.horizon : default_horizon(s);
  JointState x = options.start ? *options.start : JointState::start(s);
  RolloutResult out;
  const auto t0 = Clock::now();
  double discount = 1.0;
  std::vector<double> draws(k);
  while (!x.all_goal(s)) {
    if (out.steps >= horizon) {
      out.truncated = true;
      out.tail_bound = std::pow(s.gamma, horizon) * k * s.max_step_cost() / (1.0 - s.gamma);
      break;
    }
    if (std::isfinite(options.timeout_seconds) && seconds_since(t0) > options.timeout_seconds) {
      out.timed_out = true;
      break;
    }
    const auto td = Clock::now();
    const Allocation a = policy.decide(x, policy_rng);
    out.decision_seconds += seconds_since(td);
    ++out.decisions;
    if (!feasible(s, x, a)) throw ConfigError("policy '" + policy.name() + "' returned an infeasible allocation");

    double step = 0.0;
    for (int i = 0; i < k; ++i) step += s.robots[i].cost(x.per_robot[i], static_cast<Action>(a.a[i]));
    out.cost += discount * step;
    discount *= s.gamma;

    for (int i = 0; i < k; ++i) draws[i] = env.uniform();
    for (int i = 0; i < k; ++i) {
      const SuccessorList succ = s.robots[i].successors(x.per_robot[i], static_cast<Action>(a.a[i]));
      double cum = 0.0;
      StateIndex next = succ.items[succ.size - 1].state;
      for (const Successor& e : succ) {
        cum += e.prob;
        if (draws[i] < cum) {
          next = e.state;
          break;
        }
      }
      x.per_robot[i] = next;
    }
    ++out.steps;
  }
  return out;
}

double compensated_sum(const std::vector<double>& xs) {
  double sum = 0.0, comp = 0.0;
  for (double v : xs) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

namespace {

RandomStream environment_stream(const JointScenario& s, const EvaluateOptions& o, int iteration,
                                std::size_t policy_index) {
  const std::uint64_t salt = o.common_random_numbers ? 0 : (policy_index + 1) * 0x9e3779b97f4a7c15ULL;
  return RandomStream(s.seed ^ salt, o.instance, static_cast<std::uint64_t>(iteration),
                      StreamTag::environment);
}

RandomStream policy_stream(const JointScenario& s, const EvaluateOptions& o, int iteration,
                           std::size_t policy_index) {
  return RandomStream(s.seed + (policy_index + 1) * 0xd1b54a32d192ed03ULL, o.instance,
                      static_cast<std::uint64_t>(iteration), StreamTag::policy);
}

RolloutReport summarize(const JointScenario& s, const AllocationPolicy& policy,
                        const EvaluateOptions& o, const std::vector<RolloutResult>& results,
                        bool timed_out) {
  RolloutReport r;
  r.policy = policy.name();
  r.robots = s.num_robots();
  r.operators = s.operators;
  r.iterations = o.iterations;
  r.timed_out = timed_out;
  if (timed_out) {
    r.mean_cost = r.std_cost = r.mean_cost_per_robot = r.std_cost_per_robot =
        std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.costs.reserve(results.size());
  double decision_time = 0.0;
  long decisions = 0;
  for (const RolloutResult& x : results) {
    r.costs.push_back(x.cost);
    decision_time += x.decision_seconds;
    decisions += x.decisions;
    if (x.truncated) {
      ++r.truncated;
      r.max_tail_bound = std::max(r.max_tail_bound, x.tail_bound);
    }
  }
  const double n = static_cast<double>(r.costs.size());
  r.mean_cost = compensated_sum(r.costs) / n;
  std::vector<double> sq;
  sq.reserve(r.costs.size());
  for (double c : r.costs) sq.push_back((c - r.mean_cost) * (c - r.mean_cost));
  r.std_cost = r.costs.size() > 1 ? std::sqrt(compensated_sum(sq) / (n - 1.0)) : 0.0;
  r.mean_cost_per_robot = r.mean_cost / s.num_robots();
  r.std_cost_per_robot = r.std_cost / s.num_robots();
  r.mean_decision_seconds = decisions > 0 ? decision_time / decisions : 0.0;
  return r;
}

void check_evaluate(const EvaluateOptions& o) {
  if (o.iterations < 1) throw ConfigError("iterations must be at least 1");
}

}  // namespace

std::vector<RolloutReport> evaluate(const JointScenario& s,
                                    const std::vector<const AllocationPolicy*>& policies,
                                    const EvaluateOptions& o) {
  check_evaluate(o);
  std::vector<RolloutReport> reports;
  RolloutOptions ro;
  ro.horizon = o.horizon;
  ro.timeout_seconds = o.timeout_seconds;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    std::vector<RolloutResult> results(o.iterations);
    std::atomic<bool> timed_out{false};
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < o.iterations; ++i) {
      if (timed_out.load(std::memory_order_relaxed)) continue;
      RandomStream env = environment_stream(s, o, i, p);
      RandomStream pol = policy_stream(s, o, i, p);
      results[i] = rollout(s, *policies[p], env, pol, ro);
      if (results[i].timed_out) timed_out.store(true, std::memory_order_relaxed);
    }
    reports.push_back(summarize(s, *policies[p], o, results, timed_out.load()));
  }
  return reports;
}

std::vector<RolloutReport> evaluate_reference(const JointScenario& s,
                                              const std::vector<const AllocationPolicy*>& policies,
                                              const EvaluateOptions& o) {
  check_evaluate(o);
  std::vector<RolloutReport> reports;
  RolloutOptions ro;
  ro.horizon = o.horizon;
  ro.timeout_seconds = o.timeout_seconds;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    std::vector<RolloutResult> results;
    bool timed_out = false;
    for (int i = 0; i < o.iterations && !timed_out; ++i) {
      RandomStream env = environment_stream(s, o, i, p);
      RandomStream pol = policy_stream(s, o, i, p);
      results.push_back(rollout(s, *policies[p], env, pol, ro));
      timed_out = results.back().timed_out;
    }
    reports.push_back(summarize(s, *policies[p], o, results, timed_out));
  }
  return reports;
}

std::vector<BenchmarkRow> benchmark_decision_time(const JointScenario& s,
                                                  const std::vector<std::string>& policies,
                                                  const BenchmarkOptions& o) {
  if (o.calls < 1 || o.repeats < 1 || o.warmup < 0) throw ConfigError("invalid benchmark options");
  SingleThreadScope single_thread;

  RandomStream state_rng(s.seed, 0, 0, StreamTag::benchmark);
  std::vector<JointState> states(o.calls + o.warmup);
  for (JointState& x : states) {
    x.per_robot.resize(s.num_robots());
    for (int k = 0; k < s.num_robots(); ++k) {
      x.per_robot[k] = static_cast<StateIndex>(state_rng.below(s.robots[k].num_states()));
    }
  }

  std::vector<BenchmarkRow> rows;
  for (const std::string& name : policies) {
    BenchmarkRow row;
    row.policy = name;
    row.robots = s.num_robots();
    row.operators = s.operators;
    std::unique_ptr<AllocationPolicy> policy;
    try {
      // Exact joint solves are too costly to repeat.
      const int builds = name == "optimal" ? 1 : o.repeats;
      double best = std::numeric_limits<double>::infinity();
      for (int b = 0; b < builds; ++b) {
        const auto t0 = Clock::now();
        policy = make_policy(name, s, o.joint);
        best = std::min(best, seconds_since(t0));
      }
      row.precompute_seconds = best;
    } catch (const Error& e) {
      row.error = e.what();
      row.precompute_seconds = row.per_decision_seconds = std::numeric_limits<double>::quiet_NaN();
      rows.push_back(std::move(row));
      continue;
    }
    RandomStream rng(s.seed, 0, 1, StreamTag::benchmark);
    std::size_t sink = 0;
    for (int i = 0; i < o.warmup; ++i) sink += policy->decide(states[i], rng).count();
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < o.repeats; ++rep) {
      const auto t0 = Clock::now();
      for (int i = 0; i < o.calls; ++i) sink += policy->decide(states[o.warmup + i], rng).count();
      best = std::min(best, seconds_since(t0) / o.calls);
    }
    row.per_decision_seconds = best;
    // Keeps the decide calls observable.
    if (sink == static_cast<std::size_t>(-1)) row.error = "unreachable";
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace rmab
