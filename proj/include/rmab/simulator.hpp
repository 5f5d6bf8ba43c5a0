#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rmab/policies.hpp"
#include "rmab/random.hpp"
#include "rmab/robot_model.hpp"

namespace rmab {

struct ProbabilityRange {
  double lo;
  double hi;
};

/// How task probabilities are drawn.
enum class SamplingMode {
  /// Default probability ranges; Type-2 draws clamped by the q0 / q1n1 indexability bounds.
  bounded,
  /// Default probability ranges without the Type-2 bounds.
  unbounded,
  /// Type-2 shape with every free probability uniform over its whole feasible
  /// range: (p0, q0) uniform on the simplex, p1n0 and q1n1 uniform on [0,1].
  unconstrained,
};

std::string to_string(SamplingMode m);
SamplingMode sampling_mode_from_string(const std::string& s);

struct GeneratorConfig {
  int robots = 4;
  int operators = 2;
  int waypoints = 7;
  /// Fraction of tasks drawn as Type-1; the rest are Type-2.
  double zone_mix = 0.5;
  SamplingMode sampling = SamplingMode::bounded;

  ProbabilityRange r0{0.2, 0.5};
  ProbabilityRange type1_q0{0.2, 0.5};
  double type2_q0_floor = 0.1;
  ProbabilityRange r1n0{0.1, 0.4};
  ProbabilityRange type2_q1n1{0.1, 0.9};

  double rho = 2.0;
  double phi = 4.0;  // fault-state cost
  double teleop_surcharge = 0.75;
  double gamma = 0.99;
  std::uint64_t seed = 1;
  int max_retries = 1000;
};

/// Throws ConfigError on an invalid configuration.
void validate(const GeneratorConfig& config);

TaskTransition sample_task(const GeneratorConfig& config, TaskType type, RandomStream& rng);
RobotModel sample_robot(const GeneratorConfig& config, RandomStream& rng);

/// K robots with N tasks each; every robot passes validate().
JointScenario generate_scenario(const GeneratorConfig& config, RandomStream& rng);
/// Uses the (config.seed, 0, 0, generator) stream.
JointScenario generate_scenario(const GeneratorConfig& config);

/// Plays a fixed single-arm policy (robot 0 only).
class FixedArmPolicy : public AllocationPolicy {
 public:
  explicit FixedArmPolicy(ArmPolicy policy) : policy_(std::move(policy)) {}
  std::string name() const override { return "fixed"; }
  Allocation decide(const JointState& state, RandomStream&) const override;

 private:
  ArmPolicy policy_;
};

struct RolloutOptions {
  /// 0 selects default_horizon().
  int horizon = 0;
  double timeout_seconds = std::numeric_limits<double>::infinity();
  std::optional<JointState> start;
};

struct RolloutResult {
  double cost = 0.0;
  int steps = 0;
  bool truncated = false;
  /// gamma^T * K * C_max / (1 - gamma) when truncated, else 0.
  double tail_bound = 0.0;
  bool timed_out = false;
  int decisions = 0;
  double decision_seconds = 0.0;
};

/// Smallest T with gamma^T * K * C_max / (1 - gamma) <= eps_tail.
int default_horizon(const JointScenario& scenario, double eps_tail = 1e-6);

/// One trajectory from all robots at (1,0) until all reach Goal or the
/// horizon. The environment stream draws exactly K uniforms per step, so
/// policies sharing it see the same noise.
RolloutResult rollout(const JointScenario& scenario, const AllocationPolicy& policy,
                      RandomStream& env, RandomStream& policy_rng,
                      const RolloutOptions& options = {});

struct EvaluateOptions {
  int iterations = 500;
  double timeout_seconds = 10.0;
  bool common_random_numbers = true;
  std::uint64_t instance = 0;
  int horizon = 0;
};

struct RolloutReport {
  std::string policy;
  int robots = 0;
  int operators = 0;
  int iterations = 0;
  double mean_cost = 0.0;
  double std_cost = 0.0;
  double mean_cost_per_robot = 0.0;
  double std_cost_per_robot = 0.0;
  double mean_decision_seconds = 0.0;
  bool timed_out = false;
  int truncated = 0;
  double max_tail_bound = 0.0;
  /// Set when the policy could not be built; the statistics are then NaN.
  std::string error;
  /// Per-iteration discounted costs, in iteration order.
  std::vector<double> costs;
};

/// Monte Carlo comparison. Iteration i of every policy uses the environment
/// stream (seed, instance, i) when common_random_numbers is set. Iterations
/// run in parallel; statistics are aggregated in iteration order so reports
/// do not depend on the thread count (timing excepted).
std::vector<RolloutReport> evaluate(const JointScenario& scenario,
                                    const std::vector<const AllocationPolicy*>& policies,
                                    const EvaluateOptions& options);

/// Serial reference of evaluate.
std::vector<RolloutReport> evaluate_reference(const JointScenario& scenario,
                                              const std::vector<const AllocationPolicy*>& policies,
                                              const EvaluateOptions& options);

struct BenchmarkOptions {
  int calls = 1000;
  int warmup = 100;
  int repeats = 5;
  JointSolveOptions joint;
};

struct BenchmarkRow {
  std::string policy;
  int robots = 0;
  int operators = 0;
  double precompute_seconds = 0.0;
  double per_decision_seconds = 0.0;
  /// Set when the policy could not be built (e.g. product-space cap).
  std::string error;
};

/// Single-threaded timing of policy construction and of decide() on random
/// joint states shared by all policies.
std::vector<BenchmarkRow> benchmark_decision_time(const JointScenario& scenario,
                                                  const std::vector<std::string>& policies,
                                                  const BenchmarkOptions& options = {});

/// Sum with Neumaier compensation.
double compensated_sum(const std::vector<double>& xs);

}  // namespace rmab
