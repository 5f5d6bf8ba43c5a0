#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rmab/random.hpp"
#include "rmab/robot_model.hpp"
#include "rmab/whittle.hpp"

namespace rmab {

struct JointState {
  std::vector<StateIndex> per_robot;

  static JointState start(const JointScenario& scenario);
  bool all_goal(const JointScenario& scenario) const;
};

/// Binary teleoperation vector over robots.
struct Allocation {
  std::vector<int> a;

  int count() const;
  friend bool operator==(const Allocation&, const Allocation&) = default;
};

/// True iff at most `operators` robots are allocated and none is at Goal.
bool feasible(const JointScenario& scenario, const JointState& state, const Allocation& alloc);

/// All feasible allocations for `state`, in lexicographic order (zero vector first).
std::vector<Allocation> feasible_allocations(const JointScenario& scenario,
                                             const JointState& state);

class AllocationPolicy {
 public:
  virtual ~AllocationPolicy() = default;
  virtual std::string name() const = 0;
  /// Must be safe to call concurrently with distinct streams.
  virtual Allocation decide(const JointState& state, RandomStream& rng) const = 0;
};

// ---- Whittle index policy -------------------------------------------------

/// Index tables for every robot; robots are processed in parallel.
std::vector<IndexTable> compute_index_tables(const JointScenario& scenario);

/// Up to M robots with strictly positive current index, largest first; ties
/// are broken uniformly at random.
Allocation whittle_policy_decide(const std::vector<IndexTable>& tables, const JointState& state,
                                 int operators, RandomStream& rng);

class WhittlePolicy : public AllocationPolicy {
 public:
  WhittlePolicy(std::vector<IndexTable> tables, int operators);
  std::string name() const override { return "whittle"; }
  Allocation decide(const JointState& state, RandomStream& rng) const override;
  const std::vector<IndexTable>& tables() const { return tables_; }

 private:
  std::vector<IndexTable> tables_;
  int operators_;
};

// ---- Exact optimal policy -------------------------------------------------

struct JointSolveOptions {
  std::uint64_t state_cap = 1'000'000;
  double epsilon = 1e-9;
  int max_iterations = 10'000'000;
};

/// Optimal values and greedy allocations over the product state space.
class JointValueTable {
 public:
  JointValueTable() = default;
  explicit JointValueTable(const JointScenario& scenario);

  std::uint64_t size() const { return values_.size(); }
  std::uint64_t encode(const JointState& state) const;
  JointState decode(std::uint64_t index) const;

  double value(const JointState& state) const { return values_[encode(state)]; }
  Allocation best_allocation(const JointState& state) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<std::uint32_t>& best_masks() { return best_masks_; }
  const std::vector<std::uint32_t>& best_masks() const { return best_masks_; }
  int num_robots() const { return static_cast<int>(radix_.size()); }
  int radix(int k) const { return radix_[k]; }
  std::uint64_t stride(int k) const { return stride_[k]; }

 private:
  std::vector<int> radix_;
  std::vector<std::uint64_t> stride_;
  std::vector<double> values_;
  std::vector<std::uint32_t> best_masks_;  // bit k set = robot k teleoperated
};

/// Exact joint solution. Robots never move back to an earlier task, so
/// the product space is swept in blocks of equal task vector, from the
/// most advanced blocks down. Blocks at the same total progress are solved
/// in parallel; each block is solved exactly by policy iteration against the
/// already-final values of the blocks it can move to. Greedy allocations use
/// the lexicographically smallest minimizer. Throws CapExceededError when the
/// product space exceeds options.state_cap.
JointValueTable optimal_joint_policy(const JointScenario& scenario,
                                     const JointSolveOptions& options = {});

/// Serial reference: plain value iteration over the whole product space with
/// sup-norm stopping at epsilon*(1-gamma)/(2*gamma).
JointValueTable optimal_joint_policy_reference(const JointScenario& scenario,
                                               const JointSolveOptions& options = {});

class OptimalPolicy : public AllocationPolicy {
 public:
  explicit OptimalPolicy(JointValueTable table) : table_(std::move(table)) {}
  std::string name() const override { return "optimal"; }
  Allocation decide(const JointState& state, RandomStream&) const override {
    return table_.best_allocation(state);
  }
  const JointValueTable& table() const { return table_; }

 private:
  JointValueTable table_;
};

// ---- Reactive policy ------------------------------------------------------

Allocation reactive_decide(const JointScenario& scenario, const JointState& state, int operators,
                           RandomStream& rng);

class ReactivePolicy : public AllocationPolicy {
 public:
  explicit ReactivePolicy(const JointScenario& scenario) : scenario_(scenario) {}
  std::string name() const override { return "reactive"; }
  Allocation decide(const JointState& state, RandomStream& rng) const override {
    return reactive_decide(scenario_, state, scenario_.operators, rng);
  }

 private:
  JointScenario scenario_;
};

// ---- l-step myopic policy -------------------------------------------------

struct OperationCounter {
  std::uint64_t operations = 0;
};

/// Per-robot all-passive discounted cost V0^k.
std::vector<std::vector<double>> passive_values(const JointScenario& scenario);

/// g(x, a, l) with g(x, a, 0) = V0(x) and, for l >= 1,
/// g(x, a, l) = C(x, a) + gamma * sum_x' T(x'|x,a) min_a' g(x', a', l-1).
/// Literal recursion over joint successors and allocations; reference for
/// MyopicPolicy and operation-count instrumentation.
double myopic_lookahead_reference(const JointScenario& scenario,
                                  const std::vector<std::vector<double>>& v0,
                                  const JointState& state, const Allocation& alloc,
                                  int lookahead, OperationCounter* counter = nullptr);

class MyopicPolicy : public AllocationPolicy {
 public:
  MyopicPolicy(const JointScenario& scenario, int lookahead);
  std::string name() const override { return "myopic" + std::to_string(lookahead_); }
  Allocation decide(const JointState& state, RandomStream& rng) const override;

  /// Same value as myopic_lookahead_reference. The one-step term separates
  /// over robots, so min_a' g(x', a', 1) is the passive sum plus the M most
  /// negative per-robot active gains.
  double lookahead(const JointState& state, const Allocation& alloc,
                   OperationCounter* counter = nullptr) const;

  const std::vector<std::vector<double>>& v0() const { return v0_; }

 private:
  double one_step_min(const JointState& next, OperationCounter* counter) const;

  JointScenario scenario_;
  int lookahead_;
  std::vector<std::vector<double>> v0_;
  // one_step_[k][x][a] = C^k(x,a) + gamma * E[V0^k(x') | x, a]
  std::vector<std::vector<std::array<double, 2>>> one_step_;
};

/// Convenience wrapper used by tests: argmin over feasible allocations with
/// lexicographic tie-break.
Allocation myopic_decide(const JointScenario& scenario, const JointState& state, int lookahead);

// ---- Benefit-maximizing policy --------------------------------------------

/// B_0(x) for every robot and state.
std::vector<std::vector<double>> benefit_tables(const JointScenario& scenario);

/// Up to M robots with the most negative B_0 (< 0), lower robot index first on ties.
Allocation benefit_decide(const JointScenario& scenario,
                          const std::vector<std::vector<double>>& b0_tables,
                          const JointState& state);

class BenefitPolicy : public AllocationPolicy {
 public:
  BenefitPolicy(const JointScenario& scenario, std::vector<std::vector<double>> b0)
      : scenario_(scenario), b0_(std::move(b0)) {}
  std::string name() const override { return "benefit"; }
  Allocation decide(const JointState& state, RandomStream&) const override {
    return benefit_decide(scenario_, b0_, state);
  }

 private:
  JointScenario scenario_;
  std::vector<std::vector<double>> b0_;
};

// ---- Construction by name --------------------------------------------------

/// "whittle", "optimal", "reactive", "myopic1", "myopic2", "benefit".
std::unique_ptr<AllocationPolicy> make_policy(const std::string& name,
                                              const JointScenario& scenario,
                                              const JointSolveOptions& joint = {});

const std::vector<std::string>& policy_names();

}  // namespace rmab
