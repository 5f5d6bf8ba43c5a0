#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rmab {

/// Operating mode: 0 = autonomous (passive), 1 = teleoperated (active).
using Action = int;
inline constexpr Action kPassive = 0;
inline constexpr Action kActive = 1;

/// Position of a state in the canonical enumeration
/// (1,0),(1,1),(2,0),...,(N,1),Goal.
using StateIndex = int;

/// A robot's (task, internal flag) pair, or the absorbing Goal.
struct OperatingState {
  int task = 1;    // 1-based; ignored for Goal
  int fault = 0;   // 0 normal, 1 fault
  bool goal = false;

  static OperatingState Task(int n, int s) { return {n, s, false}; }
  static OperatingState Goal() { return {0, 0, true}; }

  friend bool operator==(const OperatingState&, const OperatingState&) = default;
};

std::string to_string(const OperatingState& x);

enum class TaskType { general, type1, type2 };

std::string to_string(TaskType t);
TaskType task_type_from_string(const std::string& s);

/// Per-task transition probabilities. Fault-state autonomous dynamics are a
/// self-loop and are not stored; stay probabilities are always derived.
struct TaskTransition {
  double p0 = 0.0;    // success, autonomous, normal
  double q0 = 0.0;    // normal -> fault, autonomous
  double p1n0 = 0.0;  // success, teleoperated, normal
  double q1n0 = 0.0;  // normal -> fault, teleoperated
  double p1n1 = 0.0;  // success, teleoperated, fault
  double q1n1 = 0.0;  // fault -> normal, teleoperated
  TaskType type = TaskType::general;

  double r0() const { return 1.0 - p0 - q0; }
  double r1n0() const { return 1.0 - p1n0 - q1n0; }
  double r1n1() const { return 1.0 - p1n1 - q1n1; }
};

struct TaskCost {
  double rho = 0.0;  // normal state
  double phi = 0.0;  // fault state
};

struct Successor {
  StateIndex state;
  double prob;
};

/// Support of a one-step transition; at most three states.
struct SuccessorList {
  std::array<Successor, 3> items{};
  int size = 0;

  void push(StateIndex s, double p) {
    if (p > 0.0) items[size++] = {s, p};
  }
  const Successor* begin() const { return items.data(); }
  const Successor* end() const { return items.data() + size; }
};

struct Violation {
  int task;  // 1-based, 0 for model-level violations
  std::string message;
};

class RobotModel {
 public:
  RobotModel() = default;
  RobotModel(std::vector<TaskTransition> tasks, std::vector<TaskCost> costs,
             double teleop_surcharge);

  int num_tasks() const { return static_cast<int>(tasks_.size()); }
  int num_states() const { return 2 * num_tasks() + 1; }
  StateIndex goal_index() const { return 2 * num_tasks(); }
  StateIndex start_index() const { return 0; }

  const std::vector<TaskTransition>& tasks() const { return tasks_; }
  const std::vector<TaskCost>& costs() const { return costs_; }
  double teleop_surcharge() const { return teleop_surcharge_; }

  StateIndex index_of(const OperatingState& x) const;
  OperatingState state_at(StateIndex i) const;
  bool is_fault(StateIndex i) const { return i != goal_index() && (i % 2) == 1; }

  /// Successor distribution in the order success, toggle, stay.
  SuccessorList successors(StateIndex i, Action a) const;
  double cost(StateIndex i, Action a) const;

  /// Largest per-step cost over all states and both actions.
  double max_step_cost() const;

 private:
  void check_index(StateIndex i) const;

  std::vector<TaskTransition> tasks_;
  std::vector<TaskCost> costs_;
  double teleop_surcharge_ = 0.0;
};

std::vector<std::pair<OperatingState, double>> transition_distribution(
    const RobotModel& model, const OperatingState& state, Action action);

double step_cost(const RobotModel& model, const OperatingState& state, Action action);

/// Every violated structural assumption; empty means the model is valid.
std::vector<Violation> validate(const RobotModel& model);

std::vector<OperatingState> enumerate_states(const RobotModel& model);

struct JointScenario {
  std::vector<RobotModel> robots;
  int operators = 1;
  double gamma = 0.99;
  std::uint64_t seed = 0;

  int num_robots() const { return static_cast<int>(robots.size()); }
  double max_step_cost() const;
};

std::vector<Violation> validate(const JointScenario& scenario);

}  // namespace rmab
