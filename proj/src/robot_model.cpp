#include "rmab/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rmab/errors.hpp"

namespace rmab {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0 && std::isfinite(v); }

// Rows may overshoot 1 by rounding when built as 1 - r.
constexpr double kRowSlack = 1e-12;

}  // namespace

std::string to_string(const OperatingState& x) {
  if (x.goal) return "(G,0)";
  std::ostringstream os;
  os << '(' << x.task << ',' << x.fault << ')';
  return os.str();
}

std::string to_string(TaskType t) {
  switch (t) {
    case TaskType::type1:
      return "type1";
    case TaskType::type2:
      return "type2";
    case TaskType::general:
      break;
  }
  return "general";
}

TaskType task_type_from_string(const std::string& s) {
  if (s == "type1") return TaskType::type1;
  if (s == "type2") return TaskType::type2;
  if (s == "general") return TaskType::general;
  throw ConfigError("unknown task type '" + s + "'");
}

RobotModel::RobotModel(std::vector<TaskTransition> tasks, std::vector<TaskCost> costs,
                       double teleop_surcharge)
    : tasks_(std::move(tasks)), costs_(std::move(costs)), teleop_surcharge_(teleop_surcharge) {}

void RobotModel::check_index(StateIndex i) const {
  if (i < 0 || i > goal_index()) {
    throw InvalidStateError("state index " + std::to_string(i) + " outside [0, " +
                            std::to_string(goal_index()) + "]");
  }
}

StateIndex RobotModel::index_of(const OperatingState& x) const {
  if (x.goal) return goal_index();
  if (x.task < 1 || x.task > num_tasks() || (x.fault != 0 && x.fault != 1)) {
    throw InvalidStateError("state " + to_string(x) + " invalid for a robot with " +
                            std::to_string(num_tasks()) + " tasks");
  }
  return 2 * (x.task - 1) + x.fault;
}

OperatingState RobotModel::state_at(StateIndex i) const {
  check_index(i);
  if (i == goal_index()) return OperatingState::Goal();
  return OperatingState::Task(i / 2 + 1, i % 2);
}

SuccessorList RobotModel::successors(StateIndex i, Action a) const {
  check_index(i);
  SuccessorList out;
  if (i == goal_index()) {
    out.push(i, 1.0);
    return out;
  }
  const TaskTransition& tr = tasks_[i / 2];
  // Normal state of the next task; for the last task this is Goal.
  const StateIndex next = 2 * (i / 2 + 1);
  const bool fault = (i % 2) == 1;
  if (!fault) {
    const StateIndex toggled = i + 1;
    if (a == kPassive) {
      out.push(next, tr.p0);
      out.push(toggled, tr.q0);
      out.push(i, tr.r0());
    } else {
      out.push(next, tr.p1n0);
      out.push(toggled, tr.q1n0);
      out.push(i, tr.r1n0());
    }
  } else {
    if (a == kPassive) {
      out.push(i, 1.0);
    } else {
      out.push(next, tr.p1n1);
      out.push(i - 1, tr.q1n1);
      out.push(i, tr.r1n1());
    }
  }
  return out;
}

double RobotModel::cost(StateIndex i, Action a) const {
  check_index(i);
  if (i == goal_index()) return 0.0;
  const TaskCost& c = costs_[i / 2];
  const double base = (i % 2) == 0 ? c.rho : c.phi;
  return a == kActive ? base + teleop_surcharge_ : base;
}

double RobotModel::max_step_cost() const {
  double m = 0.0;
  for (const TaskCost& c : costs_) m = std::max({m, c.rho, c.phi});
  return m + teleop_surcharge_;
}

std::vector<std::pair<OperatingState, double>> transition_distribution(
    const RobotModel& model, const OperatingState& state, Action action) {
  std::vector<std::pair<OperatingState, double>> out;
  for (const Successor& s : model.successors(model.index_of(state), action)) {
    out.emplace_back(model.state_at(s.state), s.prob);
  }
  return out;
}

double step_cost(const RobotModel& model, const OperatingState& state, Action action) {
  return model.cost(model.index_of(state), action);
}

std::vector<Violation> validate(const RobotModel& model) {
  std::vector<Violation> out;
  const auto& tasks = model.tasks();
  const auto& costs = model.costs();
  if (tasks.empty()) out.push_back({0, "model has no tasks"});
  if (tasks.size() != costs.size()) {
    out.push_back({0, "length mismatch: " + std::to_string(tasks.size()) + " tasks, " +
                          std::to_string(costs.size()) + " costs"});
  }
  if (!(model.teleop_surcharge() >= 0.0)) out.push_back({0, "negative teleoperation surcharge"});
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const int n = static_cast<int>(k) + 1;
    const std::string at = " at task " + std::to_string(n);
    const TaskTransition& t = tasks[k];
    for (double v : {t.p0, t.q0, t.p1n0, t.q1n0, t.p1n1, t.q1n1}) {
      if (!in_unit(v)) {
        out.push_back({n, "probability out of [0,1]" + at});
        break;
      }
    }
    if (t.p0 + t.q0 > 1.0 + kRowSlack || t.p1n0 + t.q1n0 > 1.0 + kRowSlack ||
        t.p1n1 + t.q1n1 > 1.0 + kRowSlack) {
      out.push_back({n, "row sum" + at});
    }
    if (!(t.p1n1 + t.q1n1 > 0.0)) out.push_back({n, "A2" + at});
  }
  for (std::size_t k = 0; k < costs.size(); ++k) {
    if (!(costs[k].rho >= 0.0) || !(costs[k].phi >= 0.0)) {
      out.push_back({static_cast<int>(k) + 1, "negative cost at task " + std::to_string(k + 1)});
    }
  }
  return out;
}

std::vector<OperatingState> enumerate_states(const RobotModel& model) {
  std::vector<OperatingState> out;
  out.reserve(model.num_states());
  for (int n = 1; n <= model.num_tasks(); ++n) {
    out.push_back(OperatingState::Task(n, 0));
    out.push_back(OperatingState::Task(n, 1));
  }
  out.push_back(OperatingState::Goal());
  return out;
}

double JointScenario::max_step_cost() const {
  double m = 0.0;
  for (const RobotModel& r : robots) m = std::max(m, r.max_step_cost());
  return m;
}

std::vector<Violation> validate(const JointScenario& scenario) {
  std::vector<Violation> out;
  if (scenario.robots.empty()) out.push_back({0, "scenario has no robots"});
  if (scenario.operators < 1 || scenario.operators > scenario.num_robots()) {
    out.push_back({0, "operators must satisfy 1 <= M <= K"});
  }
  if (!(scenario.gamma > 0.0 && scenario.gamma < 1.0)) {
    out.push_back({0, "gamma must lie in (0,1)"});
  }
  for (std::size_t k = 0; k < scenario.robots.size(); ++k) {
    for (Violation v : validate(scenario.robots[k])) {
      v.message = "robot " + std::to_string(k + 1) + ": " + v.message;
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace rmab
