#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmab/robot_model.hpp"

namespace rmab {

/// One action per state of the canonical enumeration.
struct ArmPolicy {
  std::vector<Action> action_by_state;

  static ArmPolicy all(int num_states, Action a) {
    return ArmPolicy{std::vector<Action>(num_states, a)};
  }
  friend bool operator==(const ArmPolicy&, const ArmPolicy&) = default;
};

struct SingleArmSolution {
  std::vector<double> value;
  std::vector<double> q_passive;
  std::vector<double> q_active;
  ArmPolicy policy;
  /// max_x |V(x) - min_a Q(x,a)|
  double bellman_residual = 0.0;
  int iterations = 0;
};

struct ValueIterationOptions {
  double epsilon = 1e-9;
  int max_iterations = 5'000'000;
};

/// Optimal solution of the single-arm problem with per-step cost C(x,a) + lambda*a.
///
/// Tasks only move forward, so the arm is solved task by task from the last
/// one: each (n,0),(n,1) pair is a two-state MDP whose exit value is already
/// known. The pair is solved exactly by evaluating its four deterministic
/// policies and taking the pointwise minimum. Ties between Q-values resolve to
/// the passive action.
SingleArmSolution solve_single_arm(const RobotModel& model, double gamma, double lambda);

/// Plain value iteration on the full state space, stopping once the sup-norm
/// change is at most epsilon*(1-gamma)/(2*gamma). Serial reference for
/// solve_single_arm.
SingleArmSolution solve_single_arm_value_iteration(const RobotModel& model, double gamma,
                                                   double lambda,
                                                   const ValueIterationOptions& opts = {});

/// Q_lambda(x,1) - Q_lambda(x,0). Exactly lambda at Goal.
double benefit(const RobotModel& model, double gamma, double lambda, StateIndex state);

/// States where the lambda-optimal policy is passive.
std::vector<bool> passive_set(const RobotModel& model, double gamma, double lambda);

/// Symmetric penalty range outside which the optimal policy is constant:
/// [-2*C/(1-gamma), 2*C/(1-gamma)], C the largest per-step cost (at least 1).
std::pair<double, double> index_bracket(const RobotModel& model, double gamma);

Eigen::MatrixXd policy_transition_matrix(const RobotModel& model, const ArmPolicy& policy);

struct PolicyEvaluation {
  Eigen::VectorXd D;  // discounted cost from each start state
  Eigen::VectorXd N;  // discounted count of active actions
  double residual_D = 0.0;
  double residual_N = 0.0;
};

/// Solves (I - gamma*T_pi) D = C_pi and (I - gamma*T_pi) N = pi with one
/// factorization.
PolicyEvaluation evaluate_policy(const RobotModel& model, const ArmPolicy& policy, double gamma);

struct IndexRound {
  double lambda;
  std::vector<StateIndex> states;
};

struct IndexTable {
  std::vector<double> w_by_state;
  std::vector<IndexRound> rounds;
  /// False when the round penalties decreased at some point.
  bool monotone = true;
  std::string warning;
};

/// Whittle indices by the adaptive greedy scheme: grow the passive set one
/// round at a time, each round absorbing every state that attains the
/// smallest crossover penalty.
IndexTable whittle_indices_adaptive_greedy(const RobotModel& model, double gamma);

struct BisectionOptions {
  double width = 1e-8;
};

/// Whittle index of one state by bisection on "state is passive at lambda".
double whittle_index_bisection(const RobotModel& model, double gamma, StateIndex state,
                               const BisectionOptions& opts = {});

}  // namespace rmab
