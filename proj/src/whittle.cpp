#include "rmab/whittle.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <sstream>

#include "rmab/errors.hpp"

namespace rmab {

namespace {

// Q-values closer than this (relative) count as a tie, resolved passive.
constexpr double kTieTolerance = 1e-12;
// Delta N above this puts x in Lambda_y. Only a drop in active time counts:
// when making y passive raises N(x), the ratio is a crossover where the larger
// passive set wins for smaller penalties, which is not an index.
constexpr double kLambdaMembership = 1e-9;
// Candidates within this (relative) of lambda* join the same round.
constexpr double kRoundTie = 1e-9;

bool prefers_active(double q_passive, double q_active) {
  return q_active < q_passive - kTieTolerance * (1.0 + std::abs(q_passive));
}

void fill_q_and_policy(const RobotModel& model, double gamma, double lambda,
                       SingleArmSolution& sol) {
  const int n = model.num_states();
  sol.q_passive.assign(n, 0.0);
  sol.q_active.assign(n, 0.0);
  sol.policy.action_by_state.assign(n, kPassive);
  sol.bellman_residual = 0.0;
  for (StateIndex x = 0; x < n; ++x) {
    double q[2];
    for (Action a : {kPassive, kActive}) {
      double acc = 0.0;
      for (const Successor& s : model.successors(x, a)) acc += s.prob * sol.value[s.state];
      q[a] = model.cost(x, a) + lambda * a + gamma * acc;
    }
    sol.q_passive[x] = q[0];
    sol.q_active[x] = q[1];
    sol.policy.action_by_state[x] = prefers_active(q[0], q[1]) ? kActive : kPassive;
    sol.bellman_residual =
        std::max(sol.bellman_residual, std::abs(sol.value[x] - std::min(q[0], q[1])));
  }
}

}  // namespace

SingleArmSolution solve_single_arm(const RobotModel& model, double gamma, double lambda) {
  SingleArmSolution sol;
  const int n_states = model.num_states();
  sol.value.assign(n_states, 0.0);
  const StateIndex goal = model.goal_index();
  sol.value[goal] = lambda < 0.0 ? lambda / (1.0 - gamma) : 0.0;

  for (int task = model.num_tasks(); task >= 1; --task) {
    const StateIndex z = 2 * (task - 1);
    const StateIndex e = z + 1;
    const double exit_value = sol.value[z + 2];
    const TaskTransition& tr = model.tasks()[task - 1];
    double best_z = std::numeric_limits<double>::infinity();
    double best_e = std::numeric_limits<double>::infinity();
    for (Action az : {kPassive, kActive}) {
      const double pz = az ? tr.p1n0 : tr.p0;
      const double qz = az ? tr.q1n0 : tr.q0;
      const double rz = az ? tr.r1n0() : tr.r0();
      const double cz = model.cost(z, az) + lambda * az + gamma * pz * exit_value;
      for (Action ae : {kPassive, kActive}) {
        const double pe = ae ? tr.p1n1 : 0.0;
        const double te = ae ? tr.q1n1 : 0.0;
        const double se = ae ? tr.r1n1() : 1.0;
        const double ce = model.cost(e, ae) + lambda * ae + gamma * pe * exit_value;
        // [1 - g rz, -g qz; -g te, 1 - g se] [Vz; Ve] = [cz; ce]
        const double a11 = 1.0 - gamma * rz;
        const double a12 = -gamma * qz;
        const double a21 = -gamma * te;
        const double a22 = 1.0 - gamma * se;
        const double det = a11 * a22 - a12 * a21;
        const double vz = (cz * a22 - a12 * ce) / det;
        const double ve = (a11 * ce - a21 * cz) / det;
        best_z = std::min(best_z, vz);
        best_e = std::min(best_e, ve);
      }
    }
    sol.value[z] = best_z;
    sol.value[e] = best_e;
  }
  fill_q_and_policy(model, gamma, lambda, sol);
  sol.iterations = model.num_tasks();
  return sol;
}

SingleArmSolution solve_single_arm_value_iteration(const RobotModel& model, double gamma,
                                                   double lambda,
                                                   const ValueIterationOptions& opts) {
  const int n = model.num_states();
  const double threshold = opts.epsilon * (1.0 - gamma) / (2.0 * gamma);
  std::vector<double> v(n, 0.0), next(n, 0.0);
  SingleArmSolution sol;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    double change = 0.0;
    double scale = 0.0;
    for (StateIndex x = 0; x < n; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (Action a : {kPassive, kActive}) {
        double acc = 0.0;
        for (const Successor& s : model.successors(x, a)) acc += s.prob * v[s.state];
        best = std::min(best, model.cost(x, a) + lambda * a + gamma * acc);
      }
      next[x] = best;
      change = std::max(change, std::abs(best - v[x]));
      scale = std::max(scale, std::abs(best));
    }
    v.swap(next);
    // Below a few ulps of the value scale the change cannot shrink further.
    if (change <= std::max(threshold, 64.0 * DBL_EPSILON * (1.0 + scale))) {
      sol.value = std::move(v);
      sol.iterations = it;
      fill_q_and_policy(model, gamma, lambda, sol);
      return sol;
    }
  }
  throw ConvergenceError("value iteration did not converge");
}

double benefit(const RobotModel& model, double gamma, double lambda, StateIndex state) {
  if (state == model.goal_index()) return lambda;  // Q(G,1) - Q(G,0) = lambda
  const SingleArmSolution sol = solve_single_arm(model, gamma, lambda);
  return sol.q_active[state] - sol.q_passive[state];
}

std::vector<bool> passive_set(const RobotModel& model, double gamma, double lambda) {
  const SingleArmSolution sol = solve_single_arm(model, gamma, lambda);
  std::vector<bool> out(model.num_states());
  for (StateIndex x = 0; x < model.num_states(); ++x) {
    out[x] = sol.policy.action_by_state[x] == kPassive;
  }
  return out;
}

std::pair<double, double> index_bracket(const RobotModel& model, double gamma) {
  const double c = std::max(model.max_step_cost(), 1.0);
  const double half = 2.0 * c / (1.0 - gamma);
  return {-half, half};
}

Eigen::MatrixXd policy_transition_matrix(const RobotModel& model, const ArmPolicy& policy) {
  const int n = model.num_states();
  if (static_cast<int>(policy.action_by_state.size()) != n) {
    throw ConfigError("policy length does not match the state space");
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (StateIndex x = 0; x < n; ++x) {
    for (const Successor& s : model.successors(x, policy.action_by_state[x])) {
      t(x, s.state) += s.prob;
    }
  }
  return t;
}

PolicyEvaluation evaluate_policy(const RobotModel& model, const ArmPolicy& policy, double gamma) {
  const int n = model.num_states();
  const Eigen::MatrixXd t = policy_transition_matrix(model, policy);
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - gamma * t;
  Eigen::VectorXd c(n), pi(n);
  for (StateIndex x = 0; x < n; ++x) {
    c(x) = model.cost(x, policy.action_by_state[x]);
    pi(x) = policy.action_by_state[x];
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  PolicyEvaluation out;
  out.D = lu.solve(c);
  out.N = lu.solve(pi);
  out.residual_D = (m * out.D - c).lpNorm<Eigen::Infinity>();
  out.residual_N = (m * out.N - pi).lpNorm<Eigen::Infinity>();
  return out;
}

namespace {

ArmPolicy policy_from_passive(const std::vector<bool>& passive) {
  ArmPolicy p;
  p.action_by_state.resize(passive.size());
  for (std::size_t x = 0; x < passive.size(); ++x) p.action_by_state[x] = passive[x] ? kPassive : kActive;
  return p;
}

}  // namespace

IndexTable whittle_indices_adaptive_greedy(const RobotModel& model, double gamma) {
  const int n = model.num_states();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  IndexTable table;
  table.w_by_state.assign(n, 0.0);
  std::vector<bool> passive(n, false);
  int absorbed = 0;
  std::vector<double> mu_star(n);

  while (absorbed < n) {
    const PolicyEvaluation base = evaluate_policy(model, policy_from_passive(passive), gamma);

#pragma omp parallel for schedule(dynamic)
    for (StateIndex y = 0; y < n; ++y) {
      mu_star[y] = kInf;
      if (passive[y]) continue;
      std::vector<bool> with_y = passive;
      with_y[y] = true;
      const PolicyEvaluation cand = evaluate_policy(model, policy_from_passive(with_y), gamma);
      double best = kInf;
      for (StateIndex x = 0; x < n; ++x) {
        const double dn = base.N(x) - cand.N(x);
        if (dn <= kLambdaMembership) continue;
        best = std::min(best, -(base.D(x) - cand.D(x)) / dn);
      }
      mu_star[y] = best;
    }

    double lambda_star = kInf;
    for (StateIndex y = 0; y < n; ++y) {
      if (!passive[y]) lambda_star = std::min(lambda_star, mu_star[y]);
    }
    if (!std::isfinite(lambda_star)) {
      throw NumericDegeneracyError("adaptive greedy: no remaining state changes the active count");
    }
    IndexRound round{lambda_star, {}};
    const double tol = kRoundTie * (1.0 + std::abs(lambda_star));
    for (StateIndex y = 0; y < n; ++y) {
      if (!passive[y] && mu_star[y] <= lambda_star + tol) round.states.push_back(y);
    }
    for (StateIndex y : round.states) {
      table.w_by_state[y] = lambda_star;
      passive[y] = true;
      ++absorbed;
    }
    if (!table.rounds.empty() && lambda_star < table.rounds.back().lambda - tol) {
      table.monotone = false;
      std::ostringstream os;
      os << "round penalties decrease (" << table.rounds.back().lambda << " -> " << lambda_star
         << "); arm may not be indexable";
      table.warning = os.str();
    }
    table.rounds.push_back(std::move(round));
  }
  return table;
}

double whittle_index_bisection(const RobotModel& model, double gamma, StateIndex state,
                               const BisectionOptions& opts) {
  auto [lo, hi] = index_bracket(model, gamma);
  auto is_passive = [&](double lambda) {
    return solve_single_arm(model, gamma, lambda).policy.action_by_state.at(state) == kPassive;
  };
  if (is_passive(lo) || !is_passive(hi)) {
    throw NonIndexableError("state " + std::to_string(state) +
                            " is not active below and passive above the index bracket");
  }
  while (hi - lo > opts.width) {
    const double mid = 0.5 * (lo + hi);
    if (is_passive(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace rmab
