#include "rmab/policies.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "rmab/errors.hpp"

namespace rmab {

namespace {

// Relative tolerance for treating two joint Q-values as tied.
constexpr double kJointTie = 1e-10;

bool strictly_less(double a, double b) { return a < b - kJointTie * (1.0 + std::abs(b)); }

std::vector<int> free_robots(const JointScenario& s, const JointState& x) {
  std::vector<int> out;
  for (int k = 0; k < s.num_robots(); ++k) {
    if (x.per_robot[k] != s.robots[k].goal_index()) out.push_back(k);
  }
  return out;
}

// Bitmasks over robots with at most `budget` bits among `free`, in
// lexicographic order of the allocation vector (robot 0 compared first).
std::vector<std::uint32_t> allocation_masks(const std::vector<int>& free, int budget) {
  std::vector<std::uint32_t> out;
  auto rec = [&](auto&& self, std::size_t pos, std::uint32_t mask, int used) -> void {
    if (pos == free.size()) {
      out.push_back(mask);
      return;
    }
    self(self, pos + 1, mask, used);
    if (used < budget) self(self, pos + 1, mask | (1u << free[pos]), used + 1);
  };
  rec(rec, 0, 0u, 0);
  return out;
}

Allocation from_mask(std::uint32_t mask, int k) {
  Allocation a;
  a.a.resize(k);
  for (int i = 0; i < k; ++i) a.a[i] = (mask >> i) & 1u;
  return a;
}

std::uint32_t to_mask(const Allocation& a) {
  std::uint32_t m = 0;
  for (std::size_t i = 0; i < a.a.size(); ++i) {
    if (a.a[i]) m |= 1u << i;
  }
  return m;
}

double joint_cost(const JointScenario& s, const JointState& x, std::uint32_t mask) {
  double c = 0.0;
  for (int k = 0; k < s.num_robots(); ++k) c += s.robots[k].cost(x.per_robot[k], (mask >> k) & 1u);
  return c;
}

// Calls f(prob, successor-per-robot) for every joint successor.
template <class F>
void for_each_joint_successor(const std::vector<SuccessorList>& lists, F&& f) {
  const std::size_t k = lists.size();
  std::vector<StateIndex> pick(k);
  auto rec = [&](auto&& self, std::size_t robot, double prob) -> void {
    if (robot == k) {
      f(prob, pick);
      return;
    }
    for (const Successor& s : lists[robot]) {
      pick[robot] = s.state;
      self(self, robot + 1, prob * s.prob);
    }
  };
  rec(rec, 0, 1.0);
}

std::vector<SuccessorList> successor_lists(const JointScenario& s, const JointState& x,
                                           std::uint32_t mask) {
  std::vector<SuccessorList> lists(s.num_robots());
  for (int k = 0; k < s.num_robots(); ++k) {
    lists[k] = s.robots[k].successors(x.per_robot[k], (mask >> k) & 1u);
  }
  return lists;
}

void check_robot_limit(const JointScenario& s) {
  if (s.num_robots() > 31) throw ConfigError("at most 31 robots are supported");
}

}  // namespace

JointState JointState::start(const JointScenario& scenario) {
  JointState x;
  x.per_robot.assign(scenario.num_robots(), 0);
  for (int k = 0; k < scenario.num_robots(); ++k) x.per_robot[k] = scenario.robots[k].start_index();
  return x;
}

bool JointState::all_goal(const JointScenario& scenario) const {
  for (int k = 0; k < scenario.num_robots(); ++k) {
    if (per_robot[k] != scenario.robots[k].goal_index()) return false;
  }
  return true;
}

int Allocation::count() const { return std::accumulate(a.begin(), a.end(), 0); }

bool feasible(const JointScenario& scenario, const JointState& state, const Allocation& alloc) {
  if (static_cast<int>(alloc.a.size()) != scenario.num_robots()) return false;
  if (alloc.count() > scenario.operators) return false;
  for (int k = 0; k < scenario.num_robots(); ++k) {
    if (alloc.a[k] != 0 && alloc.a[k] != 1) return false;
    if (alloc.a[k] && state.per_robot[k] == scenario.robots[k].goal_index()) return false;
  }
  return true;
}

std::vector<Allocation> feasible_allocations(const JointScenario& scenario,
                                             const JointState& state) {
  check_robot_limit(scenario);
  std::vector<Allocation> out;
  for (std::uint32_t m : allocation_masks(free_robots(scenario, state), scenario.operators)) {
    out.push_back(from_mask(m, scenario.num_robots()));
  }
  return out;
}

// ---- Whittle -------------------------------------------------------------

std::vector<IndexTable> compute_index_tables(const JointScenario& scenario) {
  const int k = scenario.num_robots();
  std::vector<IndexTable> tables(k);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < k; ++i) {
    tables[i] = whittle_indices_adaptive_greedy(scenario.robots[i], scenario.gamma);
  }
  return tables;
}

Allocation whittle_policy_decide(const std::vector<IndexTable>& tables, const JointState& state,
                                 int operators, RandomStream& rng) {
  const int k = static_cast<int>(state.per_robot.size());
  if (static_cast<int>(tables.size()) != k) {
    throw ConfigError("index tables do not cover every robot");
  }
  struct Candidate {
    double w;
    std::uint64_t key;
    int robot;
  };
  std::vector<Candidate> cands;
  for (int i = 0; i < k; ++i) {
    const StateIndex x = state.per_robot[i];
    if (x < 0 || x >= static_cast<int>(tables[i].w_by_state.size())) {
      throw ConfigError("index table of robot " + std::to_string(i + 1) + " has no entry for state " +
                        std::to_string(x));
    }
    const double w = tables[i].w_by_state[x];
    if (w > 0.0) cands.push_back({w, rng.next_u64(), i});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.w != b.w) return a.w > b.w;
    return a.key < b.key;
  });
  Allocation out;
  out.a.assign(k, 0);
  for (int i = 0; i < std::min<int>(operators, static_cast<int>(cands.size())); ++i) {
    out.a[cands[i].robot] = 1;
  }
  return out;
}

WhittlePolicy::WhittlePolicy(std::vector<IndexTable> tables, int operators)
    : tables_(std::move(tables)), operators_(operators) {}

Allocation WhittlePolicy::decide(const JointState& state, RandomStream& rng) const {
  return whittle_policy_decide(tables_, state, operators_, rng);
}

// ---- Optimal ---------------------------------------------------------------

JointValueTable::JointValueTable(const JointScenario& scenario) {
  const int k = scenario.num_robots();
  radix_.resize(k);
  stride_.resize(k);
  std::uint64_t stride = 1;
  for (int i = k - 1; i >= 0; --i) {
    radix_[i] = scenario.robots[i].num_states();
    stride_[i] = stride;
    stride *= static_cast<std::uint64_t>(radix_[i]);
  }
}

std::uint64_t JointValueTable::encode(const JointState& state) const {
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < radix_.size(); ++i) {
    const StateIndex x = state.per_robot.at(i);
    if (x < 0 || x >= radix_[i]) throw InvalidStateError("joint state out of range");
    idx += stride_[i] * static_cast<std::uint64_t>(x);
  }
  return idx;
}

JointState JointValueTable::decode(std::uint64_t index) const {
  JointState x;
  x.per_robot.resize(radix_.size());
  for (std::size_t i = 0; i < radix_.size(); ++i) {
    x.per_robot[i] = static_cast<StateIndex>((index / stride_[i]) % radix_[i]);
  }
  return x;
}

Allocation JointValueTable::best_allocation(const JointState& state) const {
  return from_mask(best_masks_[encode(state)], num_robots());
}

namespace {

JointValueTable prepare_table(const JointScenario& scenario, const JointSolveOptions& options) {
  check_robot_limit(scenario);
  long double total = 1.0L;
  for (const RobotModel& r : scenario.robots) total *= r.num_states();
  if (total > static_cast<long double>(options.state_cap)) {
    throw CapExceededError("joint state space has " + std::to_string(static_cast<double>(total)) +
                           " states, above the cap of " + std::to_string(options.state_cap) +
                           "; use the Whittle index policy");
  }
  JointValueTable table(scenario);
  const auto n = static_cast<std::uint64_t>(total);
  table.values().assign(n, 0.0);
  table.best_masks().assign(n, 0u);
  return table;
}

// Solves one block of joint states sharing the task vector `tasks` (Goal is
// task N_k). Values of every state reachable outside the block are final.
void solve_block(const JointScenario& s, const std::vector<int>& tasks, JointValueTable& table) {
  const int k = s.num_robots();
  const double gamma = s.gamma;
  std::vector<int> free;
  for (int i = 0; i < k; ++i) {
    if (tasks[i] < s.robots[i].num_tasks()) free.push_back(i);
  }
  const int nb = 1 << free.size();
  const std::vector<std::uint32_t> masks = allocation_masks(free, s.operators);
  const int na = static_cast<int>(masks.size());

  std::vector<JointState> states(nb);
  std::vector<std::uint64_t> global(nb);
  for (int f = 0; f < nb; ++f) {
    JointState x;
    x.per_robot.resize(k);
    for (int i = 0; i < k; ++i) x.per_robot[i] = 2 * tasks[i];  // Goal index is 2N
    for (std::size_t j = 0; j < free.size(); ++j) x.per_robot[free[j]] += (f >> j) & 1;
    global[f] = table.encode(x);
    states[f] = std::move(x);
  }
  // Local block index of a joint state that stays in the block, else -1.
  auto local_index = [&](const std::vector<StateIndex>& y) {
    int f = 0;
    for (int i = 0; i < k; ++i) {
      if (y[i] / 2 != tasks[i] && !(tasks[i] == s.robots[i].num_tasks())) return -1;
    }
    for (std::size_t j = 0; j < free.size(); ++j) f |= (y[free[j]] % 2) << j;
    return f;
  };

  struct Entry {
    int local;
    double prob;
  };
  std::vector<double> fixed(static_cast<std::size_t>(nb) * na);
  std::vector<std::vector<Entry>> inside(static_cast<std::size_t>(nb) * na);
  const std::vector<double>& values = table.values();
  for (int f = 0; f < nb; ++f) {
    for (int a = 0; a < na; ++a) {
      double acc = 0.0;
      std::vector<Entry>& in = inside[f * na + a];
      for_each_joint_successor(successor_lists(s, states[f], masks[a]),
                               [&](double p, const std::vector<StateIndex>& y) {
                                 const int l = local_index(y);
                                 if (l >= 0) {
                                   in.push_back({l, p});
                                 } else {
                                   std::uint64_t idx = 0;
                                   for (int i = 0; i < k; ++i) idx += table.stride(i) * y[i];
                                   acc += p * values[idx];
                                 }
                               });
      fixed[f * na + a] = joint_cost(s, states[f], masks[a]) + gamma * acc;
    }
  }

  auto q_value = [&](int f, int a, const Eigen::VectorXd& v) {
    double acc = 0.0;
    for (const Entry& e : inside[f * na + a]) acc += e.prob * v(e.local);
    return fixed[f * na + a] + gamma * acc;
  };

  std::vector<int> policy(nb, 0);
  Eigen::VectorXd v(nb);
  for (int iter = 0;; ++iter) {
    if (iter > 10'000) throw ConvergenceError("block policy iteration did not converge");
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(nb, nb);
    Eigen::VectorXd rhs(nb);
    for (int f = 0; f < nb; ++f) {
      rhs(f) = fixed[f * na + policy[f]];
      for (const Entry& e : inside[f * na + policy[f]]) m(f, e.local) -= gamma * e.prob;
    }
    v = m.partialPivLu().solve(rhs);
    bool changed = false;
    for (int f = 0; f < nb; ++f) {
      double best = q_value(f, policy[f], v);
      for (int a = 0; a < na; ++a) {
        const double q = q_value(f, a, v);
        if (strictly_less(q, best)) {
          best = q;
          policy[f] = a;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }

  std::vector<double>& out_values = table.values();
  std::vector<std::uint32_t>& out_masks = table.best_masks();
  for (int f = 0; f < nb; ++f) {
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < na; ++a) best = std::min(best, q_value(f, a, v));
    int chosen = 0;
    while (strictly_less(best, q_value(f, chosen, v))) ++chosen;
    out_values[global[f]] = v(f);
    out_masks[global[f]] = masks[chosen];
  }
}

}  // namespace

JointValueTable optimal_joint_policy(const JointScenario& scenario,
                                     const JointSolveOptions& options) {
  JointValueTable table = prepare_table(scenario, options);
  const int k = scenario.num_robots();

  // Group task vectors by total progress.
  std::vector<std::vector<std::vector<int>>> levels;
  std::vector<int> tasks(k, 0);
  auto rec = [&](auto&& self, int robot, int level) -> void {
    if (robot == k) {
      if (static_cast<int>(levels.size()) <= level) levels.resize(level + 1);
      levels[level].push_back(tasks);
      return;
    }
    for (int t = 0; t <= scenario.robots[robot].num_tasks(); ++t) {
      tasks[robot] = t;
      self(self, robot + 1, level + t);
    }
  };
  rec(rec, 0, 0);

  for (int level = static_cast<int>(levels.size()) - 1; level >= 0; --level) {
    const auto& blocks = levels[level];
    const int nblocks = static_cast<int>(blocks.size());
#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < nblocks; ++b) solve_block(scenario, blocks[b], table);
  }
  return table;
}

JointValueTable optimal_joint_policy_reference(const JointScenario& scenario,
                                               const JointSolveOptions& options) {
  JointValueTable table = prepare_table(scenario, options);
  const std::uint64_t n = table.size();
  const double gamma = scenario.gamma;
  const double threshold = options.epsilon * (1.0 - gamma) / (2.0 * gamma);

  // Cache per-state allocation lists.
  std::vector<std::vector<std::uint32_t>> masks(n);
  std::vector<JointState> states(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    states[i] = table.decode(i);
    masks[i] = allocation_masks(free_robots(scenario, states[i]), scenario.operators);
  }
  auto q_value = [&](std::uint64_t i, std::uint32_t mask, const std::vector<double>& v) {
    double acc = 0.0;
    for_each_joint_successor(successor_lists(scenario, states[i], mask),
                             [&](double p, const std::vector<StateIndex>& y) {
                               std::uint64_t idx = 0;
                               for (int r = 0; r < table.num_robots(); ++r) idx += table.stride(r) * y[r];
                               acc += p * v[idx];
                             });
    return joint_cost(scenario, states[i], mask) + gamma * acc;
  };

  std::vector<double> v(n, 0.0), next(n, 0.0);
  for (int it = 0;; ++it) {
    if (it >= options.max_iterations) throw ConvergenceError("joint value iteration did not converge");
    double change = 0.0, scale = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::uint32_t m : masks[i]) best = std::min(best, q_value(i, m, v));
      next[i] = best;
      change = std::max(change, std::abs(best - v[i]));
      scale = std::max(scale, std::abs(best));
    }
    v.swap(next);
    if (change <= std::max(threshold, 64.0 * DBL_EPSILON * (1.0 + scale))) break;
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t m : masks[i]) best = std::min(best, q_value(i, m, v));
    std::size_t chosen = 0;
    while (strictly_less(best, q_value(i, masks[i][chosen], v))) ++chosen;
    table.best_masks()[i] = masks[i][chosen];
  }
  table.values() = std::move(v);
  return table;
}

// ---- Reactive --------------------------------------------------------------

Allocation reactive_decide(const JointScenario& scenario, const JointState& state, int operators,
                           RandomStream& rng) {
  const int k = scenario.num_robots();
  std::vector<int> faults;
  for (int i = 0; i < k; ++i) {
    if (scenario.robots[i].is_fault(state.per_robot[i])) faults.push_back(i);
  }
  Allocation out;
  out.a.assign(k, 0);
  const int take = std::min<int>(operators, static_cast<int>(faults.size()));
  if (static_cast<int>(faults.size()) > operators) {
    // Partial Fisher-Yates: the first `take` entries become a uniform subset.
    for (int i = 0; i < take; ++i) {
      const auto j = i + static_cast<int>(rng.below(faults.size() - i));
      std::swap(faults[i], faults[j]);
    }
  }
  for (int i = 0; i < take; ++i) out.a[faults[i]] = 1;
  return out;
}

// ---- Myopic ---------------------------------------------------------------

std::vector<std::vector<double>> passive_values(const JointScenario& scenario) {
  std::vector<std::vector<double>> out;
  for (const RobotModel& r : scenario.robots) {
    const PolicyEvaluation ev =
        evaluate_policy(r, ArmPolicy::all(r.num_states(), kPassive), scenario.gamma);
    out.emplace_back(ev.D.data(), ev.D.data() + ev.D.size());
  }
  return out;
}

double myopic_lookahead_reference(const JointScenario& scenario,
                                  const std::vector<std::vector<double>>& v0,
                                  const JointState& state, const Allocation& alloc, int lookahead,
                                  OperationCounter* counter) {
  const int k = scenario.num_robots();
  if (lookahead <= 0) {
    double total = 0.0;
    for (int i = 0; i < k; ++i) total += v0[i][state.per_robot[i]];
    return total;
  }
  const std::uint32_t mask = to_mask(alloc);
  double acc = 0.0;
  JointState next;
  for_each_joint_successor(
      successor_lists(scenario, state, mask), [&](double p, const std::vector<StateIndex>& y) {
        next.per_robot = y;
        double best = std::numeric_limits<double>::infinity();
        for (const Allocation& a2 : feasible_allocations(scenario, next)) {
          if (counter) ++counter->operations;
          best = std::min(best,
                          myopic_lookahead_reference(scenario, v0, next, a2, lookahead - 1, counter));
        }
        acc += p * best;
      });
  return joint_cost(scenario, state, mask) + scenario.gamma * acc;
}

MyopicPolicy::MyopicPolicy(const JointScenario& scenario, int lookahead)
    : scenario_(scenario), lookahead_(lookahead), v0_(passive_values(scenario)) {
  if (lookahead != 1 && lookahead != 2) throw ConfigError("myopic look-ahead must be 1 or 2");
  check_robot_limit(scenario);
  one_step_.resize(scenario.num_robots());
  for (int i = 0; i < scenario.num_robots(); ++i) {
    const RobotModel& r = scenario.robots[i];
    one_step_[i].resize(r.num_states());
    for (StateIndex x = 0; x < r.num_states(); ++x) {
      for (Action a : {kPassive, kActive}) {
        double acc = 0.0;
        for (const Successor& s : r.successors(x, a)) acc += s.prob * v0_[i][s.state];
        one_step_[i][x][a] = r.cost(x, a) + scenario.gamma * acc;
      }
    }
  }
}

double MyopicPolicy::one_step_min(const JointState& next, OperationCounter* counter) const {
  const int m = scenario_.operators;
  double total = 0.0;
  // The m most negative active gains, ascending.
  double gains[32];
  int used = 0;
  for (int i = 0; i < scenario_.num_robots(); ++i) {
    const auto& row = one_step_[i][next.per_robot[i]];
    total += row[0];
    const double g = row[1] - row[0];
    if (counter) ++counter->operations;
    if (g >= 0.0 || m == 0) continue;
    if (used < m) {
      gains[used++] = g;
    } else if (g < gains[used - 1]) {
      gains[used - 1] = g;
    } else {
      continue;
    }
    for (int j = used - 1; j > 0 && gains[j] < gains[j - 1]; --j) std::swap(gains[j], gains[j - 1]);
  }
  for (int j = 0; j < used; ++j) total += gains[j];
  return total;
}

double MyopicPolicy::lookahead(const JointState& state, const Allocation& alloc,
                               OperationCounter* counter) const {
  const int k = scenario_.num_robots();
  if (lookahead_ == 1) {
    double total = 0.0;
    for (int i = 0; i < k; ++i) total += one_step_[i][state.per_robot[i]][alloc.a[i]];
    if (counter) counter->operations += k;
    return total;
  }
  const std::uint32_t mask = to_mask(alloc);
  double acc = 0.0;
  JointState next;
  for_each_joint_successor(successor_lists(scenario_, state, mask),
                           [&](double p, const std::vector<StateIndex>& y) {
                             next.per_robot = y;
                             acc += p * one_step_min(next, counter);
                           });
  return joint_cost(scenario_, state, mask) + scenario_.gamma * acc;
}

Allocation MyopicPolicy::decide(const JointState& state, RandomStream&) const {
  const std::vector<Allocation> allocs = feasible_allocations(scenario_, state);
  std::size_t best_i = 0;
  double best = lookahead(state, allocs[0]);
  for (std::size_t i = 1; i < allocs.size(); ++i) {
    const double g = lookahead(state, allocs[i]);
    if (strictly_less(g, best)) {
      best = g;
      best_i = i;
    }
  }
  return allocs[best_i];
}

Allocation myopic_decide(const JointScenario& scenario, const JointState& state, int lookahead) {
  RandomStream unused(0, 0, 0, StreamTag::policy);
  return MyopicPolicy(scenario, lookahead).decide(state, unused);
}

// ---- Benefit --------------------------------------------------------------

std::vector<std::vector<double>> benefit_tables(const JointScenario& scenario) {
  std::vector<std::vector<double>> out;
  for (const RobotModel& r : scenario.robots) {
    const SingleArmSolution sol = solve_single_arm(r, scenario.gamma, 0.0);
    std::vector<double> b(r.num_states());
    for (StateIndex x = 0; x < r.num_states(); ++x) b[x] = sol.q_active[x] - sol.q_passive[x];
    b[r.goal_index()] = 0.0;
    out.push_back(std::move(b));
  }
  return out;
}

Allocation benefit_decide(const JointScenario& scenario,
                          const std::vector<std::vector<double>>& b0_tables,
                          const JointState& state) {
  const int k = scenario.num_robots();
  if (static_cast<int>(b0_tables.size()) != k) throw ConfigError("benefit tables do not cover every robot");
  std::vector<std::pair<double, int>> cands;
  for (int i = 0; i < k; ++i) {
    if (state.per_robot[i] == scenario.robots[i].goal_index()) continue;
    const double b = b0_tables[i].at(state.per_robot[i]);
    if (b < 0.0) cands.emplace_back(b, i);
  }
  std::sort(cands.begin(), cands.end());
  Allocation out;
  out.a.assign(k, 0);
  for (int i = 0; i < std::min<int>(scenario.operators, static_cast<int>(cands.size())); ++i) {
    out.a[cands[i].second] = 1;
  }
  return out;
}

// ---- Factory ---------------------------------------------------------------

const std::vector<std::string>& policy_names() {
  static const std::vector<std::string> names = {"whittle", "optimal", "reactive",
                                                 "myopic1", "myopic2", "benefit"};
  return names;
}

std::unique_ptr<AllocationPolicy> make_policy(const std::string& name,
                                              const JointScenario& scenario,
                                              const JointSolveOptions& joint) {
  if (name == "whittle") {
    return std::make_unique<WhittlePolicy>(compute_index_tables(scenario), scenario.operators);
  }
  if (name == "optimal") return std::make_unique<OptimalPolicy>(optimal_joint_policy(scenario, joint));
  if (name == "reactive") return std::make_unique<ReactivePolicy>(scenario);
  if (name == "myopic1") return std::make_unique<MyopicPolicy>(scenario, 1);
  if (name == "myopic2") return std::make_unique<MyopicPolicy>(scenario, 2);
  if (name == "benefit") return std::make_unique<BenefitPolicy>(scenario, benefit_tables(scenario));
  throw ConfigError("unknown policy '" + name + "'");
}

}  // namespace rmab
