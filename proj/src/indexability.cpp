#include "rmab/indexability.hpp"

#include <algorithm>
#include <cmath>

#include "rmab/errors.hpp"
#include "rmab/whittle.hpp"

namespace rmab {

namespace {

constexpr double kShapeTolerance = 1e-12;
constexpr double kDenominatorFloor = 1e-14;
// |B| below this (relative) is treated as indifference when re-checking.
constexpr double kIndifference = 1e-9;
constexpr int kRefinement = 10;

double checked(double denominator, const char* what) {
  if (!(std::abs(denominator) > kDenominatorFloor)) {
    throw NumericDegeneracyError(std::string("degenerate denominator in ") + what);
  }
  return denominator;
}

bool close(double a, double b) { return std::abs(a - b) <= kShapeTolerance; }

}  // namespace

std::string to_string(VerdictMethod m) {
  return m == VerdictMethod::theorem ? "theorem" : "numeric";
}

CoefficientSet coefficients(const TaskTransition& tr, double g) {
  const double p0 = tr.p0, q0 = tr.q0, r0 = tr.r0();
  const double p1 = tr.p1n0, q1 = tr.q1n0, r1 = tr.r1n0();
  const double q1e = tr.q1n1, r1e = tr.r1n1();

  const double fault_den = checked(1.0 - g * r1e, "1 - g r1n1");
  const double joint_den =
      checked(1.0 - g * r1e - g * r0 + g * g * r1e * r0 - g * g * q0 * q1e, "alpha1");
  const double inner = g * r1 + g * g * q1 * q1e / fault_den - 1.0;

  CoefficientSet c;
  c.alpha1 = 1.0 + g * q1 / fault_den + g * q0 * inner / joint_den;
  c.beta0 = (g * (p1 - p0) + g * g * (p0 * r1 - p1 * r0)) / checked(1.0 - g * r0, "beta0");
  // Expanded closed form of beta1.
  c.beta1 = g * (1.0 - g) *
            (q0 - q1 + r0 - r1 + g * q0 * q1e - g * q1 * q1e - g * q0 * r1 + g * q1 * r0 -
             g * r0 * r1e + g * r1 * r1e) /
            joint_den;
  c.b01 = (1.0 - g * r0) / checked(1.0 - g * r1, "b01");
  c.b11 = joint_den / checked(1.0 - g * r1e - g * r1 + g * g * r1e * r1 - g * g * q1e * q1, "b11");
  return c;
}

IndexabilityVerdict theorem_check(const RobotModel& model, double gamma) {
  IndexabilityVerdict v;
  v.method = VerdictMethod::theorem;
  v.indexable = true;
  for (int n = 1; n <= model.num_tasks(); ++n) {
    const CoefficientSet c = coefficients(model.tasks()[n - 1], gamma);
    const bool pass = c.alpha1 >= 0.0 && c.beta0 / (1.0 - gamma) >= -1.0;
    v.per_task.push_back({n, c.alpha1, c.beta0, pass});
    v.indexable = v.indexable && pass;
  }
  return v;
}

std::pair<double, double> type1_coefficients(const TaskTransition& tr, double g) {
  if (!close(tr.p1n1, tr.p1n0) || !close(tr.q1n0, 0.0) || !close(tr.q1n1, 0.0)) {
    throw ShapeError("task is not of Type-1 shape (p1n1 = p1n0, q1n0 = q1n1 = 0)");
  }
  const double r0 = tr.r0(), r1 = tr.r1n0();
  const double den = checked(1.0 - g * r0, "type-1 coefficients");
  const double alpha1 = 1.0 - g * tr.q0 / den;
  const double beta0 = (g * (1.0 - g) * (r0 - r1) + g * tr.q0 * (1.0 - g * r1)) / den;
  return {alpha1, beta0};
}

Type2Bounds type2_bounds(const TaskTransition& tr, double g) {
  if (!close(tr.q1n0, 0.0) || !close(tr.p1n1, 0.0)) {
    throw ShapeError("task is not of Type-2 shape (q1n0 = p1n1 = 0)");
  }
  const double r0 = tr.r0();
  Type2Bounds b;
  b.q1n1_min = 1.0 - 1.0 / g +
               g * tr.q0 * tr.p1n0 / checked(1.0 - g * r0 - g * tr.q0, "type-2 q1n1 bound");
  b.q0_max = (1.0 - g * r0) / checked(g * (1.0 + g * tr.p1n0), "type-2 q0 bound");
  return b;
}

std::vector<double> default_lambda_grid(const RobotModel& model, double gamma, int points) {
  if (points < 2) throw ConfigError("lambda grid needs at least two points");
  const auto [lo, hi] = index_bracket(model, gamma);
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) grid[i] = lo + (hi - lo) * i / (points - 1);
  return grid;
}

namespace {

void check_grid(const std::vector<double>& grid) {
  if (grid.size() < 2) throw ConfigError("lambda grid needs at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("lambda grid must be strictly increasing");
  }
}

// Strict-violation re-check of state x inside [lo, hi].
bool confirmed_violation(const RobotModel& model, double gamma, StateIndex x, double lo,
                         double hi) {
  bool seen_strict_passive = false;
  for (int i = 0; i <= kRefinement; ++i) {
    const double lambda = lo + (hi - lo) * i / kRefinement;
    const SingleArmSolution sol = solve_single_arm(model, gamma, lambda);
    const double b = sol.q_active[x] - sol.q_passive[x];
    const double tol = kIndifference * (1.0 + std::abs(sol.q_passive[x]));
    if (b > tol) seen_strict_passive = true;
    if (b < -tol && seen_strict_passive) return true;
  }
  return false;
}

IndexabilityVerdict assemble(const RobotModel& model, double gamma,
                             const std::vector<double>& grid,
                             const std::vector<std::vector<bool>>& sets) {
  const int n = model.num_states();
  const bool all_active_low = std::none_of(sets.front().begin(), sets.front().end(),
                                           [](bool p) { return p; });
  const bool all_passive_high =
      std::all_of(sets.back().begin(), sets.back().end(), [](bool p) { return p; });
  if (!all_active_low || !all_passive_high) {
    throw GridTooCoarseError(
        "lambda grid does not bracket the indices: passive set must be empty at the first "
        "point and full at the last");
  }
  IndexabilityVerdict v;
  v.method = VerdictMethod::numeric;
  v.lambda_grid = grid;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    for (StateIndex x = 0; x < n; ++x) {
      if (sets[i][x] && !sets[i + 1][x] &&
          confirmed_violation(model, gamma, x, grid[i], grid[i + 1])) {
        v.violations.push_back({x, grid[i], grid[i + 1]});
      }
    }
  }
  v.indexable = v.violations.empty();
  return v;
}

}  // namespace

IndexabilityVerdict numeric_verify(const RobotModel& model, double gamma,
                                   const std::vector<double>& lambda_grid) {
  check_grid(lambda_grid);
  const int points = static_cast<int>(lambda_grid.size());
  std::vector<std::vector<bool>> sets(points);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < points; ++i) sets[i] = passive_set(model, gamma, lambda_grid[i]);
  return assemble(model, gamma, lambda_grid, sets);
}

IndexabilityVerdict numeric_verify(const RobotModel& model, double gamma) {
  return numeric_verify(model, gamma, default_lambda_grid(model, gamma));
}

IndexabilityVerdict numeric_verify_reference(const RobotModel& model, double gamma,
                                             const std::vector<double>& lambda_grid) {
  check_grid(lambda_grid);
  std::vector<std::vector<bool>> sets;
  sets.reserve(lambda_grid.size());
  for (double lambda : lambda_grid) sets.push_back(passive_set(model, gamma, lambda));
  return assemble(model, gamma, lambda_grid, sets);
}

double default_probe_step(double lambda) { return 1e-4 * (1.0 + std::abs(lambda)); }

namespace {

std::pair<SingleArmSolution, SingleArmSolution> probe_pair(const RobotModel& model, double gamma,
                                                           double lambda, double h) {
  if (!(h > 0.0)) throw ConfigError("probe step must be positive");
  SingleArmSolution a = solve_single_arm(model, gamma, lambda);
  SingleArmSolution b = solve_single_arm(model, gamma, lambda + h);
  if (!(a.policy == b.policy)) {
    throw StraddleError("optimal policy changes inside [lambda, lambda + h]");
  }
  return {std::move(a), std::move(b)};
}

}  // namespace

double benefit_derivative_probe(const RobotModel& model, double gamma, double lambda,
                                StateIndex state, double h) {
  const auto [a, b] = probe_pair(model, gamma, lambda, h);
  // B(G) = lambda identically.
  if (state == model.goal_index()) return 1.0;
  const double ba = a.q_active.at(state) - a.q_passive.at(state);
  const double bb = b.q_active.at(state) - b.q_passive.at(state);
  return (bb - ba) / h;
}

double value_derivative_probe(const RobotModel& model, double gamma, double lambda,
                              StateIndex state, double h) {
  const auto [a, b] = probe_pair(model, gamma, lambda, h);
  return (b.value.at(state) - a.value.at(state)) / h;
}

}  // namespace rmab
