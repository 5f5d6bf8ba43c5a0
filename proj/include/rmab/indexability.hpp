#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rmab/robot_model.hpp"

namespace rmab {

/// Per-task coefficients of the benefit-slope decomposition, for one gamma.
struct CoefficientSet {
  double alpha0 = 1.0;
  double alpha1 = 0.0;
  double beta0 = 0.0;
  double beta1 = 0.0;
  double b00 = 1.0;
  double b10 = 1.0;
  double b01 = 0.0;
  double b11 = 0.0;
};

/// Evaluates the rational expressions as written, with r = 1 - p - q.
/// Throws NumericDegeneracyError on a vanishing denominator.
CoefficientSet coefficients(const TaskTransition& tr, double gamma);

enum class VerdictMethod { theorem, numeric };

std::string to_string(VerdictMethod m);

struct TaskDiagnostic {
  int task;
  double alpha1;
  double beta0;
  bool condition_pass;
};

/// A state passive at `lambda` but active at `next_lambda`.
struct PassiveSetViolation {
  StateIndex state;
  double lambda;
  double next_lambda;
};

struct IndexabilityVerdict {
  VerdictMethod method = VerdictMethod::theorem;
  bool indexable = false;
  std::vector<TaskDiagnostic> per_task;
  std::vector<double> lambda_grid;
  std::vector<PassiveSetViolation> violations;
};

/// Sufficient condition: alpha1(n) >= 0 and beta0(n)/(1-gamma) >= -1 for all n.
IndexabilityVerdict theorem_check(const RobotModel& model, double gamma);

/// Closed forms for tasks with p1n1 = p1n0 and q1n0 = q1n1 = 0.
/// Returns (alpha1, beta0).
std::pair<double, double> type1_coefficients(const TaskTransition& tr, double gamma);

struct Type2Bounds {
  double q1n1_min;  // alpha1 >= 0  <=>  q1n1 >= q1n1_min
  double q0_max;    // needed for q1n1_min <= 1
};

/// Bounds for tasks with q1n0 = p1n1 = 0.
Type2Bounds type2_bounds(const TaskTransition& tr, double gamma);

/// Evenly spaced penalties over index_bracket(model, gamma).
std::vector<double> default_lambda_grid(const RobotModel& model, double gamma, int points = 400);

/// Checks that the passive set grows along `lambda_grid`. Candidate
/// violations are re-examined on a 10x finer grid inside their cell and kept
/// only if the state is strictly passive at a smaller penalty and strictly
/// active at a larger one.
IndexabilityVerdict numeric_verify(const RobotModel& model, double gamma,
                                   const std::vector<double>& lambda_grid);
IndexabilityVerdict numeric_verify(const RobotModel& model, double gamma);

/// Serial reference of numeric_verify.
IndexabilityVerdict numeric_verify_reference(const RobotModel& model, double gamma,
                                             const std::vector<double>& lambda_grid);

double default_probe_step(double lambda);

/// (B_{lambda+h}(x) - B_lambda(x)) / h. Throws StraddleError when the optimal
/// policy differs at the two penalties.
double benefit_derivative_probe(const RobotModel& model, double gamma, double lambda,
                                StateIndex state, double h);

/// (V_{lambda+h}(x) - V_lambda(x)) / h, with the same straddle check.
double value_derivative_probe(const RobotModel& model, double gamma, double lambda,
                              StateIndex state, double h);

}  // namespace rmab
