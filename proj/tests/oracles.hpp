#pragma once
// Independent reference computations used by the tests. Nothing here calls
// the library's transition, cost or solver code; models are rebuilt from the
// raw task fields.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "rmab/random.hpp"
#include "rmab/robot_model.hpp"

namespace oracle {

struct DenseArm {
  int n = 0;  // states
  Eigen::MatrixXd P[2];
  Eigen::VectorXd C[2];
};

// Canonical order: (1,0),(1,1),...,(N,0),(N,1),Goal.
inline DenseArm dense(const rmab::RobotModel& m) {
  const int N = m.num_tasks();
  DenseArm d;
  d.n = 2 * N + 1;
  const int G = 2 * N;
  for (int a = 0; a < 2; ++a) {
    d.P[a] = Eigen::MatrixXd::Zero(d.n, d.n);
    d.C[a] = Eigen::VectorXd::Zero(d.n);
  }
  for (int t = 0; t < N; ++t) {
    const auto& tr = m.tasks()[t];
    const auto& c = m.costs()[t];
    const int z = 2 * t, e = 2 * t + 1, next = (t + 1 == N) ? G : 2 * (t + 1);
    // normal state
    d.P[0](z, next) += tr.p0;
    d.P[0](z, e) += tr.q0;
    d.P[0](z, z) += 1.0 - tr.p0 - tr.q0;
    d.P[1](z, next) += tr.p1n0;
    d.P[1](z, e) += tr.q1n0;
    d.P[1](z, z) += 1.0 - tr.p1n0 - tr.q1n0;
    // fault state: autonomy never leaves it
    d.P[0](e, e) = 1.0;
    d.P[1](e, next) += tr.p1n1;
    d.P[1](e, z) += tr.q1n1;
    d.P[1](e, e) += 1.0 - tr.p1n1 - tr.q1n1;
    d.C[0](z) = c.rho;
    d.C[1](z) = c.rho + m.teleop_surcharge();
    d.C[0](e) = c.phi;
    d.C[1](e) = c.phi + m.teleop_surcharge();
  }
  d.P[0](G, G) = 1.0;
  d.P[1](G, G) = 1.0;
  return d;
}

struct VIResult {
  Eigen::VectorXd V, Q0, Q1;
};

// Value iteration to a sup-norm change below 1e-13 (scaled); Goal may be
// chosen active like any other state.
inline VIResult value_iteration(const DenseArm& d, double gamma, double lambda) {
  Eigen::VectorXd V = Eigen::VectorXd::Zero(d.n);
  const Eigen::VectorXd C1 = d.C[1] + Eigen::VectorXd::Constant(d.n, lambda);
  VIResult r;
  for (int it = 0; it < 2'000'000; ++it) {
    r.Q0 = d.C[0] + gamma * d.P[0] * V;
    r.Q1 = C1 + gamma * d.P[1] * V;
    Eigen::VectorXd Vn = r.Q0.cwiseMin(r.Q1);
    const double diff = (Vn - V).cwiseAbs().maxCoeff();
    V = Vn;
    if (diff <= 1e-14 * (1.0 + V.cwiseAbs().maxCoeff())) break;
  }
  r.V = V;
  r.Q0 = d.C[0] + gamma * d.P[0] * V;
  r.Q1 = C1 + gamma * d.P[1] * V;
  return r;
}

// Discounted cost and active count of a fixed policy, by full-pivot LU.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> evaluate(const DenseArm& d, const std::vector<int>& pi,
                                                           double gamma) {
  Eigen::MatrixXd T(d.n, d.n);
  Eigen::VectorXd c(d.n), act(d.n);
  for (int x = 0; x < d.n; ++x) {
    T.row(x) = d.P[pi[x]].row(x);
    c(x) = d.C[pi[x]](x);
    act(x) = pi[x];
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(d.n, d.n) - gamma * T;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  return {lu.solve(c), lu.solve(act)};
}

// Root of a monotone sign change of f on [lo, hi] by plain bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-13) {
  double flo = f(lo);
  for (int i = 0; i < 400 && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Random task generators over the whole valid parameter space.
inline rmab::TaskTransition random_general(rmab::RandomStream& rng) {
  auto simplex = [&](double& p, double& q) {
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    p = u;
    q = v;
  };
  rmab::TaskTransition t;
  simplex(t.p0, t.q0);
  simplex(t.p1n0, t.q1n0);
  do {
    simplex(t.p1n1, t.q1n1);
  } while (t.p1n1 + t.q1n1 <= 1e-6);
  return t;
}

inline rmab::TaskTransition random_type1(rmab::RandomStream& rng) {
  rmab::TaskTransition t;
  t.type = rmab::TaskType::type1;
  double u = rng.uniform(), v = rng.uniform();
  if (u + v > 1.0) {
    u = 1.0 - u;
    v = 1.0 - v;
  }
  t.p0 = u;
  t.q0 = v;
  do {
    t.p1n0 = rng.uniform();
  } while (t.p1n0 <= 1e-6);
  t.p1n1 = t.p1n0;
  return t;
}

inline rmab::TaskTransition random_type2(rmab::RandomStream& rng) {
  rmab::TaskTransition t;
  t.type = rmab::TaskType::type2;
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
  } while (t.q1n1 <= 1e-6);
  return t;
}

inline rmab::RobotModel random_arm(rmab::RandomStream& rng, int tasks,
                                   rmab::TaskTransition (*draw)(rmab::RandomStream&) = random_general) {
  std::vector<rmab::TaskTransition> tr;
  std::vector<rmab::TaskCost> c;
  for (int i = 0; i < tasks; ++i) {
    tr.push_back(draw(rng));
    c.push_back({rng.uniform(0.5, 3.0), rng.uniform(2.0, 6.0)});
  }
  return rmab::RobotModel(tr, c, rng.uniform(0.1, 1.5));
}

// Pearson chi-square statistic against expected counts.
inline double chi_square(const std::vector<double>& observed, const std::vector<double>& expected) {
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    s += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  }
  return s;
}

}  // namespace oracle
