// Parallel kernels vs their serial references.
//   rmab_bench [--threads N] [--repeats R]
// Prints kernel,threads,parallel_s,reference_s,speedup (min over repeats).

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>

#include "CLI11.hpp"
#include "rmab/indexability.hpp"
#include "rmab/policies.hpp"
#include "rmab/simulator.hpp"
#include "rmab/whittle.hpp"

using namespace rmab;

namespace {

double best_of(int repeats, const std::function<void()>& f) {
  f();  // warm caches and allocator
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

JointScenario scenario(int K, int M) {
  GeneratorConfig c;
  c.robots = K;
  c.operators = M;
  c.seed = 11;
  return generate_scenario(c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rmab kernel benchmark"};
  int threads = omp_get_max_threads();
  int repeats = 3;
  app.add_option("--threads", threads)->check(CLI::PositiveNumber);
  app.add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  omp_set_num_threads(threads);

  auto row = [&](const char* name, const std::function<void()>& par, const std::function<void()>& ref) {
    const double p = best_of(repeats, par), r = best_of(repeats, ref);
    std::printf("%s,%d,%.6g,%.6g,%.2f\n", name, threads, p, r, r / p);
    std::fflush(stdout);
  };
  std::printf("kernel,threads,parallel_s,reference_s,speedup\n");

  // lambda-grid sweep on one 7-task arm
  {
    const JointScenario s = scenario(1, 1);
    const auto grid = default_lambda_grid(s.robots[0], s.gamma, 4000);
    row("numeric_verify", [&] { numeric_verify(s.robots[0], s.gamma, grid); },
        [&] { numeric_verify_reference(s.robots[0], s.gamma, grid); });
  }

  // Monte Carlo rollouts
  {
    const JointScenario s = scenario(6, 2);
    const auto w = make_policy("whittle", s);
    const auto b = make_policy("benefit", s);
    EvaluateOptions o;
    o.iterations = 4000;
    o.timeout_seconds = 1e9;
    row("evaluate", [&] { evaluate(s, {w.get(), b.get()}, o); },
        [&] { evaluate_reference(s, {w.get(), b.get()}, o); });
  }

  // exact joint solve; the reference is plain value iteration, so keep K small
  {
    const JointScenario s = scenario(3, 1);
    row("joint_solve", [&] { optimal_joint_policy(s); }, [&] { optimal_joint_policy_reference(s); });
  }

  // per-robot index tables
  {
    const JointScenario s = scenario(18, 3);
    row("index_tables", [&] { compute_index_tables(s); },
        [&] {
          for (const auto& r : s.robots) whittle_indices_adaptive_greedy(r, s.gamma);
        });
  }

  // two-step lookahead: separable fast path vs literal recursion
  {
    const JointScenario s = scenario(5, 1);
    const MyopicPolicy fast(s, 2);
    const JointState x = JointState::start(s);
    const auto allocs = feasible_allocations(s, x);
    row("myopic2_lookahead",
        [&] {
          for (const auto& a : allocs) fast.lookahead(x, a);
        },
        [&] {
          for (const auto& a : allocs) myopic_lookahead_reference(s, fast.v0(), x, a, 2);
        });
  }
  return 0;
}
