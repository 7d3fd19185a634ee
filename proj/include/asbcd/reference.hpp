#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "asbcd/lipschitz.hpp"
#include "asbcd/problem.hpp"
#include "asbcd/solver.hpp"

namespace asbcd {

struct ReferenceResult {
  std::vector<double> solution;
  std::vector<double> epoch_objectives;  // including the initial point
  double f_star = std::numeric_limits<double>::quiet_NaN();
  Trace trace;
};

// Strictly sequential run of the same epoch/inner-step recursion: the solver
// with one worker and consistent reads. Shares the exact code path with the
// async engine, so p=1 equivalence is structural.
inline ReferenceResult run_sequential(const CompositeProblem& problem, SolverConfig config) {
  config.threads = 1;
  Solver solver(problem, config);
  SolveResult res = solver.run();
  ReferenceResult out;
  out.solution = std::move(res.x);
  out.trace = std::move(res.trace);
  for (const auto& rec : out.trace.records) out.epoch_objectives.push_back(rec.objective);
  double best = std::numeric_limits<double>::infinity();
  for (double f : out.epoch_objectives) best = std::min(best, f);
  out.f_star = best;
  return out;
}

struct HighAccuracyResult {
  double f_star = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> x;
  bool converged = false;
  long iterations = 0;
};

// High-accuracy F* via accelerated proximal gradient with function restart,
// step 1/L_nor. Runs until the relative objective change stays below tol or
// the iteration cap is reached; returns the best objective seen either way.
inline HighAccuracyResult solve_high_accuracy(const CompositeProblem& problem,
                                              long max_iters = 200000, double tol = 1e-12) {
  std::size_t n = problem.dim();
  LipschitzEstimates est = estimate_closed_form(problem);
  double step = 1.0 / est.l_nor;

  std::vector<double> x(n, 0.0), y(n, 0.0), x_prev(n, 0.0);
  double theta = 1.0;
  HighAccuracyResult out;
  out.x = x;
  out.f_star = problem.objective(x);
  double f_prev = out.f_star;
  int stable = 0;

  for (long it = 0; it < max_iters; ++it) {
    std::vector<double> g = problem.grad_full(y);
    for (std::size_t c = 0; c < n; ++c) y[c] -= step * g[c];
    std::vector<double> x_new = problem.prox_full(y, step);

    double f = problem.objective(x_new);
    if (f < out.f_star) {
      out.f_star = f;
      out.x = x_new;
    }
    if (f > f_prev) {
      // restart momentum
      theta = 1.0;
      y = x_new;
    } else {
      double theta_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
      double beta = (theta - 1.0) / theta_new;
      for (std::size_t c = 0; c < n; ++c) y[c] = x_new[c] + beta * (x_new[c] - x[c]);
      theta = theta_new;
    }
    x_prev = x;
    x = x_new;
    out.iterations = it + 1;

    double denom = std::max(std::fabs(f_prev), 1e-300);
    if (std::fabs(f_prev - f) / denom < tol) {
      if (++stable >= 10) {
        out.converged = true;
        break;
      }
    } else {
      stable = 0;
    }
    f_prev = f;
  }
  return out;
}

}  // namespace asbcd
