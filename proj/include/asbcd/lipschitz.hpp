#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "asbcd/problem.hpp"
#include "asbcd/rng.hpp"

namespace asbcd {

// L_max <= L_res <= L_nor always holds; the ratios drive the step-size bound.
struct LipschitzEstimates {
  double l_nor = 0.0;
  double l_res = 0.0;
  double l_max = 0.0;

  double lambda_res() const { return l_res / l_max; }
  double lambda_nor() const { return l_nor / l_max; }
};

// Closed-form upper bounds from the rank-one curvature of generalized linear
// losses: the Hessian of f_i is phi'' * a_i a_i^T + ridge*I with phi'' <= 1
// (squared) or 1/4 (logistic).
//   L_nor = c * max_i ||a_i||^2
//   L_res = c * max_i max_j ||a_i|| * ||a_{i,G_j}||
//   L_max = c * max_i max_j ||a_{i,G_j}||^2
// These are products of norms, deliberately conservative; set refine=true to
// tighten L_res to the exact per-(i,j) operator norm (the other two are
// already exact for this structure).
inline LipschitzEstimates estimate_closed_form(const CompositeProblem& problem,
                                               bool refine = false) {
  double c = problem.loss() == LossKind::Squared ? 1.0 : 0.25;
  double mu = problem.ridge();
  const auto& part = problem.partition();
  const auto& data = problem.data();
  if (data.num_rows() == 0) throw std::invalid_argument("estimate_closed_form: empty dataset");

  LipschitzEstimates est;
  std::vector<double> block_sq(part.num_blocks());
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    const auto& row = data.rows[i];
    double full_sq = row.squared_norm();
    std::fill(block_sq.begin(), block_sq.end(), 0.0);
    for (const auto& e : row.entries) block_sq[part.block_of(e.index)] += e.value * e.value;
    double max_block_sq = 0.0;
    for (double s : block_sq) max_block_sq = std::max(max_block_sq, s);
    est.l_nor = std::max(est.l_nor, c * full_sq);
    est.l_max = std::max(est.l_max, c * max_block_sq);
    if (refine) {
      // Exact gain of d -> c (a_G . d) a + mu d for d supported on G:
      //   ||M d||^2 = (c^2 ||a||^2 + 2 mu c) (a_G . d)^2 + mu^2 ||d||^2,
      // maximized at d parallel to a_G.
      for (std::size_t j = 0; j < part.num_blocks(); ++j) {
        if (block_sq[j] == 0.0 && mu == 0.0) continue;
        double top = (c * full_sq + 2.0 * mu) * c * block_sq[j] + mu * mu;
        est.l_res = std::max(est.l_res, std::sqrt(top));
      }
    } else {
      est.l_res = std::max(est.l_res, c * std::sqrt(full_sq) * std::sqrt(max_block_sq));
    }
  }
  est.l_nor += mu;
  est.l_max += mu;
  if (!refine) est.l_res += mu;
  // ordering is structural but guard against rounding
  est.l_res = std::min(std::max(est.l_res, est.l_max), est.l_nor);
  return est;
}

struct ValidationReport {
  double max_ratio_nor = 0.0;
  double max_ratio_res = 0.0;
  double max_ratio_max = 0.0;
  bool pass = false;
};

// Empirically probe Definitions 1-3 with random points and random block
// perturbations across several magnitudes. Passes iff every observed ratio is
// below its estimate (tiny rounding slack).
inline ValidationReport validate_by_sampling(const CompositeProblem& problem,
                                             const LipschitzEstimates& est, int trials,
                                             std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("validate_by_sampling: trials must be >= 1");
  const auto& part = problem.partition();
  std::size_t n = problem.dim();
  Rng rng(seed, 0xfeed, 0);
  ValidationReport rep;
  const double scales[] = {1e-4, 1e-2, 1.0, 1e2};

  std::vector<double> x(n), y(n), gx(n), gy(n);
  for (int t = 0; t < trials; ++t) {
    std::size_t i = rng.next_below(problem.num_components());
    std::size_t j = rng.next_below(part.num_blocks());
    double scale = scales[rng.next_below(4)];
    for (std::size_t c = 0; c < n; ++c) x[c] = rng.normal();

    // full perturbation for L_nor
    double dn = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      double d = scale * rng.normal();
      y[c] = x[c] + d;
      dn += d * d;
    }
    dn = std::sqrt(dn);
    problem.grad_component_dense(i, x, gx);
    problem.grad_component_dense(i, y, gy);
    double diff = 0.0;
    for (std::size_t c = 0; c < n; ++c) diff += (gy[c] - gx[c]) * (gy[c] - gx[c]);
    if (dn > 0.0) rep.max_ratio_nor = std::max(rep.max_ratio_nor, std::sqrt(diff) / dn);

    // block perturbation for L_res / L_max
    const auto& g = part.group(j);
    y = x;
    double db = 0.0;
    for (int c : g) {
      double d = scale * rng.normal();
      y[c] = x[c] + d;
      db += d * d;
    }
    db = std::sqrt(db);
    if (db == 0.0) continue;
    problem.grad_component_dense(i, y, gy);
    double full = 0.0, block = 0.0;
    for (std::size_t c = 0; c < n; ++c) full += (gy[c] - gx[c]) * (gy[c] - gx[c]);
    for (int c : g) block += (gy[c] - gx[c]) * (gy[c] - gx[c]);
    rep.max_ratio_res = std::max(rep.max_ratio_res, std::sqrt(full) / db);
    rep.max_ratio_max = std::max(rep.max_ratio_max, std::sqrt(block) / db);
  }

  double slack = 1.0 + 1e-9;
  rep.pass = rep.max_ratio_nor <= est.l_nor * slack && rep.max_ratio_res <= est.l_res * slack &&
             rep.max_ratio_max <= est.l_max * slack;
  return rep;
}

}  // namespace asbcd
