#pragma once

#include <cmath>
#include <stdexcept>

namespace asbcd {

// Analysis-side parameters: rho > 1 user constant, tau staleness bound, m inner
// iterations per epoch, k blocks, Lipschitz ratios, l_osc the optimal strong
// convexity parameter (0 means general convex).
struct TheoryParams {
  double rho = 2.0;
  long tau = 0;
  long m = 1;
  long k = 1;
  double lambda_res = 1.0;
  double lambda_nor = 1.0;
  double l_osc = 0.0;
  double l_max = 1.0;

  void validate() const {
    if (rho <= 1.0) throw std::invalid_argument("TheoryParams: rho must be > 1");
    if (tau < 0 || m < 1 || k < 1) throw std::invalid_argument("TheoryParams: bad tau/m/k");
    if (lambda_res < 1.0 || lambda_nor < lambda_res)
      throw std::invalid_argument("TheoryParams: need lambda_nor >= lambda_res >= 1");
    if (l_osc < 0.0 || l_max <= 0.0) throw std::invalid_argument("TheoryParams: bad l_osc/l_max");
  }
};

// theta1 = sum_{t=1..tau} rho^{t/2} = (rho^{1/2} - rho^{(tau+1)/2}) / (1 - rho^{1/2})
inline double theta1(double rho, long tau) {
  if (rho <= 1.0) throw std::invalid_argument("theta1: rho must be > 1");
  if (tau < 0) throw std::invalid_argument("theta1: tau must be >= 0");
  if (tau == 0) return 0.0;
  double r = std::sqrt(rho);
  return (r - std::pow(rho, (tau + 1) / 2.0)) / (1.0 - r);
}

// theta2 = sum_{t=1..m-1} rho^{t/2} = (rho^{1/2} - rho^{m/2}) / (1 - rho^{1/2})
inline double theta2(double rho, long m) {
  if (rho <= 1.0) throw std::invalid_argument("theta2: rho must be > 1");
  if (m < 1) throw std::invalid_argument("theta2: m must be >= 1");
  if (m == 1) return 0.0;
  double r = std::sqrt(rho);
  return (r - std::pow(rho, m / 2.0)) / (1.0 - r);
}

// theta' = sum_{t=1..tau} rho^t = (rho^{tau+1} - rho) / (rho - 1)
inline double theta_prime(double rho, long tau) {
  if (rho <= 1.0) throw std::invalid_argument("theta_prime: rho must be > 1");
  if (tau < 0) throw std::invalid_argument("theta_prime: tau must be >= 0");
  if (tau == 0) return 0.0;
  return (std::pow(rho, tau + 1.0) - rho) / (rho - 1.0);
}

struct GammaBound {
  bool feasible = false;
  double gamma_max = 0.0;
  double term1 = 0.0;  // from the rho-contraction condition
  double term2 = 0.0;  // from the descent condition
  // rate-theorem side condition 1 - Lam_nor*g - g*tau*theta'/k
  //   - 2(Lam_res th1 + Lam_nor th2) g / sqrt(k) >= 0, evaluated at gamma_max
  bool rate_condition_ok = false;
};

// Admissible step parameter:
//   gamma <= min{ (sqrt(k)(1-1/rho) - 4) / (4 (Lr(1+th1) + Ln(1+th2))),
//                  sqrt(k) / (sqrt(k)/2 + 2 Ln th2 + Lr th1) }
// Infeasible (no positive step admitted) when sqrt(k)(1-1/rho) <= 4.
inline GammaBound gamma_bound(const TheoryParams& p) {
  p.validate();
  GammaBound out;
  double sk = std::sqrt(static_cast<double>(p.k));
  double th1 = theta1(p.rho, p.tau);
  double th2 = theta2(p.rho, p.m);
  double num1 = sk * (1.0 - 1.0 / p.rho) - 4.0;
  if (num1 <= 0.0) return out;
  out.term1 = num1 / (4.0 * (p.lambda_res * (1.0 + th1) + p.lambda_nor * (1.0 + th2)));
  out.term2 = sk / (0.5 * sk + 2.0 * p.lambda_nor * th2 + p.lambda_res * th1);
  out.gamma_max = std::min(out.term1, out.term2);
  out.feasible = out.gamma_max > 0.0;
  double g = out.gamma_max;
  double thp = theta_prime(p.rho, p.tau);
  out.rate_condition_ok =
      1.0 - p.lambda_nor * g - g * p.tau * thp / static_cast<double>(p.k) -
          2.0 * (p.lambda_res * th1 + p.lambda_nor * th2) * g / sk >=
      0.0;
  return out;
}

// Predicted per-epoch contraction of the Lyapunov quantity when the optimal
// strong convexity parameter is positive:
//   1 / (1 + 2 m gamma l / (2 k (l gamma + L_max)))
inline double linear_rate(const TheoryParams& p, double gamma) {
  p.validate();
  if (p.l_osc <= 0.0) throw std::invalid_argument("linear_rate: requires l_osc > 0");
  if (gamma <= 0.0) throw std::invalid_argument("linear_rate: gamma must be positive");
  double num = 2.0 * static_cast<double>(p.m) * gamma * p.l_osc;
  double den = 2.0 * static_cast<double>(p.k) * (p.l_osc * gamma + p.l_max);
  return 1.0 / (1.0 + num / den);
}

// Sublinear bound after s epochs (the paper's n read as k):
//   (k L_max d0 + 2 gamma k gap0) / (2 gamma k + 2 m gamma s)
inline double sublinear_bound(const TheoryParams& p, double gamma, long s, double x0_dist_sq,
                              double f0_gap) {
  p.validate();
  if (gamma <= 0.0) throw std::invalid_argument("sublinear_bound: gamma must be positive");
  if (s < 0) throw std::invalid_argument("sublinear_bound: s must be >= 0");
  double k = static_cast<double>(p.k);
  double num = k * p.l_max * x0_dist_sq + 2.0 * gamma * k * f0_gap;
  double den = 2.0 * gamma * k + 2.0 * static_cast<double>(p.m) * gamma * static_cast<double>(s);
  return num / den;
}

struct ResolvedGamma {
  double gamma = 0.0;
  bool from_theory = false;  // false: heuristic fallback, guarantees do not apply
  GammaBound bound;
};

// Auto policy: Lemma-bound with rho = 2 and a 0.9 safety multiplier; falls back
// to min(0.1, 1/Lambda_nor) when the bound is infeasible (small k).
inline ResolvedGamma resolve_gamma(TheoryParams p) {
  p.rho = 2.0;
  ResolvedGamma out;
  out.bound = gamma_bound(p);
  if (out.bound.feasible) {
    out.gamma = 0.9 * out.bound.gamma_max;
    out.from_theory = true;
  } else {
    out.gamma = std::min(0.1, 1.0 / p.lambda_nor);
  }
  return out;
}

}  // namespace asbcd
