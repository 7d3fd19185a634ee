#include <cmath>
#include <vector>

#include "asbcd/asbcd.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace asbcd;

namespace {

CompositeProblem glm(DatasetMatrix data, LossKind loss, std::size_t k, double ridge = 0.0) {
  std::size_t n = data.dimension;
  return CompositeProblem(std::move(data), loss, {}, BlockPartition::contiguous(n, k), ridge);
}

DatasetMatrix row34() {
  DatasetMatrix d;
  d.dimension = 2;
  d.rows.push_back({{{0, 3.0}, {1, 4.0}}});
  d.labels.push_back(1.0);
  return d;
}

DatasetMatrix rand_instance(std::size_t l, std::size_t n, std::uint64_t seed, bool signs) {
  SyntheticSpec spec;
  spec.n = n;
  spec.l = l;
  spec.density = 0.5;
  spec.noise = 0.2;
  spec.seed = seed;
  spec.kind = signs ? SyntheticKind::Logistic : SyntheticKind::Lasso;
  return gen_synthetic(spec).data;
}

}  // namespace

TEST_CASE("closed form on a single (3,4) row with singleton blocks") {
  auto p = glm(row34(), LossKind::Squared, 2);
  auto est = estimate_closed_form(p);
  CHECK(est.l_nor == doctest::Approx(25.0));
  CHECK(est.l_res == doctest::Approx(20.0));
  CHECK(est.l_max == doctest::Approx(16.0));
  CHECK(est.lambda_res() == doctest::Approx(1.25));
  CHECK(est.lambda_nor() == doctest::Approx(25.0 / 16.0));
}

TEST_CASE("one block covering everything collapses the three constants") {
  auto p = glm(row34(), LossKind::Squared, 1);
  auto est = estimate_closed_form(p);
  CHECK(est.l_nor == doctest::Approx(25.0));
  CHECK(est.l_res == doctest::Approx(25.0));
  CHECK(est.l_max == doctest::Approx(25.0));
}

TEST_CASE("logistic scales the squared-loss constants by 1/4") {
  auto d = row34();
  auto sq = estimate_closed_form(glm(d, LossKind::Squared, 2));
  auto lg = estimate_closed_form(glm(d, LossKind::Logistic, 2));
  CHECK(lg.l_nor == doctest::Approx(sq.l_nor / 4.0));
  CHECK(lg.l_res == doctest::Approx(sq.l_res / 4.0));
  CHECK(lg.l_max == doctest::Approx(sq.l_max / 4.0));
}

TEST_CASE("ordering invariant on random instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    bool logistic = seed % 2 == 1;
    auto p = glm(rand_instance(12, 9, seed, logistic),
                 logistic ? LossKind::Logistic : LossKind::Squared, 1 + seed % 5,
                 seed % 3 == 0 ? 0.05 : 0.0);
    for (bool refine : {false, true}) {
      auto est = estimate_closed_form(p, refine);
      CHECK(est.l_max <= est.l_res * (1.0 + 1e-12));
      CHECK(est.l_res <= est.l_nor * (1.0 + 1e-12));
      CHECK(est.lambda_res() >= 1.0 - 1e-12);
      CHECK(est.lambda_nor() >= est.lambda_res() - 1e-12);
    }
  }
}

TEST_CASE("refined L_res is tighter and still validates") {
  auto p = glm(rand_instance(15, 8, 3, false), LossKind::Squared, 4, 0.1);
  auto loose = estimate_closed_form(p, false);
  auto tight = estimate_closed_form(p, true);
  CHECK(tight.l_res <= loose.l_res + 1e-12);
  CHECK(validate_by_sampling(p, tight, 400, 99).pass);
}

TEST_CASE("sampling validation passes for closed-form estimates") {
  for (LossKind loss : {LossKind::Squared, LossKind::Logistic}) {
    auto p = glm(rand_instance(10, 7, 5, loss == LossKind::Logistic), loss, 3);
    auto est = estimate_closed_form(p);
    auto rep = validate_by_sampling(p, est, 500, 42);
    CHECK(rep.pass);
    CHECK(rep.max_ratio_nor <= est.l_nor * (1 + 1e-9));
    CHECK(rep.max_ratio_res <= est.l_res * (1 + 1e-9));
    CHECK(rep.max_ratio_max <= est.l_max * (1 + 1e-9));
  }
}

TEST_CASE("halved estimates fail validation") {
  auto p = glm(row34(), LossKind::Squared, 2);
  auto est = estimate_closed_form(p);
  est.l_nor /= 2.0;
  est.l_res /= 2.0;
  est.l_max /= 2.0;
  auto rep = validate_by_sampling(p, est, 500, 7);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_ratio_max > est.l_max);
}

TEST_CASE("block curvature is attained along the top eigenvector") {
  // quadratic f: gradient change is exactly the Hessian action; for a single
  // row the block sub-Hessian is a_G a_G^T with top eigenvector a_G and
  // eigenvalue ||a_G||^2
  DatasetMatrix d;
  d.dimension = 4;
  d.rows.push_back({{{0, 1.0}, {1, 2.0}, {2, -1.5}, {3, 0.5}}});
  d.labels.push_back(0.0);
  auto p = glm(std::move(d), LossKind::Squared, 2);  // blocks {0,1}, {2,3}
  const auto& g = p.partition().group(0);

  std::vector<double> x{0.3, -0.7, 1.1, 0.2}, y = x;
  std::vector<double> a_g{1.0, 2.0};
  double ag_norm_sq = 5.0;
  double delta_norm = 0.0;
  for (std::size_t t = 0; t < g.size(); ++t) {
    y[g[t]] += a_g[t];
    delta_norm += a_g[t] * a_g[t];
  }
  delta_norm = std::sqrt(delta_norm);

  std::vector<double> gx(4), gy(4);
  p.grad_component_dense(0, x, gx);
  p.grad_component_dense(0, y, gy);
  double block_change = 0.0;
  for (std::size_t t = 0; t < g.size(); ++t)
    block_change += (gy[g[t]] - gx[g[t]]) * (gy[g[t]] - gx[g[t]]);
  double observed = std::sqrt(block_change) / delta_norm;
  CHECK(std::fabs(observed - ag_norm_sq) < 1e-9);
}

TEST_CASE("perturbation scale does not move the observed ratios for quadratics") {
  auto p = glm(row34(), LossKind::Squared, 2);
  std::vector<double> x{0.4, -0.2};
  const double scales[] = {1e-4, 1e-2, 1.0, 1e2};
  double first = -1.0;
  for (double sc : scales) {
    std::vector<double> y = x;
    y[0] += sc;
    std::vector<double> gx(2), gy(2);
    p.grad_component_dense(0, x, gx);
    p.grad_component_dense(0, y, gy);
    double diff = std::sqrt((gy[0] - gx[0]) * (gy[0] - gx[0]) + (gy[1] - gx[1]) * (gy[1] - gx[1]));
    double ratio = diff / sc;
    if (first < 0.0)
      first = ratio;
    else
      CHECK(ratio == doctest::Approx(first).epsilon(1e-9));
  }
}

TEST_CASE("descent inequality with L_max") {
  for (LossKind loss : {LossKind::Squared, LossKind::Logistic}) {
    auto p = glm(rand_instance(8, 6, 9, loss == LossKind::Logistic), loss, 3, 0.02);
    auto est = estimate_closed_form(p);
    Rng rng(77, 0, 0);
    for (int trial = 0; trial < 200; ++trial) {
      std::size_t i = rng.next_below(8);
      std::size_t j = rng.next_below(3);
      std::vector<double> x(6), y;
      for (auto& c : x) c = rng.normal();
      y = x;
      const auto& group = p.partition().group(j);
      std::vector<double> delta(group.size());
      double dsq = 0.0;
      for (std::size_t t = 0; t < group.size(); ++t) {
        delta[t] = 0.5 * rng.normal();
        y[group[t]] += delta[t];
        dsq += delta[t] * delta[t];
      }
      std::vector<double> g(6);
      p.grad_component_dense(i, x, g);
      double inner = 0.0;
      for (std::size_t t = 0; t < group.size(); ++t) inner += g[group[t]] * delta[t];
      double lhs = p.component_value(i, y);
      double rhs = p.component_value(i, x) + inner + 0.5 * est.l_max * dsq;
      CHECK(rhs - lhs >= -1e-9);
    }
  }
}

TEST_CASE("validator argument checks") {
  auto p = glm(row34(), LossKind::Squared, 2);
  CHECK_THROWS(validate_by_sampling(p, estimate_closed_form(p), 0, 1));
}
