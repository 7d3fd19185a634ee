#include <cmath>
#include <vector>

#include "asbcd/asbcd.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace asbcd;

namespace {

CompositeProblem make_problem(DatasetMatrix data, LossKind loss, Regularizer reg, std::size_t k,
                              double ridge = 0.0) {
  std::size_t n = data.dimension;
  return CompositeProblem(std::move(data), loss, reg, BlockPartition::contiguous(n, k), ridge);
}

DatasetMatrix single_row(std::vector<double> a, double b) {
  DatasetMatrix d;
  d.dimension = a.size();
  SparseRow row;
  for (std::size_t c = 0; c < a.size(); ++c)
    if (a[c] != 0.0) row.entries.push_back({static_cast<int>(c), a[c]});
  d.rows.push_back(row);
  d.labels.push_back(b);
  return d;
}

DatasetMatrix rand_instance(std::size_t l, std::size_t n, std::uint64_t seed, bool signs = false) {
  SyntheticSpec spec;
  spec.n = n;
  spec.l = l;
  spec.density = 0.6;
  spec.noise = 0.3;
  spec.seed = seed;
  spec.kind = signs ? SyntheticKind::Logistic : SyntheticKind::Lasso;
  return gen_synthetic(spec).data;
}

std::vector<double> dense_grad(const CompositeProblem& p, std::size_t i,
                               const std::vector<double>& x) {
  std::vector<double> g(p.dim());
  p.grad_component_dense(i, x, g);
  return g;
}

}  // namespace

TEST_CASE("grad_component squared loss closed form") {
  auto p = make_problem(single_row({1.0, 0.0}, 0.0), LossKind::Squared, {}, 2);
  auto g = dense_grad(p, 0, {2.0, 5.0});
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == 0.0);

  // sparse form keeps support of a_i
  auto sg = p.grad_component(0, {2.0, 5.0});
  REQUIRE(sg.entries.size() == 1);
  CHECK(sg.entries[0].index == 0);
  CHECK(sg.entries[0].value == doctest::Approx(2.0));
}

TEST_CASE("grad_component vanishes at a component minimizer") {
  auto p = make_problem(single_row({2.0, -1.0}, 3.0), LossKind::Squared, {}, 1);
  // a'x = 3 => residual 0
  auto g = dense_grad(p, 0, {1.0, -1.0});
  CHECK(std::fabs(g[0]) < 1e-15);
  CHECK(std::fabs(g[1]) < 1e-15);
}

TEST_CASE("grad_component logistic at zero") {
  auto p = make_problem(single_row({1.0, 1.0}, 1.0), LossKind::Logistic, {}, 2);
  auto g = dense_grad(p, 0, {0.0, 0.0});
  CHECK(g[0] == doctest::Approx(-0.5));
  CHECK(g[1] == doctest::Approx(-0.5));

  auto fd = oracles::finite_diff_gradient(
      [&](const std::vector<double>& x) { return p.component_value(0, x); }, {0.0, 0.0});
  CHECK(std::fabs(fd[0] - g[0]) < 1e-8);
  CHECK(std::fabs(fd[1] - g[1]) < 1e-8);
}

TEST_CASE("grad_component argument checks") {
  auto p = make_problem(single_row({1.0, 0.0}, 0.0), LossKind::Squared, {}, 2);
  CHECK_THROWS(p.grad_component(5, {0.0, 0.0}));
  CHECK_THROWS(p.grad_component(0, {0.0, 0.0, 0.0}));
}

TEST_CASE("grad_full is the component mean") {
  DatasetMatrix d;
  d.dimension = 2;
  d.rows.push_back({{{0, 1.0}}});
  d.labels.push_back(-1.0);  // grad = a*(a'x - b) = (1,0) at x=0
  d.rows.push_back({{{1, 1.0}}});
  d.labels.push_back(-1.0);
  auto p = make_problem(std::move(d), LossKind::Squared, {}, 2);
  auto g = p.grad_full({0.0, 0.0});
  CHECK(g[0] == doctest::Approx(0.5));
  CHECK(g[1] == doctest::Approx(0.5));
}

TEST_CASE("grad_full matches sequential summation on a random instance") {
  auto data = rand_instance(5, 6, 7);
  auto p = make_problem(data, LossKind::Squared, {}, 3);
  std::vector<double> x(6);
  Rng rng(3, 0, 0);
  for (auto& c : x) c = rng.normal();

  std::vector<double> manual(6, 0.0);
  for (std::size_t i = 0; i < 5; ++i) {
    auto gi = dense_grad(p, i, x);
    for (std::size_t c = 0; c < 6; ++c) manual[c] += gi[c] / 5.0;
  }
  auto g = p.grad_full(x);
  for (std::size_t c = 0; c < 6; ++c) CHECK(std::fabs(g[c] - manual[c]) < 1e-12);
}

TEST_CASE("prox closed forms") {
  Regularizer l1{RegKind::L1, 1.0, 0.0};
  CHECK(l1.prox({3.0}, 1.0)[0] == doctest::Approx(2.0));
  CHECK(l1.prox({-0.5}, 1.0)[0] == 0.0);

  Regularizer gl2{RegKind::GroupL2, 1.0, 0.0};
  auto u = gl2.prox({3.0, 4.0}, 1.0);
  CHECK(u[0] == doctest::Approx(2.4));
  CHECK(u[1] == doctest::Approx(3.2));
  // zero input maps to zero, no division by zero
  auto z = gl2.prox({0.0, 0.0}, 1.0);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);

  Regularizer en{RegKind::ElasticNet, 1.0, 0.5};
  auto e = en.prox({3.0}, 1.0);
  CHECK(e[0] == doctest::Approx(2.0 / 1.5));

  CHECK_THROWS(l1.prox({1.0}, 0.0));
  CHECK_THROWS(l1.prox({1.0}, -1.0));
}

TEST_CASE("group-L2 prox matches the brute-force grid minimizer") {
  Regularizer gl2{RegKind::GroupL2, 1.0, 0.0};
  std::vector<double> v{3.0, 4.0};
  double step = 1.0;
  auto u = gl2.prox(v, step);
  auto obj = [&](const std::vector<double>& c) {
    double q = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) q += (c[i] - v[i]) * (c[i] - v[i]);
    return step * gl2.block_value(c) + 0.5 * q;
  };
  auto brute = oracles::grid_minimize(obj, v, 6.0);
  CHECK(oracles::dist2(u, brute) < 1e-6);
}

TEST_CASE("prox optimality under random perturbations") {
  Rng rng(11, 0, 0);
  for (RegKind kind : {RegKind::L1, RegKind::GroupL2, RegKind::ElasticNet}) {
    Regularizer reg{kind, 0.0, 0.0};
    for (int trial = 0; trial < 100; ++trial) {
      reg.lambda = rng.uniform(0.01, 3.0);
      reg.lambda2 = rng.uniform(0.01, 2.0);
      double step = rng.uniform(0.05, 2.0);
      std::size_t d = 1 + rng.next_below(4);
      std::vector<double> v(d);
      for (auto& c : v) c = 3.0 * rng.normal();
      auto u = reg.prox(v, step);
      auto obj = [&](const std::vector<double>& c) {
        double q = 0.0;
        for (std::size_t i = 0; i < d; ++i) q += (c[i] - v[i]) * (c[i] - v[i]);
        return step * reg.block_value(c) + 0.5 * q;
      };
      double fu = obj(u);
      for (int probe = 0; probe < 1000; ++probe) {
        auto w = u;
        for (auto& c : w) c += 1e-3 * rng.normal();
        CHECK(obj(w) - fu >= -1e-10);
      }
    }
  }
}

TEST_CASE("prox nonexpansiveness") {
  Rng rng(13, 0, 0);
  for (RegKind kind : {RegKind::L1, RegKind::GroupL2, RegKind::ElasticNet}) {
    for (int trial = 0; trial < 200; ++trial) {
      Regularizer reg{kind, rng.uniform(0.01, 3.0), rng.uniform(0.01, 2.0)};
      double step = rng.uniform(0.05, 2.0);
      std::size_t d = 1 + rng.next_below(5);
      std::vector<double> v1(d), v2(d);
      for (auto& c : v1) c = 3.0 * rng.normal();
      for (auto& c : v2) c = 3.0 * rng.normal();
      auto u1 = reg.prox(v1, step);
      auto u2 = reg.prox(v2, step);
      CHECK(oracles::dist2(u1, u2) <= oracles::dist2(v1, v2) + 1e-12);
    }
  }
}

TEST_CASE("objective values") {
  // residual zero, no regularizer
  auto p0 = make_problem(single_row({2.0, -1.0}, 3.0), LossKind::Squared, {}, 1);
  CHECK(p0.objective({1.0, -1.0}) == doctest::Approx(0.0));

  // f = 0 (empty row, zero label), L1 with lambda = 2
  DatasetMatrix d;
  d.dimension = 2;
  d.rows.push_back({});
  d.labels.push_back(0.0);
  auto p1 = make_problem(std::move(d), LossKind::Squared, {RegKind::L1, 2.0, 0.0}, 2);
  CHECK(p1.objective({1.0, -3.0}) == doctest::Approx(8.0));
}

TEST_CASE("objective matches independent recomputation from raw data") {
  auto data = rand_instance(8, 5, 21);
  Regularizer reg{RegKind::L1, 0.3, 0.0};
  auto p = make_problem(data, LossKind::Squared, reg, 2, 0.05);
  std::vector<double> x(5);
  Rng rng(4, 0, 0);
  for (auto& c : x) c = rng.normal();

  double manual = 0.0;
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    double dot = 0.0;
    for (const auto& e : data.rows[i].entries) dot += e.value * x[e.index];
    double r = dot - data.labels[i];
    manual += 0.5 * r * r;
  }
  manual /= static_cast<double>(data.num_rows());
  for (double c : x) manual += 0.5 * 0.05 * c * c + 0.3 * std::fabs(c);
  CHECK(std::fabs(p.objective(x) - manual) < 1e-12);
}

TEST_CASE("finite-difference consistency for both losses") {
  for (LossKind loss : {LossKind::Squared, LossKind::Logistic}) {
    auto data = rand_instance(10, 6, 31, loss == LossKind::Logistic);
    auto p = make_problem(data, loss, {}, 3, 0.1);
    Rng rng(5, 0, 0);
    for (int trial = 0; trial < 200; ++trial) {
      std::size_t i = rng.next_below(10);
      std::vector<double> x(6);
      for (auto& c : x) c = 2.0 * rng.normal();
      auto g = dense_grad(p, i, x);
      auto fd = oracles::finite_diff_gradient(
          [&](const std::vector<double>& y) { return p.component_value(i, y); }, x);
      double scale = std::max(oracles::norm2(g), 1.0);
      CHECK(oracles::dist2(g, fd) / scale < 1e-5);
    }
  }
}

TEST_CASE("partition slice/scatter round trip") {
  BlockPartition part(6, {{4, 1}, {0, 3}, {2, 5}});
  std::vector<double> x{10, 11, 12, 13, 14, 15};
  std::vector<double> rebuilt(6, 0.0);
  for (std::size_t j = 0; j < part.num_blocks(); ++j)
    part.scatter(part.slice(x, j), j, rebuilt);
  CHECK(rebuilt == x);
  CHECK(part.block_of(4) == 0);
  CHECK(part.pos_in_block(4) == 1);  // group {4,1} sorts to {1,4}
}

TEST_CASE("partition validation") {
  CHECK_THROWS(BlockPartition(3, {{0, 1}}));           // index 2 uncovered
  CHECK_THROWS(BlockPartition(3, {{0, 1}, {1, 2}}));   // overlap
  CHECK_THROWS(BlockPartition(3, {{0, 1, 2}, {}}));    // empty group
  CHECK_THROWS(BlockPartition(3, {{0, 1, 5}}));        // out of range
  CHECK_THROWS(BlockPartition::contiguous(4, 0));
  CHECK_THROWS(BlockPartition::contiguous(4, 9));
}

TEST_CASE("dataset validation") {
  DatasetMatrix d;
  d.dimension = 3;
  d.rows.push_back({{{1, 1.0}, {1, 2.0}}});
  d.labels.push_back(1.0);
  CHECK_THROWS(d.validate());

  DatasetMatrix e;
  e.dimension = 2;
  e.rows.push_back({{{0, 1.0}}});
  e.labels.push_back(0.5);  // invalid logistic label
  CHECK_THROWS(make_problem(e, LossKind::Logistic, {}, 1));
}
