#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "asbcd/asbcd.hpp"

using namespace asbcd;

namespace {

struct ProblemOpts {
  std::string data_path;
  std::string synthetic = "auto";  // used when no --data; auto follows --loss
  std::size_t n = 1000;
  std::size_t l = 500;
  double density = 0.05;
  double noise = 0.1;
  std::string loss = "squared";
  std::string reg = "l1";
  double lambda = 0.01;
  double lambda2 = 0.0;
  long blocks = 100;
  double ridge = -1.0;  // < 0: take the synthetic suggestion (or 0 for files)
  std::uint64_t seed = 0;
};

struct SolveOpts {
  int threads = 1;
  int epochs = 20;
  long inner = 1000;
  int batch = 1;
  std::string gamma = "auto";
  double rho = 2.0;
  long tau = 0;
  int delay = -1;
  std::string trace_path;
  std::string out_path;
  std::string fstar = "";  // number, or "auto" to compute a reference value
  std::string format = "text";
};

void add_problem_opts(CLI::App* cmd, ProblemOpts& o) {
  cmd->add_option("--data", o.data_path, "LIBSVM input file (omit to use a synthetic instance)");
  cmd->add_option("--synthetic", o.synthetic, "synthetic kind: lasso|strongly_convex|logistic")
      ->check(CLI::IsMember({"auto", "lasso", "strongly_convex", "logistic"}));
  cmd->set_config("--config");
  cmd->add_option("--n", o.n, "synthetic dimension");
  cmd->add_option("--l", o.l, "synthetic component count");
  cmd->add_option("--density", o.density, "synthetic row density in (0,1]");
  cmd->add_option("--noise", o.noise, "synthetic label noise");
  cmd->add_option("--loss", o.loss, "loss: squared|logistic")
      ->check(CLI::IsMember({"squared", "logistic"}));
  cmd->add_option("--reg", o.reg, "regularizer: none|l1|group_l2|elastic_net")
      ->check(CLI::IsMember({"none", "l1", "group_l2", "elastic_net"}));
  cmd->add_option("--lambda", o.lambda, "regularization weight");
  cmd->add_option("--lambda2", o.lambda2, "elastic-net quadratic weight");
  cmd->add_option("--blocks", o.blocks, "number of contiguous coordinate blocks");
  cmd->add_option("--ridge", o.ridge, "ridge added to the smooth part (default: auto)");
  cmd->add_option("--seed", o.seed, "RNG seed (synthetic data and solver streams)");
}

struct BuiltProblem {
  CompositeProblem problem;
  LipschitzEstimates lip;
  std::vector<std::string> spec_lines;
};

BuiltProblem build_problem(const ProblemOpts& o) {
  DatasetMatrix data;
  double ridge = std::max(o.ridge, 0.0);
  std::vector<std::string> lines;
  if (!o.data_path.empty()) {
    data = load_libsvm(o.data_path);
    lines.push_back("data=" + o.data_path);
  } else {
    SyntheticSpec spec;
    spec.n = o.n;
    spec.l = o.l;
    spec.density = o.density;
    spec.noise = o.noise;
    spec.seed = o.seed;
    std::string kind = o.synthetic;
    if (kind == "auto") kind = o.loss == "logistic" ? "logistic" : "lasso";
    if (kind == "strongly_convex")
      spec.kind = SyntheticKind::StronglyConvex;
    else if (kind == "logistic")
      spec.kind = SyntheticKind::Logistic;
    auto inst = gen_synthetic(spec);
    data = std::move(inst.data);
    if (o.ridge < 0.0) ridge = inst.ridge;
    lines.push_back("synthetic=" + kind);
    lines.push_back("n=" + std::to_string(o.n));
    lines.push_back("l=" + std::to_string(o.l));
    lines.push_back("density=" + format_double(o.density));
    lines.push_back("noise=" + format_double(o.noise));
  }
  std::size_t n = data.dimension;
  if (o.blocks < 1 || static_cast<std::size_t>(o.blocks) > n)
    throw std::invalid_argument("--blocks must be in [1, dimension]");

  RegKind rk = RegKind::None;
  if (o.reg == "l1")
    rk = RegKind::L1;
  else if (o.reg == "group_l2")
    rk = RegKind::GroupL2;
  else if (o.reg == "elastic_net")
    rk = RegKind::ElasticNet;
  LossKind loss = o.loss == "logistic" ? LossKind::Logistic : LossKind::Squared;

  CompositeProblem problem(std::move(data), loss, {rk, o.lambda, o.lambda2},
                           BlockPartition::contiguous(n, static_cast<std::size_t>(o.blocks)),
                           ridge);
  auto lip = estimate_closed_form(problem);

  lines.push_back("loss=" + o.loss);
  lines.push_back("reg=" + o.reg);
  lines.push_back("lambda=" + format_double(o.lambda));
  if (rk == RegKind::ElasticNet) lines.push_back("lambda2=" + format_double(o.lambda2));
  lines.push_back("blocks=" + std::to_string(o.blocks));
  lines.push_back("ridge=" + format_double(ridge));
  lines.push_back("seed=" + std::to_string(o.seed));
  lines.push_back("l_nor=" + format_double(lip.l_nor));
  lines.push_back("l_res=" + format_double(lip.l_res));
  lines.push_back("l_max=" + format_double(lip.l_max));
  return {std::move(problem), lip, std::move(lines)};
}

double resolve_gamma_opt(const SolveOpts& so, const ProblemOpts& po, const LipschitzEstimates& lip,
                         bool* from_theory = nullptr) {
  if (so.gamma != "auto") {
    double g = std::stod(so.gamma);
    if (!(g >= 0.0)) throw std::invalid_argument("--gamma must be nonnegative or 'auto'");
    if (from_theory) *from_theory = false;
    return g;
  }
  TheoryParams tp;
  tp.rho = so.rho;
  tp.tau = so.tau;
  tp.m = so.inner;
  tp.k = po.blocks;
  tp.lambda_res = lip.lambda_res();
  tp.lambda_nor = lip.lambda_nor();
  tp.l_max = lip.l_max;
  auto r = resolve_gamma(tp);
  if (!r.from_theory)
    std::cerr << "warning: step-size bound infeasible for k=" << po.blocks
              << "; falling back to gamma=" << format_double(r.gamma) << "\n";
  if (from_theory) *from_theory = r.from_theory;
  return r.gamma;
}

int cmd_solve(const ProblemOpts& po, const SolveOpts& so) {
  if (so.format != "text")
    throw std::invalid_argument("--format: only 'text' solution output is supported");
  auto built = build_problem(po);

  SolverConfig cfg;
  cfg.threads = so.threads;
  cfg.epochs = so.epochs;
  cfg.inner_iters = so.inner;
  cfg.minibatch = so.batch;
  cfg.l_max = built.lip.l_max;
  cfg.seed = po.seed;
  cfg.max_extra_staleness = so.delay;
  bool from_theory = false;
  cfg.gamma = resolve_gamma_opt(so, po, built.lip, &from_theory);

  if (!so.fstar.empty()) {
    if (so.fstar == "auto") {
      auto ha = solve_high_accuracy(built.problem);
      cfg.f_star = ha.f_star;
      if (!ha.converged) std::cerr << "warning: F* reference did not fully stabilize\n";
    } else {
      cfg.f_star = std::stod(so.fstar);
    }
  }

  auto preamble = built.spec_lines;
  preamble.push_back("threads=" + std::to_string(so.threads));
  preamble.push_back("epochs=" + std::to_string(so.epochs));
  preamble.push_back("inner=" + std::to_string(so.inner));
  preamble.push_back("batch=" + std::to_string(so.batch));
  preamble.push_back("gamma=" + format_double(cfg.gamma) +
                     (so.gamma == "auto" ? (from_theory ? " (auto)" : " (auto, fallback)") : ""));
  preamble.push_back("rho=" + format_double(so.rho));
  preamble.push_back("tau=" + std::to_string(so.tau));
  preamble.push_back("delay=" + std::to_string(so.delay));
  if (std::isfinite(cfg.f_star)) preamble.push_back("f_star=" + format_double(cfg.f_star));

  Solver solver(built.problem, cfg);
  auto res = solver.run();

  std::cout << "epochs=" << so.epochs << " inner=" << res.trace.records.back().inner_iters
            << " objective=" << format_double(res.trace.records.back().objective)
            << " max_staleness=" << res.staleness.max_observed << "\n";
  if (!so.trace_path.empty()) write_trace(res.trace, so.trace_path, preamble);
  if (!so.out_path.empty()) write_vector(res.x, so.out_path);
  return 0;
}

int cmd_bench(const ProblemOpts& po, const SolveOpts& so, const std::string& threads_list,
              const std::string& format) {
  auto built = build_problem(po);
  std::vector<int> counts;
  std::stringstream ss(threads_list);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) counts.push_back(std::stoi(tok));
  if (counts.empty()) throw std::invalid_argument("--threads: expected a comma-separated list");

  SolverConfig cfg;
  cfg.epochs = so.epochs;
  cfg.inner_iters = so.inner;
  cfg.minibatch = so.batch;
  cfg.l_max = built.lip.l_max;
  cfg.seed = po.seed;
  cfg.max_extra_staleness = so.delay;
  cfg.gamma = resolve_gamma_opt(so, po, built.lip);

  double base_ms = 0.0;
  if (format == "table")
    std::printf("%8s %14s %14s %10s %14s\n", "threads", "total_ms", "ms_per_epoch", "speedup",
                "objective");
  else
    std::printf("threads,total_ms,ms_per_epoch,speedup,objective\n");
  for (std::size_t idx = 0; idx < counts.size(); ++idx) {
    cfg.threads = counts[idx];
    Solver solver(built.problem, cfg);
    auto t0 = std::chrono::steady_clock::now();
    auto res = solver.run();
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
    if (idx == 0) base_ms = ms;
    double speedup = base_ms / ms * (static_cast<double>(counts[0]) / 1.0);
    double f = res.trace.records.back().objective;
    if (format == "table")
      std::printf("%8d %14.2f %14.2f %10.2f %14.6g\n", counts[idx], ms, ms / so.epochs, speedup, f);
    else
      std::printf("%d,%.2f,%.2f,%.2f,%.17g\n", counts[idx], ms, ms / so.epochs, speedup, f);
  }
  return 0;
}

int cmd_theory(long blocks, double rho, long tau, long m, double lres, double lnor, double losc,
               double lmax, const std::string& gamma_str, long s, double d0, double gap0) {
  TheoryParams p;
  p.k = blocks;
  p.rho = rho;
  p.tau = tau;
  p.m = m;
  p.lambda_res = lres;
  p.lambda_nor = lnor;
  p.l_osc = losc;
  p.l_max = lmax;
  p.validate();

  std::printf("theta1 = %.17g\n", theta1(rho, tau));
  std::printf("theta2 = %.17g\n", theta2(rho, m));
  std::printf("theta_prime = %.17g\n", theta_prime(rho, tau));
  auto b = gamma_bound(p);
  if (!b.feasible) {
    std::printf("gamma_max = infeasible (need sqrt(k)(1-1/rho) > 4)\n");
  } else {
    std::printf("gamma_max = %.17g\n", b.gamma_max);
    std::printf("rate_condition_ok = %s\n", b.rate_condition_ok ? "yes" : "no");
  }

  double gamma = 0.0;
  if (gamma_str == "auto") {
    if (b.feasible) gamma = 0.9 * b.gamma_max;
  } else {
    gamma = std::stod(gamma_str);
  }
  if (gamma > 0.0) {
    std::printf("gamma = %.17g\n", gamma);
    if (losc > 0.0) std::printf("linear_factor = %.17g\n", linear_rate(p, gamma));
    if (s > 0) std::printf("sublinear_bound = %.17g\n", sublinear_bound(p, gamma, s, d0, gap0));
  }
  return 0;
}

int cmd_validate(const ProblemOpts& po, long trials, std::uint64_t vseed) {
  auto built = build_problem(po);
  const auto& p = built.problem;
  std::printf("l_nor = %.17g\nl_res = %.17g\nl_max = %.17g\n", built.lip.l_nor, built.lip.l_res,
              built.lip.l_max);

  auto rep = validate_by_sampling(p, built.lip, trials, vseed);
  std::printf("sampled ratio max: nor=%.17g res=%.17g max=%.17g\n", rep.max_ratio_nor,
              rep.max_ratio_res, rep.max_ratio_max);
  std::printf("lipschitz sampling: %s\n", rep.pass ? "PASS" : "FAIL");

  // finite-difference gradient check on random components and points
  Rng rng(vseed, 0xfd, 0);
  std::size_t n = p.dim();
  double worst = 0.0;
  for (long t = 0; t < trials; ++t) {
    std::size_t i = rng.next_below(p.num_components());
    std::vector<double> x(n);
    for (auto& c : x) c = rng.normal();
    std::vector<double> g(n);
    p.grad_component_dense(i, x, g);
    for (int probe = 0; probe < 3; ++probe) {
      std::size_t c = rng.next_below(n);
      double h = 1e-6 * std::max(1.0, std::fabs(x[c]));
      std::vector<double> xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      double fd = (p.component_value(i, xp) - p.component_value(i, xm)) / (2.0 * h);
      double denom = std::max({1.0, std::fabs(fd), std::fabs(g[c])});
      worst = std::max(worst, std::fabs(fd - g[c]) / denom);
    }
  }
  bool grad_ok = worst <= 1e-5;
  std::printf("gradient finite-difference worst relative error = %.3g\n", worst);
  std::printf("gradient check: %s\n", grad_ok ? "PASS" : "FAIL");
  return (rep.pass && grad_ok) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous doubly stochastic block coordinate descent with variance reduction"};
  app.require_subcommand(1);

  ProblemOpts po;
  SolveOpts so;

  auto* solve = app.add_subcommand("solve", "run the async solver and write trace + solution");
  add_problem_opts(solve, po);
  solve->add_option("--threads", so.threads, "worker count");
  solve->add_option("--epochs", so.epochs, "outer epochs S");
  solve->add_option("--inner", so.inner, "inner iterations per epoch (total across workers)");
  solve->add_option("--batch", so.batch, "minibatch size |B|");
  solve->add_option("--gamma", so.gamma, "step parameter, a number or 'auto'");
  solve->add_option("--rho", so.rho, "theory constant rho (> 1, used by --gamma auto)");
  solve->add_option("--tau", so.tau, "staleness bound assumed by --gamma auto");
  solve->add_option("--delay", so.delay, "inject extra staleness up to this bound (-1: off)");
  solve->add_option("--trace", so.trace_path, "CSV trace output path");
  solve->add_option("--out", so.out_path, "solution vector output path (one scalar per line)");
  solve->add_option("--fstar", so.fstar, "reference F* for the gap column, a number or 'auto'");
  solve->add_option("--format", so.format, "solution output format (text)");

  std::string bench_threads = "1,2,4";
  std::string bench_format = "table";
  auto* bench = app.add_subcommand("bench", "sweep thread counts and report speedup");
  add_problem_opts(bench, po);
  bench->add_option("--threads", bench_threads, "comma-separated worker counts");
  bench->add_option("--epochs", so.epochs, "outer epochs S");
  bench->add_option("--inner", so.inner, "inner iterations per epoch");
  bench->add_option("--batch", so.batch, "minibatch size |B|");
  bench->add_option("--gamma", so.gamma, "step parameter, a number or 'auto'");
  bench->add_option("--rho", so.rho, "theory constant rho");
  bench->add_option("--tau", so.tau, "staleness bound assumed by --gamma auto");
  bench->add_option("--delay", so.delay, "inject extra staleness up to this bound (-1: off)");
  bench->add_option("--format", bench_format, "table|csv")
      ->check(CLI::IsMember({"table", "csv"}));

  long th_blocks = 100, th_tau = 0, th_m = 1, th_s = 0;
  double th_rho = 2.0, th_lres = 1.0, th_lnor = 1.0, th_losc = 0.0, th_lmax = 1.0;
  double th_d0 = 0.0, th_gap0 = 0.0;
  std::string th_gamma = "auto";
  auto* theory = app.add_subcommand("theory", "evaluate step-size bounds and rate predictors");
  theory->set_config("--config");
  theory->add_option("--blocks", th_blocks, "block count k");
  theory->add_option("--rho", th_rho, "constant rho > 1");
  theory->add_option("--tau", th_tau, "staleness bound tau");
  theory->add_option("--inner", th_m, "inner iterations per epoch m");
  theory->add_option("--lres", th_lres, "Lambda_res = L_res / L_max");
  theory->add_option("--lnor", th_lnor, "Lambda_nor = L_nor / L_max");
  theory->add_option("--losc", th_losc, "optimal strong convexity parameter (0: general convex)");
  theory->add_option("--lmax", th_lmax, "L_max");
  theory->add_option("--gamma", th_gamma, "step parameter for the rate predictors, or 'auto'");
  theory->add_option("--s", th_s, "epochs for the sublinear bound");
  theory->add_option("--d0", th_d0, "||x0 - x*||^2 for the sublinear bound");
  theory->add_option("--gap0", th_gap0, "F(x0) - F* for the sublinear bound");

  long val_trials = 500;
  std::uint64_t val_seed = 0;
  auto* validate = app.add_subcommand("validate", "Lipschitz sampling + finite-difference checks");
  add_problem_opts(validate, po);
  validate->add_option("--trials", val_trials, "sampling trials");
  validate->add_option("--vseed", val_seed, "validation RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(po, so);
    if (bench->parsed()) return cmd_bench(po, so, bench_threads, bench_format);
    if (theory->parsed())
      return cmd_theory(th_blocks, th_rho, th_tau, th_m, th_lres, th_lnor, th_losc, th_lmax,
                        th_gamma, th_s, th_d0, th_gap0);
    if (validate->parsed()) return cmd_validate(po, val_trials, val_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
