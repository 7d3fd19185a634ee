#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "asbcd/problem.hpp"
#include "asbcd/rng.hpp"

namespace asbcd {

// Shared parameter vector. Each cell is an atomic double read and written with
// relaxed per-cell operations; there is no vector-level consistency and no
// lock anywhere on the read/write path.
class SharedVector {
 public:
  explicit SharedVector(std::size_t n) : cells_(n) {
    for (auto& c : cells_) c.store(0.0, std::memory_order_relaxed);
  }

  std::size_t size() const { return cells_.size(); }

  double load(std::size_t i) const { return cells_[i].load(std::memory_order_relaxed); }
  void store(std::size_t i, double v) { cells_[i].store(v, std::memory_order_relaxed); }

  void assign(const std::vector<double>& x) {
    for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i].store(x[i], std::memory_order_relaxed);
  }

  // Lock-free full copy; may interleave concurrent block writes (that is the
  // intended semantics: each cell individually holds some previously written
  // value).
  std::vector<double> inconsistent_read() const {
    std::vector<double> out(cells_.size());
    for (std::size_t i = 0; i < cells_.size(); ++i) out[i] = load(i);
    return out;
  }

 private:
  std::vector<std::atomic<double>> cells_;
};

// Variance-reduced block gradient, Algorithm step "Compute":
//   v_G = (1/|B|) sum_{i in B} grad_G f_i(x_hat)
//       - (1/|B|) sum_{i in B} grad_G f_i(x_tilde) + grad_G f(x_tilde)
// Only block-j components are materialized; x_hat need only be valid on the
// supports of the batch rows and on G_j.
inline std::vector<double> vr_block_gradient(const CompositeProblem& problem,
                                             std::span<const std::size_t> batch, std::size_t j,
                                             const std::vector<double>& x_hat,
                                             const std::vector<double>& snapshot,
                                             const std::vector<double>& full_grad) {
  if (batch.empty()) throw std::invalid_argument("vr_block_gradient: empty batch");
  const auto& part = problem.partition();
  if (j >= part.num_blocks()) throw std::out_of_range("vr_block_gradient: block index");
  const auto& group = part.group(j);

  std::vector<double> out(group.size());
  for (std::size_t t = 0; t < group.size(); ++t) out[t] = full_grad[group[t]];
  double mu = problem.ridge();
  if (mu != 0.0)
    for (std::size_t t = 0; t < group.size(); ++t)
      out[t] += mu * (x_hat[group[t]] - snapshot[group[t]]);

  double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i : batch) {
    if (i >= problem.num_components()) throw std::out_of_range("vr_block_gradient: component");
    const auto& row = problem.data().rows[i];
    double c1 = problem.loss_derivative(i, row.dot(x_hat));
    double c0 = problem.loss_derivative(i, row.dot(snapshot));
    double d = (c1 - c0) * inv_b;
    if (d == 0.0) continue;
    for (const auto& e : row.entries)
      if (part.block_of(e.index) == static_cast<int>(j))
        out[part.pos_in_block(e.index)] += d * e.value;
  }
  return out;
}

// Full gradient with the component chunks processed by `threads` workers.
// Chunk boundaries and the combination order are fixed by component index, so
// the result is bit-identical for any thread count.
inline std::vector<double> grad_full_parallel(const CompositeProblem& problem,
                                              const std::vector<double>& x, int threads) {
  std::size_t nchunks = problem.num_grad_chunks();
  std::vector<std::vector<double>> partials(nchunks);
  if (threads <= 1 || nchunks == 1) {
    for (std::size_t c = 0; c < nchunks; ++c) partials[c] = problem.grad_chunk(c, x);
  } else {
    std::atomic<std::size_t> next{0};
    auto body = [&] {
      for (;;) {
        std::size_t c = next.fetch_add(1);
        if (c >= nchunks) return;
        partials[c] = problem.grad_chunk(c, x);
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  return problem.combine_chunks(partials, x);
}

struct IterationSample {
  int epoch = 0;
  long t = 0;
  std::size_t block = 0;
  std::vector<double> x_hat_block;
  std::vector<double> vhat;
  std::vector<double> updated_block;
  double step = 0.0;  // gamma / L_max
};

struct SolverConfig {
  int threads = 1;
  int epochs = 1;
  long inner_iters = 1;       // total per epoch, split across workers
  bool per_thread_m = false;  // literal reading: every worker runs inner_iters
  int minibatch = 1;
  double gamma = 0.1;
  double l_max = 1.0;
  std::uint64_t seed = 0;
  int max_extra_staleness = -1;  // < 0 disables delay injection
  int trace_every = 1;           // epochs between trace records
  double divergence_factor = 1e6;
  double f_star = std::numeric_limits<double>::quiet_NaN();  // fills the gap column when finite

  // Sequential-only instrumentation hook; ignored when threads > 1.
  long observe_every = 0;
  std::function<void(const IterationSample&)> observer;

  void validate(const CompositeProblem& problem) const {
    if (threads < 1 || epochs < 1 || inner_iters < 1 || minibatch < 1)
      throw std::invalid_argument("SolverConfig: threads/epochs/inner_iters/minibatch must be >= 1");
    if (gamma < 0.0 || !std::isfinite(gamma))
      throw std::invalid_argument("SolverConfig: gamma must be nonnegative and finite");
    if (l_max <= 0.0) throw std::invalid_argument("SolverConfig: l_max must be positive");
    if (static_cast<std::size_t>(minibatch) > problem.num_components() * 1000)
      throw std::invalid_argument("SolverConfig: absurd minibatch");
  }
};

struct TraceRecord {
  int epoch = 0;
  long inner_iters = 0;  // cumulative inner iterations completed
  double time_ms = 0.0;
  double objective = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  long max_staleness = 0;
};

struct Trace {
  std::vector<TraceRecord> records;
};

struct StalenessReport {
  std::vector<long> per_epoch_max;
  std::vector<long> histogram;  // index = staleness, last bucket is overflow
  long max_observed = 0;

  static constexpr std::size_t kHistBuckets = 129;
};

struct SolveResult {
  std::vector<double> x;
  Trace trace;
  StalenessReport staleness;
};

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

struct EpochShared {
  const std::vector<double>* snapshot = nullptr;
  const std::vector<double>* full_grad = nullptr;
  std::atomic<long> iter_counter{0};
  std::atomic<bool> abort{false};
  // read marks of in-flight iterations, one per worker; LONG_MAX when idle.
  // Used by the staleness harness to throttle commits that would push another
  // worker's read past the configured bound.
  std::vector<std::atomic<long>> read_marks;

  explicit EpochShared(int workers) : read_marks(workers) {
    for (auto& m : read_marks) m.store(std::numeric_limits<long>::max(), std::memory_order_relaxed);
  }
};

}  // namespace detail

// The AsySBCDVR engine. Outer epochs snapshot the shared vector and compute
// the full gradient; inner loops are lock-free Read -> Compute -> Update steps
// run by p workers. threads == 1 executes the worker inline, which is also the
// sequential reference path (reads are then always consistent).
class Solver {
 public:
  Solver(const CompositeProblem& problem, SolverConfig config)
      : problem_(problem), cfg_(std::move(config)) {
    cfg_.validate(problem_);
  }

  SolveResult run(const std::vector<double>& x0 = {}) {
    std::size_t n = problem_.dim();
    SharedVector shared(n);
    if (!x0.empty()) {
      if (x0.size() != n) throw std::invalid_argument("Solver::run: x0 dimension mismatch");
      shared.assign(x0);
    }

    SolveResult result;
    result.staleness.histogram.assign(StalenessReport::kHistBuckets, 0);

    auto t_start = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
      return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
    };

    std::vector<double> x = shared.inconsistent_read();
    double f0 = problem_.objective(x);
    if (!std::isfinite(f0)) throw DivergenceError("initial objective is not finite");
    double guard = cfg_.divergence_factor * std::max(std::fabs(f0), 1.0);

    long total_inner = 0;
    push_record(result.trace, 0, total_inner, elapsed_ms(), f0, 0);

    int p = cfg_.threads;
    std::vector<long> quota(p);
    if (cfg_.per_thread_m) {
      for (auto& q : quota) q = cfg_.inner_iters;
    } else {
      long base = cfg_.inner_iters / p, rem = cfg_.inner_iters % p;
      for (int w = 0; w < p; ++w) quota[w] = base + (w < rem ? 1 : 0);
    }

    for (int s = 0; s < cfg_.epochs; ++s) {
      // epoch barrier: freeze the snapshot and the full gradient
      std::vector<double> snapshot = shared.inconsistent_read();
      std::vector<double> full_grad = parallel_full_gradient(snapshot);

      detail::EpochShared ep(p);
      ep.snapshot = &snapshot;
      ep.full_grad = &full_grad;

      std::vector<WorkerStats> stats(p);
      if (p == 1) {
        worker_loop(0, s, quota[0], shared, ep, stats[0]);
      } else {
        std::vector<std::thread> pool;
        pool.reserve(p);
        for (int w = 0; w < p; ++w)
          pool.emplace_back([&, w] { worker_loop(w, s, quota[w], shared, ep, stats[w]); });
        for (auto& th : pool) th.join();
      }

      long epoch_max = 0;
      for (const auto& st : stats) {
        total_inner += st.completed;
        epoch_max = std::max(epoch_max, st.max_staleness);
        for (std::size_t b = 0; b < st.histogram.size(); ++b)
          result.staleness.histogram[b] += st.histogram[b];
      }
      result.staleness.per_epoch_max.push_back(epoch_max);
      result.staleness.max_observed = std::max(result.staleness.max_observed, epoch_max);

      if (ep.abort.load())
        throw DivergenceError("non-finite update at epoch " + std::to_string(s) +
                              "; try a smaller gamma");

      x = shared.inconsistent_read();
      double f = problem_.objective(x);
      if (!std::isfinite(f) || f > guard)
        throw DivergenceError("objective diverged at epoch " + std::to_string(s) + " (F=" +
                              std::to_string(f) + "); try a smaller gamma");
      if ((s + 1) % cfg_.trace_every == 0 || s + 1 == cfg_.epochs)
        push_record(result.trace, s + 1, total_inner, elapsed_ms(), f, epoch_max);
    }

    result.x = std::move(x);
    return result;
  }

 private:
  struct WorkerStats {
    long completed = 0;
    long max_staleness = 0;
    std::vector<long> histogram = std::vector<long>(StalenessReport::kHistBuckets, 0);
  };

  void push_record(Trace& trace, int epoch, long inner, double ms, double f, long stale) const {
    TraceRecord rec;
    rec.epoch = epoch;
    rec.inner_iters = inner;
    rec.time_ms = ms;
    rec.objective = f;
    if (std::isfinite(cfg_.f_star)) rec.gap = f - cfg_.f_star;
    rec.max_staleness = stale;
    trace.records.push_back(rec);
  }

  std::vector<double> parallel_full_gradient(const std::vector<double>& x) const {
    return grad_full_parallel(problem_, x, cfg_.threads);
  }

  void worker_loop(int worker, int epoch, long iters, SharedVector& shared,
                   detail::EpochShared& ep, WorkerStats& stats) {
    const auto& part = problem_.partition();
    std::size_t n = problem_.dim();
    std::size_t l = problem_.num_components();
    std::size_t k = part.num_blocks();
    double step = cfg_.gamma / cfg_.l_max;

    Rng rng(cfg_.seed, static_cast<std::uint64_t>(worker), static_cast<std::uint64_t>(epoch));
    std::vector<double> x_hat(n, 0.0);
    std::vector<std::size_t> batch(cfg_.minibatch);
    if (batch.size() >= l) {
      batch.resize(l);
      std::iota(batch.begin(), batch.end(), std::size_t{0});
    }
    std::vector<int> touched;
    std::vector<double> block_arg;

    bool observe = cfg_.threads == 1 && cfg_.observer && cfg_.observe_every > 0;

    for (long t = 0; t < iters; ++t) {
      if (ep.abort.load(std::memory_order_relaxed)) return;

      // |B| >= l degenerates to the deterministic full batch; otherwise draw
      // uniformly with replacement
      if (batch.size() < l)
        for (auto& b : batch) b = rng.next_below(l);
      std::size_t j = rng.next_below(k);
      const auto& group = part.group(j);

      // Read: gather the touched support of the shared vector, one relaxed
      // load per cell
      touched.clear();
      for (std::size_t b : batch)
        for (const auto& e : problem_.data().rows[b].entries) touched.push_back(e.index);
      touched.insert(touched.end(), group.begin(), group.end());
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

      bool harness = cfg_.max_extra_staleness >= 0 && cfg_.threads > 1;
      long read_mark = ep.iter_counter.load(std::memory_order_acquire);
      if (harness) ep.read_marks[worker].store(read_mark, std::memory_order_release);
      for (int c : touched) x_hat[c] = shared.load(c);

      // optional delay harness: hold the read buffer while other workers make
      // progress, bounded spin so nobody livelocks
      if (cfg_.max_extra_staleness > 0) {
        long extra = static_cast<long>(
            rng.next_below(static_cast<std::uint64_t>(cfg_.max_extra_staleness) + 1));
        long target = read_mark + extra;
        long spins = 0;
        while (ep.iter_counter.load(std::memory_order_acquire) < target && spins < 200000) {
          ++spins;
          if ((spins & 255) == 0) std::this_thread::yield();
        }
      }

      // Compute
      std::vector<double> vhat =
          vr_block_gradient(problem_, batch, j, x_hat, *ep.snapshot, *ep.full_grad);

      // Update: block prox step, per-cell atomic stores, no lock
      block_arg.resize(group.size());
      std::vector<double> u;
      if (cfg_.gamma == 0.0) {
        for (std::size_t c = 0; c < group.size(); ++c) block_arg[c] = x_hat[group[c]];
        u = block_arg;
      } else {
        for (std::size_t c = 0; c < group.size(); ++c)
          block_arg[c] = x_hat[group[c]] - step * vhat[c];
        u = problem_.regularizer().prox(block_arg, step);
      }
      for (double v : u)
        if (!std::isfinite(v)) {
          ep.abort.store(true);
          if (harness)
            ep.read_marks[worker].store(std::numeric_limits<long>::max(),
                                        std::memory_order_release);
          return;
        }
      for (std::size_t c = 0; c < group.size(); ++c) shared.store(group[c], u[c]);

      // Harness-enforced staleness bound: hold the commit while a strictly
      // older in-flight read would be pushed past bound + slack. The worker
      // holding the oldest mark never waits, so progress is guaranteed; the
      // spin cap keeps pathological schedules from hanging the run.
      if (harness) {
        long limit = cfg_.max_extra_staleness + 32;
        long spins = 0;
        for (;;) {
          long cnt = ep.iter_counter.load(std::memory_order_acquire);
          bool must_wait = false;
          for (int w = 0; w < cfg_.threads; ++w) {
            if (w == worker) continue;
            long mark = ep.read_marks[w].load(std::memory_order_acquire);
            if (mark < read_mark && cnt - mark >= limit) must_wait = true;
          }
          if (!must_wait || spins > 2000000) break;
          ++spins;
          if ((spins & 63) == 0) std::this_thread::yield();
        }
      }

      long st = ep.iter_counter.load(std::memory_order_acquire) - read_mark;
      stats.max_staleness = std::max(stats.max_staleness, st);
      std::size_t bucket = std::min<std::size_t>(static_cast<std::size_t>(st),
                                                 StalenessReport::kHistBuckets - 1);
      stats.histogram[bucket]++;
      ep.iter_counter.fetch_add(1, std::memory_order_release);
      if (harness)
        ep.read_marks[worker].store(std::numeric_limits<long>::max(), std::memory_order_release);
      stats.completed++;

      if (observe && (t % cfg_.observe_every) == 0) {
        IterationSample sample;
        sample.epoch = epoch;
        sample.t = t;
        sample.block = j;
        sample.x_hat_block.resize(group.size());
        for (std::size_t c = 0; c < group.size(); ++c) sample.x_hat_block[c] = x_hat[group[c]];
        sample.vhat = vhat;
        sample.updated_block = u;
        sample.step = step;
        cfg_.observer(sample);
      }
    }
  }

  const CompositeProblem& problem_;
  SolverConfig cfg_;
};

}  // namespace asbcd
