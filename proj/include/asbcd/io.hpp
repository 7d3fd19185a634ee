#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asbcd/problem.hpp"
#include "asbcd/rng.hpp"
#include "asbcd/solver.hpp"

namespace asbcd {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// LIBSVM text format: "<label> <index>:<value> ...", 1-based indices, '#'
// starts a comment. dimension = max index seen unless min_dimension is larger.
inline DatasetMatrix load_libsvm(const std::string& path, std::size_t min_dimension = 0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_libsvm: cannot open " + path);
  DatasetMatrix data;
  std::size_t max_index = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double label;
    if (!(ls >> label)) {
      // blank or comment-only line
      std::string rest;
      if (ls.clear(), std::getline(ls, rest) && rest.find_first_not_of(" \t\r") != std::string::npos)
        throw std::runtime_error("load_libsvm: malformed line " + std::to_string(lineno));
      continue;
    }
    SparseRow row;
    std::string tok;
    int prev = -1;
    while (ls >> tok) {
      auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error("load_libsvm: malformed feature on line " + std::to_string(lineno));
      int idx;
      double val;
      try {
        idx = std::stoi(tok.substr(0, colon));
        val = std::stod(tok.substr(colon + 1));
      } catch (const std::exception&) {
        throw std::runtime_error("load_libsvm: malformed feature on line " + std::to_string(lineno));
      }
      if (idx < 1)
        throw std::runtime_error("load_libsvm: indices are 1-based, line " + std::to_string(lineno));
      if (idx - 1 <= prev)
        throw std::runtime_error("load_libsvm: duplicate or unsorted index on line " +
                                 std::to_string(lineno));
      prev = idx - 1;
      row.entries.push_back({idx - 1, val});
      max_index = std::max(max_index, static_cast<std::size_t>(idx));
    }
    data.rows.push_back(std::move(row));
    data.labels.push_back(label);
  }
  if (data.rows.empty()) throw std::runtime_error("load_libsvm: no data rows in " + path);
  data.dimension = std::max(max_index, min_dimension);
  data.validate();
  return data;
}

inline void save_libsvm(const DatasetMatrix& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_libsvm: cannot open " + path);
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    out << format_double(data.labels[i]);
    for (const auto& e : data.rows[i].entries)
      out << ' ' << (e.index + 1) << ':' << format_double(e.value);
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_libsvm: write failed for " + path);
}

enum class SyntheticKind { Lasso, StronglyConvex, Logistic };

struct SyntheticSpec {
  std::size_t n = 100;
  std::size_t l = 50;
  double density = 0.1;
  double noise = 0.0;
  SyntheticKind kind = SyntheticKind::Lasso;
  std::uint64_t seed = 0;
  double planted_density = 0.1;  // sparsity of the planted solution
};

struct SyntheticInstance {
  DatasetMatrix data;
  std::vector<double> planted;  // x* used to generate labels
  double ridge = 0.0;           // suggested ridge for strongly_convex instances
};

// Sparse design with unit-variance entries and a planted sparse solution;
// labels b = A x* + noise (signs for logistic). strongly_convex requires
// l >= n and suggests a small ridge so f is strongly convex toward S.
inline SyntheticInstance gen_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.l < 1) throw std::invalid_argument("gen_synthetic: n, l must be >= 1");
  if (spec.density <= 0.0 || spec.density > 1.0)
    throw std::invalid_argument("gen_synthetic: density must be in (0,1]");
  if (spec.kind == SyntheticKind::StronglyConvex && spec.l < spec.n)
    throw std::invalid_argument("gen_synthetic: strongly_convex requires l >= n");

  Rng rng(spec.seed, 0x5337, 0);
  SyntheticInstance inst;
  inst.data.dimension = spec.n;
  inst.planted.assign(spec.n, 0.0);
  for (std::size_t c = 0; c < spec.n; ++c)
    if (rng.next_double() < spec.planted_density) inst.planted[c] = rng.normal();
  // guarantee at least one active coordinate
  bool any = false;
  for (double v : inst.planted) any = any || v != 0.0;
  if (!any) inst.planted[0] = 1.0;

  for (std::size_t i = 0; i < spec.l; ++i) {
    SparseRow row;
    for (std::size_t c = 0; c < spec.n; ++c)
      if (spec.density >= 1.0 || rng.next_double() < spec.density)
        row.entries.push_back({static_cast<int>(c), rng.normal()});
    if (row.entries.empty())
      row.entries.push_back({static_cast<int>(rng.next_below(spec.n)), rng.normal()});
    double dot = 0.0;
    for (const auto& e : row.entries) dot += e.value * inst.planted[e.index];
    double b = dot + spec.noise * rng.normal();
    if (spec.kind == SyntheticKind::Logistic) b = (b >= 0.0) ? 1.0 : -1.0;
    inst.data.rows.push_back(std::move(row));
    inst.data.labels.push_back(b);
  }
  if (spec.kind == SyntheticKind::StronglyConvex) inst.ridge = 1e-2;
  inst.data.validate();
  return inst;
}

// CSV trace. Header is fixed; the optional preamble (one '#' comment line per
// entry) lets callers embed the fully resolved run configuration.
inline void write_trace(const Trace& trace, const std::string& path,
                        const std::vector<std::string>& preamble = {}) {
  if (trace.records.empty()) throw std::invalid_argument("write_trace: empty trace");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_trace: cannot open " + path);
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "epoch,inner_iter,time_ms,objective,gap,max_staleness\n";
  for (const auto& r : trace.records) {
    out << r.epoch << ',' << r.inner_iters << ',' << format_double(r.time_ms) << ','
        << format_double(r.objective) << ',';
    if (std::isfinite(r.gap)) out << format_double(r.gap);
    out << ',' << r.max_staleness << '\n';
  }
  if (!out) throw std::runtime_error("write_trace: write failed for " + path);
}

inline void write_vector(const std::vector<double>& x, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_vector: cannot open " + path);
  for (double v : x) out << format_double(v) << '\n';
  if (!out) throw std::runtime_error("write_vector: write failed for " + path);
}

// key=value config file; '#' comments and blank lines allowed. Flags override
// file values at the CLI layer.
inline std::map<std::string, std::string> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("load_config: expected key=value on line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("load_config: empty key on line " + std::to_string(lineno));
    out[key] = val;
  }
  return out;
}

}  // namespace asbcd
