#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "asbcd/partition.hpp"

namespace asbcd {

struct SparseEntry {
  int index;
  double value;
};

// One feature vector, indices strictly increasing.
struct SparseRow {
  std::vector<SparseEntry> entries;

  double dot(const double* x) const {
    double s = 0.0;
    for (const auto& e : entries) s += e.value * x[e.index];
    return s;
  }
  double dot(const std::vector<double>& x) const { return dot(x.data()); }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.value * e.value;
    return s;
  }
};

struct DatasetMatrix {
  std::size_t dimension = 0;
  std::vector<SparseRow> rows;
  std::vector<double> labels;

  std::size_t num_rows() const { return rows.size(); }

  void validate() const {
    if (rows.size() != labels.size())
      throw std::invalid_argument("DatasetMatrix: rows/labels size mismatch");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      int prev = -1;
      for (const auto& e : rows[i].entries) {
        if (e.index <= prev)
          throw std::invalid_argument("DatasetMatrix: unsorted or duplicate index in row " +
                                      std::to_string(i));
        if (static_cast<std::size_t>(e.index) >= dimension)
          throw std::invalid_argument("DatasetMatrix: index out of range in row " +
                                      std::to_string(i));
        prev = e.index;
      }
    }
  }
};

enum class LossKind { Squared, Logistic };

inline const char* loss_name(LossKind k) {
  return k == LossKind::Squared ? "squared" : "logistic";
}

// Stable sigmoid, branch form.
inline double sigmoid(double z) {
  if (z >= 0.0) {
    double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
inline double log1pexp(double z) {
  if (z > 30.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

enum class RegKind { None, L1, GroupL2, ElasticNet };

inline const char* reg_name(RegKind k) {
  switch (k) {
    case RegKind::None: return "none";
    case RegKind::L1: return "l1";
    case RegKind::GroupL2: return "group_l2";
    default: return "elastic_net";
  }
}

// Block separable regularizer g(x) = sum_j g_j(x_{G_j}).
struct Regularizer {
  RegKind kind = RegKind::None;
  double lambda = 0.0;
  double lambda2 = 0.0;  // quadratic part of elastic net

  double block_value(const std::vector<double>& v) const {
    switch (kind) {
      case RegKind::None:
        return 0.0;
      case RegKind::L1: {
        double s = 0.0;
        for (double c : v) s += std::fabs(c);
        return lambda * s;
      }
      case RegKind::GroupL2: {
        double s = 0.0;
        for (double c : v) s += c * c;
        return lambda * std::sqrt(s);
      }
      case RegKind::ElasticNet: {
        double s1 = 0.0, s2 = 0.0;
        for (double c : v) {
          s1 += std::fabs(c);
          s2 += c * c;
        }
        return lambda * s1 + 0.5 * lambda2 * s2;
      }
    }
    return 0.0;
  }

  // argmin_u step*g_j(u) + 0.5*||u - v||^2
  std::vector<double> prox(const std::vector<double>& v, double step) const {
    if (step <= 0.0) throw std::invalid_argument("prox: step must be positive");
    std::vector<double> u(v.size());
    switch (kind) {
      case RegKind::None:
        u = v;
        break;
      case RegKind::L1: {
        double t = step * lambda;
        for (std::size_t i = 0; i < v.size(); ++i)
          u[i] = std::copysign(std::max(std::fabs(v[i]) - t, 0.0), v[i]);
        break;
      }
      case RegKind::GroupL2: {
        double nrm = 0.0;
        for (double c : v) nrm += c * c;
        nrm = std::sqrt(nrm);
        double scale = (nrm == 0.0) ? 0.0 : std::max(0.0, 1.0 - step * lambda / nrm);
        for (std::size_t i = 0; i < v.size(); ++i) u[i] = scale * v[i];
        break;
      }
      case RegKind::ElasticNet: {
        double t = step * lambda;
        double denom = 1.0 + step * lambda2;
        for (std::size_t i = 0; i < v.size(); ++i)
          u[i] = std::copysign(std::max(std::fabs(v[i]) - t, 0.0), v[i]) / denom;
        break;
      }
    }
    return u;
  }
};

// F(x) = (1/l) sum_i f_i(x) + g(x), with f_i(x) = phi(a_i'x, b_i) + (ridge/2)||x||^2
// backed by a sparse dataset. All oracles are read-only and thread-safe.
class CompositeProblem {
 public:
  CompositeProblem(DatasetMatrix data, LossKind loss, Regularizer reg, BlockPartition partition,
                   double ridge = 0.0)
      : data_(std::move(data)),
        loss_(loss),
        reg_(reg),
        partition_(std::move(partition)),
        ridge_(ridge) {
    data_.validate();
    if (data_.dimension != partition_.dim())
      throw std::invalid_argument("CompositeProblem: partition/data dimension mismatch");
    if (data_.num_rows() == 0) throw std::invalid_argument("CompositeProblem: empty dataset");
    if (loss_ == LossKind::Logistic)
      for (double b : data_.labels)
        if (b != 1.0 && b != -1.0)
          throw std::invalid_argument("CompositeProblem: logistic labels must be +/-1");
  }

  std::size_t dim() const { return partition_.dim(); }
  std::size_t num_components() const { return data_.num_rows(); }
  std::size_t num_blocks() const { return partition_.num_blocks(); }
  const BlockPartition& partition() const { return partition_; }
  const DatasetMatrix& data() const { return data_; }
  const Regularizer& regularizer() const { return reg_; }
  LossKind loss() const { return loss_; }
  double ridge() const { return ridge_; }

  // phi'(margin-side scalar): derivative of the loss wrt a_i'x
  double loss_derivative(std::size_t i, double dot) const {
    if (loss_ == LossKind::Squared) return dot - data_.labels[i];
    double b = data_.labels[i];
    return -b * sigmoid(-b * dot);
  }

  double loss_value(std::size_t i, double dot) const {
    if (loss_ == LossKind::Squared) {
      double r = dot - data_.labels[i];
      return 0.5 * r * r;
    }
    return log1pexp(-data_.labels[i] * dot);
  }

  double component_value(std::size_t i, const std::vector<double>& x) const {
    check_component(i, x);
    double v = loss_value(i, data_.rows[i].dot(x));
    if (ridge_ != 0.0) {
      double s = 0.0;
      for (double c : x) s += c * c;
      v += 0.5 * ridge_ * s;
    }
    return v;
  }

  // grad f_i(x), returned sparse when the ridge term is absent
  // (support = support(a_i)); dense otherwise.
  SparseRow grad_component(std::size_t i, const std::vector<double>& x) const {
    check_component(i, x);
    SparseRow out;
    double c = loss_derivative(i, data_.rows[i].dot(x));
    if (ridge_ == 0.0) {
      out.entries.reserve(data_.rows[i].entries.size());
      for (const auto& e : data_.rows[i].entries) out.entries.push_back({e.index, c * e.value});
      return out;
    }
    std::vector<double> dense(x.size(), 0.0);
    for (const auto& e : data_.rows[i].entries) dense[e.index] = c * e.value;
    for (std::size_t t = 0; t < x.size(); ++t) dense[t] += ridge_ * x[t];
    out.entries.reserve(x.size());
    for (std::size_t t = 0; t < x.size(); ++t)
      out.entries.push_back({static_cast<int>(t), dense[t]});
    return out;
  }

  void grad_component_dense(std::size_t i, const std::vector<double>& x,
                            std::vector<double>& out) const {
    check_component(i, x);
    double c = loss_derivative(i, data_.rows[i].dot(x));
    if (ridge_ == 0.0)
      std::fill(out.begin(), out.end(), 0.0);
    else
      for (std::size_t t = 0; t < x.size(); ++t) out[t] = ridge_ * x[t];
    for (const auto& e : data_.rows[i].entries) out[e.index] += c * e.value;
  }

  double smooth_value(const std::vector<double>& x) const {
    check_dim(x);
    double s = 0.0;
    for (std::size_t i = 0; i < num_components(); ++i)
      s += loss_value(i, data_.rows[i].dot(x));
    s /= static_cast<double>(num_components());
    if (ridge_ != 0.0) {
      double q = 0.0;
      for (double c : x) q += c * c;
      s += 0.5 * ridge_ * q;
    }
    return s;
  }

  double nonsmooth_value(const std::vector<double>& x) const {
    check_dim(x);
    double s = 0.0;
    for (std::size_t j = 0; j < num_blocks(); ++j) s += reg_.block_value(partition_.slice(x, j));
    return s;
  }

  double objective(const std::vector<double>& x) const {
    return smooth_value(x) + nonsmooth_value(x);
  }

  std::vector<double> prox_block(std::size_t j, const std::vector<double>& v, double step) const {
    if (j >= num_blocks()) throw std::out_of_range("prox_block: block index out of range");
    if (v.size() != partition_.group(j).size())
      throw std::invalid_argument("prox_block: sub-vector length mismatch");
    return reg_.prox(v, step);
  }

  // Full prox applied block by block.
  std::vector<double> prox_full(const std::vector<double>& v, double step) const {
    check_dim(v);
    std::vector<double> out(v.size());
    for (std::size_t j = 0; j < num_blocks(); ++j)
      partition_.scatter(reg_.prox(partition_.slice(v, j), step), j, out);
    return out;
  }

  // (1/l) sum_i grad f_i(x), deterministic reduction: fixed chunks by component
  // index summed in order, so the result does not depend on how chunks are
  // assigned to workers.
  std::vector<double> grad_full(const std::vector<double>& x) const {
    check_dim(x);
    std::size_t l = num_components();
    std::size_t nchunks = (l + kGradChunk - 1) / kGradChunk;
    std::vector<std::vector<double>> partials(nchunks);
    for (std::size_t c = 0; c < nchunks; ++c) partials[c] = grad_chunk(c, x);
    return combine_chunks(partials, x);
  }

  static constexpr std::size_t kGradChunk = 64;

  std::size_t num_grad_chunks() const { return (num_components() + kGradChunk - 1) / kGradChunk; }

  // Partial sum of component gradients for one fixed chunk (used by the
  // parallel full-gradient path; chunk boundaries never depend on p).
  std::vector<double> grad_chunk(std::size_t chunk, const std::vector<double>& x) const {
    std::size_t lo = chunk * kGradChunk;
    std::size_t hi = std::min(lo + kGradChunk, num_components());
    std::vector<double> acc(x.size(), 0.0);
    for (std::size_t i = lo; i < hi; ++i) {
      double c = loss_derivative(i, data_.rows[i].dot(x));
      for (const auto& e : data_.rows[i].entries) acc[e.index] += c * e.value;
    }
    return acc;
  }

  std::vector<double> combine_chunks(const std::vector<std::vector<double>>& partials,
                                     const std::vector<double>& x) const {
    std::vector<double> g(x.size(), 0.0);
    for (const auto& p : partials)
      for (std::size_t t = 0; t < g.size(); ++t) g[t] += p[t];
    double inv_l = 1.0 / static_cast<double>(num_components());
    for (std::size_t t = 0; t < g.size(); ++t) g[t] *= inv_l;
    if (ridge_ != 0.0)
      for (std::size_t t = 0; t < g.size(); ++t) g[t] += ridge_ * x[t];
    return g;
  }

 private:
  void check_dim(const std::vector<double>& x) const {
    if (x.size() != dim()) throw std::invalid_argument("CompositeProblem: dimension mismatch");
  }
  void check_component(std::size_t i, const std::vector<double>& x) const {
    if (i >= num_components()) throw std::out_of_range("CompositeProblem: component index");
    check_dim(x);
  }

  DatasetMatrix data_;
  LossKind loss_;
  Regularizer reg_;
  BlockPartition partition_;
  double ridge_;
};

}  // namespace asbcd
