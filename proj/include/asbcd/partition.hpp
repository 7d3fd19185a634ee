#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace asbcd {

// Partition of the n coordinates into k disjoint groups. Groups are stored as
// sorted index arrays; block_of maps a coordinate back to its group.
class BlockPartition {
 public:
  BlockPartition(std::size_t n, std::vector<std::vector<int>> groups)
      : n_(n), groups_(std::move(groups)) {
    if (n_ == 0) throw std::invalid_argument("BlockPartition: n must be positive");
    if (groups_.empty()) throw std::invalid_argument("BlockPartition: need at least one group");
    block_of_.assign(n_, -1);
    pos_in_block_.assign(n_, -1);
    for (std::size_t j = 0; j < groups_.size(); ++j) {
      auto& g = groups_[j];
      if (g.empty()) throw std::invalid_argument("BlockPartition: empty group " + std::to_string(j));
      std::sort(g.begin(), g.end());
      for (int idx : g) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= n_)
          throw std::invalid_argument("BlockPartition: index out of range");
        if (block_of_[idx] != -1)
          throw std::invalid_argument("BlockPartition: index " + std::to_string(idx) +
                                      " appears in more than one group");
        block_of_[idx] = static_cast<int>(j);
      }
      for (std::size_t t = 0; t < g.size(); ++t) pos_in_block_[g[t]] = static_cast<int>(t);
    }
    for (std::size_t i = 0; i < n_; ++i)
      if (block_of_[i] == -1)
        throw std::invalid_argument("BlockPartition: index " + std::to_string(i) + " not covered");
  }

  // k contiguous groups of (nearly) equal size; the last group takes the remainder.
  static BlockPartition contiguous(std::size_t n, std::size_t k) {
    if (k == 0 || k > n) throw std::invalid_argument("BlockPartition: need 1 <= k <= n");
    std::vector<std::vector<int>> groups(k);
    std::size_t base = n / k;
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t lo = j * base;
      std::size_t hi = (j + 1 == k) ? n : lo + base;
      for (std::size_t c = lo; c < hi; ++c) groups[j].push_back(static_cast<int>(c));
    }
    return BlockPartition(n, std::move(groups));
  }

  std::size_t dim() const { return n_; }
  std::size_t num_blocks() const { return groups_.size(); }
  const std::vector<int>& group(std::size_t j) const { return groups_[j]; }
  int block_of(int coord) const { return block_of_[coord]; }
  int pos_in_block(int coord) const { return pos_in_block_[coord]; }

  // Gather x restricted to group j.
  std::vector<double> slice(const std::vector<double>& x, std::size_t j) const {
    const auto& g = groups_[j];
    std::vector<double> out(g.size());
    for (std::size_t t = 0; t < g.size(); ++t) out[t] = x[g[t]];
    return out;
  }

  void scatter(const std::vector<double>& sub, std::size_t j, std::vector<double>& x) const {
    const auto& g = groups_[j];
    for (std::size_t t = 0; t < g.size(); ++t) x[g[t]] = sub[t];
  }

 private:
  std::size_t n_;
  std::vector<std::vector<int>> groups_;
  std::vector<int> block_of_;
  std::vector<int> pos_in_block_;
};

}  // namespace asbcd
