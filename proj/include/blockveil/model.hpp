#pragma once

// Core protocol objects: the secret block structure, the public channel
// matrix, block-sparse messages, and their sampling routines. All sampling
// is driven by an explicit Rng; everything here is a pure function of its
// inputs and the values are immutable once built, so they can be shared
// freely across trial workers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockveil/rng.hpp"

namespace blockveil {

// Dimensions and rates of one protocol instance. alpha = m / (p * n) is the
// measurement budget per expected nonzero coordinate; the scheme needs
// alpha > 1 to be identifiable for the legitimate receiver.
struct ProtocolParams {
  int n = 0;        // signal length
  int m = 0;        // measurement count, m < n
  int d = 0;        // block size, d | n
  int r = 0;        // block count, n / d
  double p = 0.0;   // block activation probability
  double alpha = 0.0;

  void validate() const {
    if (n <= 0 || m <= 0 || d <= 0 || r <= 0)
      throw std::invalid_argument("ProtocolParams: dimensions must be positive");
    if (static_cast<long long>(r) * d != n)
      throw std::invalid_argument("ProtocolParams: n must equal r*d");
    if (m >= n) throw std::invalid_argument("ProtocolParams: requires m < n");
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("ProtocolParams: p must lie in [0,1]");
    if (p > 0.0) {
      const double implied = static_cast<double>(m) / (p * n);
      if (std::abs(implied - alpha) > 1e-9 * std::max(1.0, std::abs(alpha)))
        throw std::invalid_argument("ProtocolParams: alpha != m/(p*n)");
    }
  }
};

// Partition of [0, n) into r blocks of equal size d. Block ids are 0-based
// internally; the serialized format presents them 1-based.
class BlockStructure {
 public:
  BlockStructure() = default;

  BlockStructure(int n, std::vector<int> assignment) : n_(n), assignment_(std::move(assignment)) {
    if (n_ <= 0 || static_cast<int>(assignment_.size()) != n_)
      throw std::invalid_argument("BlockStructure: assignment length must equal n");
    r_ = *std::max_element(assignment_.begin(), assignment_.end()) + 1;
    if (r_ <= 0 || n_ % r_ != 0)
      throw std::invalid_argument("BlockStructure: block count must divide n");
    d_ = n_ / r_;
    blocks_.assign(r_, {});
    for (int i = 0; i < n_; ++i) {
      const int b = assignment_[i];
      if (b < 0 || b >= r_) throw std::invalid_argument("BlockStructure: block id out of range");
      blocks_[b].push_back(i);
    }
    for (const auto& blk : blocks_)
      if (static_cast<int>(blk.size()) != d_)
        throw std::invalid_argument("BlockStructure: blocks must have equal size");
  }

  int size() const { return n_; }
  int block_count() const { return r_; }
  int block_size() const { return d_; }
  int block_of(int i) const { return assignment_[i]; }
  const std::vector<int>& assignment() const { return assignment_; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }

  friend bool operator==(const BlockStructure& a, const BlockStructure& b) {
    return a.n_ == b.n_ && a.assignment_ == b.assignment_;
  }

 private:
  int n_ = 0;
  int r_ = 0;
  int d_ = 0;
  std::vector<int> assignment_;
  std::vector<std::vector<int>> blocks_;  // indices per block, ascending
};

// True when two structures induce the same partition, ignoring block labels.
inline bool same_partition(const BlockStructure& a, const BlockStructure& b) {
  if (a.size() != b.size() || a.block_count() != b.block_count()) return false;
  const int n = a.size();
  std::vector<int> map_ab(a.block_count(), -1);
  std::vector<int> map_ba(b.block_count(), -1);
  for (int i = 0; i < n; ++i) {
    const int ba = a.block_of(i), bb = b.block_of(i);
    if (map_ab[ba] == -1) map_ab[ba] = bb;
    if (map_ba[bb] == -1) map_ba[bb] = ba;
    if (map_ab[ba] != bb || map_ba[bb] != ba) return false;
  }
  return true;
}

// Uniformly random equal-size partition: a uniform permutation of [0, n)
// cut into consecutive chunks of d.
inline BlockStructure sample_block_structure(int n, int d, Rng& rng) {
  if (n <= 0 || d <= 0 || n % d != 0)
    throw std::invalid_argument("sample_block_structure: d must divide n");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> assignment(n);
  const int r = n / d;
  for (int b = 0; b < r; ++b)
    for (int k = 0; k < d; ++k) assignment[perm[b * d + k]] = b;
  return BlockStructure(n, std::move(assignment));
}

// N x N binary matrix with 1 at (i,j) iff i and j share a block.
inline Eigen::MatrixXd indicator_matrix(const BlockStructure& bs) {
  const int n = bs.size();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (const auto& blk : bs.blocks())
    for (int i : blk)
      for (int j : blk) b(i, j) = 1.0;
  return b;
}

// Channel matrix with i.i.d. N(0, 1/m) entries; the protocol needs an
// underdetermined system, hence m < n.
inline Eigen::MatrixXd sample_channel(int m, int n, Rng& rng) {
  if (m <= 0 || m >= n) throw std::invalid_argument("sample_channel: requires 0 < m < n");
  Eigen::MatrixXd a(m, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = scale * rng.gaussian();
  return a;
}

// Block-sparse message: each block is zero with probability 1-p, otherwise
// filled with i.i.d. standard Gaussians.
struct Message {
  Eigen::VectorXd values;
  std::vector<int> active_blocks;  // ascending block ids

  int block_l0_norm() const { return static_cast<int>(active_blocks.size()); }
};

inline Message sample_message(const BlockStructure& bs, double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("sample_message: p must lie in [0,1]");
  Message msg;
  msg.values = Eigen::VectorXd::Zero(bs.size());
  for (int b = 0; b < bs.block_count(); ++b) {
    if (!rng.bernoulli(p)) continue;
    msg.active_blocks.push_back(b);
    for (int i : bs.blocks()[b]) msg.values(i) = rng.gaussian();
  }
  return msg;
}

// Noiseless linear channel output y = A x.
inline Eigen::VectorXd transmit(const Eigen::MatrixXd& a, const Eigen::VectorXd& x) {
  if (a.cols() != x.size()) throw std::invalid_argument("transmit: dimension mismatch");
  return a * x;
}

// Parameter selection for a target ratio alpha > 1: p = m/(alpha*n) and the
// smallest divisor of n no smaller than both ceil(m/(alpha*n)) and a
// configurable floor (default 2).
inline ProtocolParams select_params(int m, int n, double alpha, int min_block_size = 2) {
  if (m <= 0 || m >= n) throw std::invalid_argument("select_params: requires 0 < m < n");
  if (!(alpha > 1.0))
    throw std::invalid_argument("select_params: alpha must be greater than 1 for identifiability");
  if (min_block_size < 1) throw std::invalid_argument("select_params: invalid block-size floor");
  const double p = static_cast<double>(m) / (alpha * n);
  const int need = std::max(static_cast<int>(std::ceil(m / (alpha * n))), min_block_size);
  int d = 0;
  for (int cand = need; cand <= n; ++cand) {
    if (n % cand == 0) {
      d = cand;
      break;
    }
  }
  if (d == 0) throw std::invalid_argument("select_params: no admissible block size");
  ProtocolParams params{n, m, d, n / d, p, alpha};
  params.validate();
  return params;
}

}  // namespace blockveil
