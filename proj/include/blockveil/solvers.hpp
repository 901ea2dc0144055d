#pragma once

// Sparse-recovery solvers. The receiver knows the block structure and runs a
// block-aware solver; the eavesdropper's plain solvers are the same
// algorithms with singleton blocks.
//
//  block_omp  greedy pursuit: pick the block whose columns correlate most
//             with the residual, re-fit by least squares on the union of
//             picked blocks, repeat.
//  block_iht  projected gradient: x <- T_k(x + mu A^T(y - Ax)) where T_k
//             keeps the k blocks of largest l2 norm; mu defaults to
//             1/||A||_2^2.
//  block_bp   convex relaxation, min sum_r ||x[r]||_2 s.t. y = Ax, solved by
//             ADMM in the split form used for least-absolute-deviation
//             problems (Boyd et al., "Distributed Optimization and
//             Statistical Learning via ADMM"): alternate a projection onto
//             the affine constraint with a block soft-threshold. A final
//             least-squares polish on the detected support removes the
//             solver-level noise that convex iterates carry.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "blockveil/model.hpp"
#include "blockveil/rng.hpp"

namespace blockveil {

struct SolverConfig {
  int max_iterations = 0;             // 0 = solver-specific default
  double residual_tolerance = 1e-8;   // relative to ||y||
  double step_size = 0.0;             // IHT; 0 = auto (1/||A||_2^2)
  double admm_penalty = 1.0;          // BP
  std::optional<int> sparsity_budget; // IHT block budget, optional OMP cap

  void validate() const {
    if (max_iterations < 0 || residual_tolerance < 0 || step_size < 0 || admm_penalty <= 0)
      throw std::invalid_argument("SolverConfig: nonpositive tolerance or cap");
  }
};

struct RecoveryResult {
  Eigen::VectorXd estimate;
  bool converged = false;
  int iterations_used = 0;
  double residual_norm = 0.0;
  bool rank_deficient = false;           // a least-squares subproblem lost rank
  std::vector<double> residual_history;  // ||y - A x_t|| per iteration
};

// Largest singular value by power iteration on A^T A. The start vector comes
// from a fixed-seed stream so results are reproducible.
inline double spectral_norm(const Eigen::MatrixXd& a, int iterations = 50, double tol = 1e-6) {
  const Eigen::Index n = a.cols();
  if (n == 0 || a.rows() == 0) return 0.0;
  Rng rng(derive_seed(0x5eedf00dULL, "spectral-norm"));
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.gaussian();
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd w = a * v;
    v.noalias() = a.transpose() * w;
    const double nv = v.norm();
    if (nv == 0.0) return 0.0;
    v /= nv;
    const double next = std::sqrt(nv);
    if (std::abs(next - sigma) <= tol * std::max(next, 1.0)) return next;
    sigma = next;
  }
  return sigma;
}

inline BlockStructure singleton_structure(int n) {
  std::vector<int> assignment(n);
  std::iota(assignment.begin(), assignment.end(), 0);
  return BlockStructure(n, std::move(assignment));
}

// success = ||x_hat - x_true|| <= tol * max(||x_true||, 1)
inline bool recovery_success(const Eigen::VectorXd& x_true, const Eigen::VectorXd& x_hat,
                             double tol = 1e-4) {
  if (x_true.size() != x_hat.size())
    throw std::invalid_argument("recovery_success: length mismatch");
  return (x_hat - x_true).norm() <= tol * std::max(x_true.norm(), 1.0);
}

namespace detail {

inline Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& a, const BlockStructure& bs,
                                      const std::vector<int>& blocks) {
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(blocks.size()) * bs.block_size());
  Eigen::Index c = 0;
  for (int b : blocks)
    for (int i : bs.blocks()[b]) sub.col(c++) = a.col(i);
  return sub;
}

inline void scatter_solution(const Eigen::VectorXd& coeffs, const BlockStructure& bs,
                             const std::vector<int>& blocks, Eigen::VectorXd& x) {
  x.setZero();
  Eigen::Index c = 0;
  for (int b : blocks)
    for (int i : bs.blocks()[b]) x(i) = coeffs(c++);
}

inline double block_norm(const Eigen::VectorXd& v, const BlockStructure& bs, int b) {
  double s = 0.0;
  for (int i : bs.blocks()[b]) s += v(i) * v(i);
  return std::sqrt(s);
}

}  // namespace detail

inline RecoveryResult block_omp(const Eigen::VectorXd& y, const Eigen::MatrixXd& a,
                                const BlockStructure& bs, const SolverConfig& cfg = {}) {
  cfg.validate();
  if (a.rows() != y.size() || a.cols() != bs.size())
    throw std::invalid_argument("block_omp: dimension mismatch");
  const int m = static_cast<int>(a.rows());
  const int r = bs.block_count();
  const int d = bs.block_size();
  const int max_iter = cfg.max_iterations > 0 ? cfg.max_iterations : 10 * r;
  const int budget = std::min(cfg.sparsity_budget.value_or(r), r);

  RecoveryResult res;
  res.estimate = Eigen::VectorXd::Zero(bs.size());
  const double ynorm = y.norm();
  if (ynorm == 0.0) {
    res.converged = true;
    return res;
  }

  Eigen::VectorXd residual = y;
  std::vector<int> selected;
  std::vector<char> in_support(r, 0);
  double resnorm = ynorm;
  for (int it = 0; it < max_iter; ++it) {
    if (resnorm <= cfg.residual_tolerance * ynorm) {
      res.converged = true;
      break;
    }
    if (static_cast<int>(selected.size()) >= budget) break;
    if ((static_cast<int>(selected.size()) + 1) * d > m) break;

    const Eigen::VectorXd corr = a.transpose() * residual;
    int best = -1;
    double best_score = 0.0;
    for (int b = 0; b < r; ++b) {
      if (in_support[b]) continue;
      const double score = detail::block_norm(corr, bs, b);
      if (score > best_score) {  // ties keep the lowest block index
        best_score = score;
        best = b;
      }
    }
    if (best < 0 || best_score == 0.0) break;
    selected.push_back(best);
    in_support[best] = 1;

    const Eigen::MatrixXd sub = detail::gather_columns(a, bs, selected);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sub);
    if (cod.rank() < sub.cols()) res.rank_deficient = true;
    const Eigen::VectorXd coeffs = cod.solve(y);
    detail::scatter_solution(coeffs, bs, selected, res.estimate);
    residual = y - sub * coeffs;
    resnorm = residual.norm();
    res.residual_history.push_back(resnorm);
    res.iterations_used = it + 1;
  }
  if (resnorm <= cfg.residual_tolerance * ynorm) res.converged = true;
  res.residual_norm = resnorm;
  return res;
}

inline RecoveryResult block_iht(const Eigen::VectorXd& y, const Eigen::MatrixXd& a,
                                const BlockStructure& bs, const SolverConfig& cfg) {
  cfg.validate();
  if (a.rows() != y.size() || a.cols() != bs.size())
    throw std::invalid_argument("block_iht: dimension mismatch");
  if (!cfg.sparsity_budget)
    throw std::invalid_argument("block_iht: sparsity_budget (block count) is required");
  const int k = std::min(*cfg.sparsity_budget, bs.block_count());
  if (k <= 0) throw std::invalid_argument("block_iht: sparsity_budget must be positive");
  if (k * bs.block_size() > a.rows())
    std::cerr << "block_iht: k*d exceeds the measurement count; recovery is unlikely\n";

  const int max_iter = cfg.max_iterations > 0 ? cfg.max_iterations : 1000;
  const double mu = cfg.step_size > 0 ? cfg.step_size : [&] {
    const double s = spectral_norm(a);
    return s > 0 ? 1.0 / (s * s) : 1.0;
  }();

  RecoveryResult res;
  res.estimate = Eigen::VectorXd::Zero(bs.size());
  const double ynorm = y.norm();
  if (ynorm == 0.0) {
    res.converged = true;
    return res;
  }

  const int r = bs.block_count();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(bs.size());
  Eigen::VectorXd best = x;
  double best_res = ynorm;
  double prev_res = ynorm;
  int growth_streak = 0;
  std::vector<std::pair<double, int>> norms(r);
  for (int it = 0; it < max_iter; ++it) {
    x += mu * (a.transpose() * (y - a * x));
    for (int b = 0; b < r; ++b) norms[b] = {detail::block_norm(x, bs, b), b};
    // keep the k blocks of largest norm; ties resolved toward lower index
    std::stable_sort(norms.begin(), norms.end(), [](const auto& u, const auto& v) {
      return u.first > v.first;
    });
    for (int pos = k; pos < r; ++pos)
      for (int i : bs.blocks()[norms[pos].second]) x(i) = 0.0;

    const double resnorm = (y - a * x).norm();
    res.residual_history.push_back(resnorm);
    res.iterations_used = it + 1;
    if (resnorm < best_res) {
      best_res = resnorm;
      best = x;
    }
    if (resnorm <= cfg.residual_tolerance * ynorm) {
      res.converged = true;
      break;
    }
    growth_streak = resnorm > prev_res ? growth_streak + 1 : 0;
    if (growth_streak >= 10) break;  // divergence
    prev_res = resnorm;
  }
  res.estimate = best;
  res.residual_norm = best_res;
  if (best_res <= cfg.residual_tolerance * ynorm) res.converged = true;
  return res;
}

inline RecoveryResult block_bp(const Eigen::VectorXd& y, const Eigen::MatrixXd& a,
                               const BlockStructure& bs, const SolverConfig& cfg = {}) {
  cfg.validate();
  if (a.rows() != y.size() || a.cols() != bs.size())
    throw std::invalid_argument("block_bp: dimension mismatch");
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  const int r = bs.block_count();
  const int max_iter = cfg.max_iterations > 0 ? cfg.max_iterations : 5000;
  const double rho = cfg.admm_penalty;

  RecoveryResult res;
  res.estimate = Eigen::VectorXd::Zero(n);
  const double ynorm = y.norm();
  if (ynorm == 0.0) {
    res.converged = true;  // zero is feasible with objective zero
    return res;
  }

  // Projection onto {x : Ax = y} via a cached factorization of A A^T.
  Eigen::LDLT<Eigen::MatrixXd> gram(a * a.transpose());
  if (gram.info() != Eigen::Success)
    throw std::runtime_error("block_bp: failed to factor A A^T");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z_old(n), w(n);
  for (int it = 0; it < max_iter; ++it) {
    w = z - u;
    x = w - a.transpose() * gram.solve(a * w - y);
    w = x + u;
    z_old = z;
    for (int b = 0; b < r; ++b) {
      const double nb = detail::block_norm(w, bs, b);
      const double shrink = nb > 1.0 / rho ? 1.0 - 1.0 / (rho * nb) : 0.0;
      for (int i : bs.blocks()[b]) z(i) = shrink * w(i);
    }
    u += x - z;

    res.iterations_used = it + 1;
    res.residual_history.push_back((y - a * x).norm());
    const double scale = std::max({1.0, x.norm(), z.norm()});
    const double primal = (x - z).norm() / scale;
    const double dual = rho * (z - z_old).norm() / scale;
    if (std::max(primal, dual) < cfg.residual_tolerance) {
      res.converged = true;
      break;
    }
  }

  // Least-squares polish on the detected support. The projected iterate x is
  // feasible but dense at solver precision; when the support is identified
  // and has fewer than m columns, the polish recovers the sparse solution to
  // machine precision.
  res.estimate = x;
  double max_bn = 0.0;
  std::vector<double> bn(r);
  for (int b = 0; b < r; ++b) {
    bn[b] = detail::block_norm(z, bs, b);
    max_bn = std::max(max_bn, bn[b]);
  }
  if (max_bn > 0.0) {
    std::vector<int> support;
    for (int b = 0; b < r; ++b)
      if (bn[b] > 1e-6 * max_bn) support.push_back(b);
    if (!support.empty() &&
        static_cast<int>(support.size()) * bs.block_size() < m) {
      const Eigen::MatrixXd sub = detail::gather_columns(a, bs, support);
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sub);
      if (cod.rank() < sub.cols()) res.rank_deficient = true;
      const Eigen::VectorXd coeffs = cod.solve(y);
      if ((y - sub * coeffs).norm() <= 1e-6 * ynorm) {
        detail::scatter_solution(coeffs, bs, support, res.estimate);
      }
    }
  }
  res.residual_norm = (y - a * res.estimate).norm();
  return res;
}

// Plain solvers: the block algorithms run with singleton blocks.
inline RecoveryResult omp(const Eigen::VectorXd& y, const Eigen::MatrixXd& a,
                          const SolverConfig& cfg = {}) {
  return block_omp(y, a, singleton_structure(static_cast<int>(a.cols())), cfg);
}

inline RecoveryResult iht(const Eigen::VectorXd& y, const Eigen::MatrixXd& a,
                          const SolverConfig& cfg) {
  return block_iht(y, a, singleton_structure(static_cast<int>(a.cols())), cfg);
}

inline RecoveryResult bp(const Eigen::VectorXd& y, const Eigen::MatrixXd& a,
                         const SolverConfig& cfg = {}) {
  return block_bp(y, a, singleton_structure(static_cast<int>(a.cols())), cfg);
}

}  // namespace blockveil
