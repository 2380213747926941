#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "sdeis/model.hpp"

namespace sdeis {

/// Symmetric block-tridiagonal matrix with K diagonal blocks of size D x D.
/// sub[k] holds block (k+1, k); block (k, k+1) is its transpose.
template <int D>
struct BlockTridiag {
  std::vector<Block<D>> diag;
  std::vector<Block<D>> sub;

  BlockTridiag() = default;
  explicit BlockTridiag(std::size_t k)
      : diag(k, Block<D>::Zero()), sub(k > 0 ? k - 1 : 0, Block<D>::Zero()) {}

  std::size_t blocks() const { return diag.size(); }

  void resize(std::size_t k) {
    diag.assign(k, Block<D>::Zero());
    sub.assign(k > 0 ? k - 1 : 0, Block<D>::Zero());
  }

  void add_identity(double lambda) {
    for (auto& b : diag) b.diagonal().array() += lambda;
  }

  /// y = A x, with x and y laid out as K consecutive states.
  void multiply(std::span<const State<D>> x, std::span<State<D>> y) const {
    const std::size_t k = blocks();
    for (std::size_t i = 0; i < k; ++i) {
      State<D> acc = diag[i] * x[i];
      if (i > 0) acc += sub[i - 1] * x[i - 1];
      if (i + 1 < k) acc += sub[i].transpose() * x[i + 1];
      y[i] = acc;
    }
  }

  /// Dense copy; used by test oracles only.
  Eigen::MatrixXd to_dense() const {
    const Eigen::Index k = static_cast<Eigen::Index>(blocks());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k * D, k * D);
    for (Eigen::Index i = 0; i < k; ++i) {
      out.block(i * D, i * D, D, D) = diag[static_cast<std::size_t>(i)];
      if (i + 1 < k) {
        out.block((i + 1) * D, i * D, D, D) = sub[static_cast<std::size_t>(i)];
        out.block(i * D, (i + 1) * D, D, D) = sub[static_cast<std::size_t>(i)].transpose();
      }
    }
    return out;
  }
};

/// Failure of the block Cholesky at the given block index.
struct NotPositiveDefinite {
  std::size_t block = 0;
};

/// Lower block-bidiagonal factor L with A = L L^T.
template <int D>
class BlockCholesky {
 public:
  std::size_t blocks() const { return diag_.size(); }

  /// log det A.
  double log_det() const {
    double acc = 0.0;
    for (const auto& b : diag_) acc += 2.0 * b.diagonal().array().log().sum();
    return acc;
  }

  /// Solves A x = b in place.
  void solve_in_place(std::span<State<D>> b) const {
    forward_in_place(b);
    backward_in_place(b);
  }

  std::vector<State<D>> solve(std::span<const State<D>> b) const {
    std::vector<State<D>> x(b.begin(), b.end());
    solve_in_place(x);
    return x;
  }

  /// Solves L y = b in place.
  void forward_in_place(std::span<State<D>> b) const {
    const std::size_t k = blocks();
    for (std::size_t i = 0; i < k; ++i) {
      if (i > 0) b[i] -= sub_[i - 1] * b[i - 1];
      diag_[i].template triangularView<Eigen::Lower>().solveInPlace(b[i]);
    }
  }

  /// Solves L^T x = y in place. With y standard normal, x ~ N(0, A^{-1}).
  void backward_in_place(std::span<State<D>> y) const {
    const std::size_t k = blocks();
    for (std::size_t r = k; r-- > 0;) {
      if (r + 1 < k) y[r] -= sub_[r].transpose() * y[r + 1];
      diag_[r].transpose().template triangularView<Eigen::Upper>().solveInPlace(y[r]);
    }
  }

  const std::vector<Block<D>>& diag_factors() const { return diag_; }
  const std::vector<Block<D>>& sub_factors() const { return sub_; }

 private:
  template <int E>
  friend std::variant<BlockCholesky<E>, NotPositiveDefinite> factorize(const BlockTridiag<E>&);

  std::vector<Block<D>> diag_;
  std::vector<Block<D>> sub_;
};

template <int D>
using FactorResult = std::variant<BlockCholesky<D>, NotPositiveDefinite>;

/// Forward block Cholesky along the tridiagonal: O(K D^3).
template <int D>
FactorResult<D> factorize(const BlockTridiag<D>& a) {
  BlockCholesky<D> out;
  const std::size_t k = a.blocks();
  out.diag_.resize(k);
  out.sub_.resize(k > 0 ? k - 1 : 0);
  Block<D> pivot = k > 0 ? a.diag[0] : Block<D>();
  for (std::size_t i = 0; i < k; ++i) {
    if (!pivot.allFinite()) return NotPositiveDefinite{i};
    Eigen::LLT<Block<D>> llt(pivot);
    if (llt.info() != Eigen::Success) return NotPositiveDefinite{i};
    out.diag_[i] = llt.matrixL();
    if ((out.diag_[i].diagonal().array() <= 0.0).any()) return NotPositiveDefinite{i};
    if (i + 1 < k) {
      // L_{i+1,i} = A_{i+1,i} L_ii^{-T}
      const Block<D> s = out.diag_[i].template triangularView<Eigen::Lower>().solve(
          a.sub[i].transpose()).transpose();
      out.sub_[i] = s;
      pivot = a.diag[i + 1] - s * s.transpose();
    }
  }
  return out;
}

}  // namespace sdeis
