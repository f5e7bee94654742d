#pragma once

#include <Eigen/Core>
#include <vector>

#include "ipg/block_vector.hpp"

namespace ipg {

struct OperatorNorms {
  double spectral_norm = 0.0;     // sqrt(lambda_max(M M^T))
  double min_pos_gram_eig = 0.0;  // smallest positive eigenvalue of M M^T
};

// Scaled block-difference operator  c * (J_S (x) I_bd),  where J_p is the
// (p-1) x p forward-difference matrix and S is a sorted subset of {1,...,p-1}
// (1-based row indices). Row i of J_p maps x to x_{i+1} - x_i in 1-based block
// indices. The operator is stored implicitly (scale + row set); a dense matrix
// is materialized only on demand and only at desk scale.
class ChainOperator {
 public:
  // Empty placeholder; unusable until assigned from a real operator.
  ChainOperator() = default;

  // `rows` uses 1-based indices in [1, source_blocks-1], strictly increasing.
  ChainOperator(double scale, int source_blocks, int block_dim, std::vector<int> rows);

  static ChainOperator full_chain(double scale, int source_blocks, int block_dim);

  double scale() const { return scale_; }
  int source_blocks() const { return source_blocks_; }
  int block_dim() const { return block_dim_; }
  const std::vector<int>& rows() const { return rows_; }  // 1-based
  int output_blocks() const { return static_cast<int>(rows_.size()); }
  Eigen::Index output_dim() const {
    return static_cast<Eigen::Index>(rows_.size()) * block_dim_;
  }
  Eigen::Index input_dim() const {
    return static_cast<Eigen::Index>(source_blocks_) * block_dim_;
  }

  // y_k = scale * (x_{S[k]+1} - x_{S[k]}), 1-based blocks. O(p * bd).
  BlockVector apply(const BlockVector& x) const;
  // Adjoint: block S[k] receives -scale*y_k, block S[k]+1 receives +scale*y_k.
  BlockVector apply_transpose(const BlockVector& y) const;

  // Flat-vector convenience wrappers.
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& y) const;

  // J_S J_S^T without scale or Kronecker factor, |S| x |S| tridiagonal-ish.
  Eigen::MatrixXd block_gram() const;

  // Dense materialization, capped at desk scale (CapacityError beyond).
  Eigen::MatrixXd dense() const;

  // Spectral norm and smallest positive eigenvalue of M M^T via a dense
  // symmetric eigensolve of the block Gram (the Kronecker identity factor
  // only adds multiplicity). CapacityError if |S| exceeds the dense cap.
  OperatorNorms norms() const;

  // Solves (M M^T) u = w for w of length output_dim(). Requires |S| within the
  // dense cap. Used by least-squares auditors; M M^T is positive definite for
  // any row subset of the chain.
  Eigen::VectorXd gram_solve(const Eigen::VectorXd& w) const;

 private:
  void check_input(const BlockVector& x) const;
  void check_output(const BlockVector& y) const;

  double scale_ = 1.0;
  int source_blocks_ = 0;
  int block_dim_ = 0;
  std::vector<int> rows_;
};

// Eigenvalues of Hbar Hbar^T for the full chain Hbar = m*L_f*J_m, in ascending
// order: lambda_i = 4 m^2 L_f^2 sin^2(i*pi/(2m)), i = 1..m-1.
std::vector<double> full_chain_gram_eigs(int m, double lip_f);

// Condition number of the full chain (and of any disjoint row split stacked
// back together): sin((m-1)pi/(2m)) / sin(pi/(2m)). Satisfies m/4 <= k < m.
double stacked_condition_number(int m);

// Union of two disjoint row selections with identical scale/shape. Verifies
// disjointness; the result has the same singular values as the stacked matrix
// [abar; a] (stacking is a row permutation of the union).
ChainOperator stacked_union(const ChainOperator& abar, const ChainOperator& a);

}  // namespace ipg
