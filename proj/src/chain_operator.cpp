#include "ipg/chain_operator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace ipg {

namespace {
constexpr int kDenseRowCap = 4000;          // block-gram eigensolve cap
constexpr long kDenseEntryCap = 16'000'000;  // densify cap
}  // namespace

ChainOperator::ChainOperator(double scale, int source_blocks, int block_dim,
                             std::vector<int> rows)
    : scale_(scale), source_blocks_(source_blocks), block_dim_(block_dim), rows_(std::move(rows)) {
  if (scale_ <= 0.0) {
    throw InvariantError("ChainOperator: scale must be > 0, got " + std::to_string(scale_));
  }
  if (source_blocks_ < 2 || block_dim_ < 1) {
    throw DimensionError("ChainOperator: need source_blocks >= 2 and block_dim >= 1, got p=" +
                         std::to_string(source_blocks_) + " bd=" + std::to_string(block_dim_));
  }
  int prev = 0;
  for (int r : rows_) {
    if (r < 1 || r > source_blocks_ - 1) {
      throw InvariantError("ChainOperator: row " + std::to_string(r) + " outside [1, " +
                           std::to_string(source_blocks_ - 1) + "]");
    }
    if (r <= prev) {
      throw InvariantError("ChainOperator: rows must be strictly increasing");
    }
    prev = r;
  }
}

ChainOperator ChainOperator::full_chain(double scale, int source_blocks, int block_dim) {
  std::vector<int> rows(source_blocks - 1);
  for (int i = 0; i < source_blocks - 1; ++i) rows[i] = i + 1;
  return ChainOperator(scale, source_blocks, block_dim, std::move(rows));
}

void ChainOperator::check_input(const BlockVector& x) const {
  if (x.blocks() != source_blocks_ || x.block_dim() != block_dim_) {
    throw DimensionError("ChainOperator::apply: expected (p=" + std::to_string(source_blocks_) +
                         ", bd=" + std::to_string(block_dim_) + "), got (p=" +
                         std::to_string(x.blocks()) + ", bd=" + std::to_string(x.block_dim()) +
                         ")");
  }
}

void ChainOperator::check_output(const BlockVector& y) const {
  if (y.blocks() != output_blocks() || y.block_dim() != block_dim_) {
    throw DimensionError("ChainOperator::apply_transpose: expected (p=" +
                         std::to_string(output_blocks()) + ", bd=" + std::to_string(block_dim_) +
                         "), got (p=" + std::to_string(y.blocks()) + ", bd=" +
                         std::to_string(y.block_dim()) + ")");
  }
}

BlockVector ChainOperator::apply(const BlockVector& x) const {
  check_input(x);
  if (output_blocks() == 0) {
    throw DimensionError(
        "ChainOperator::apply: empty row set has no block image; use the flat-vector overload");
  }
  BlockVector out(output_blocks(), block_dim_);
  for (int k = 0; k < output_blocks(); ++k) {
    const int i = rows_[k];  // 1-based: pairs blocks i and i+1 -> 0-based i-1, i
    out.block(k) = scale_ * (x.block(i) - x.block(i - 1));
  }
  return out;
}

BlockVector ChainOperator::apply_transpose(const BlockVector& y) const {
  check_output(y);
  BlockVector out(source_blocks_, block_dim_);
  for (int k = 0; k < output_blocks(); ++k) {
    const int i = rows_[k];
    out.block(i - 1) -= scale_ * y.block(k);
    out.block(i) += scale_ * y.block(k);
  }
  return out;
}

Eigen::VectorXd ChainOperator::apply(const Eigen::VectorXd& x) const {
  if (output_blocks() == 0) {
    if (x.size() != input_dim()) {
      throw DimensionError("ChainOperator::apply: input length mismatch");
    }
    return Eigen::VectorXd(0);
  }
  BlockVector xb(source_blocks_, block_dim_, x);
  return apply(xb).vec();
}

Eigen::VectorXd ChainOperator::apply_transpose(const Eigen::VectorXd& y) const {
  if (output_blocks() == 0) {
    if (y.size() != 0) throw DimensionError("ChainOperator::apply_transpose: expected empty input");
    return Eigen::VectorXd::Zero(input_dim());
  }
  BlockVector yb(output_blocks(), block_dim_, y);
  return apply_transpose(yb).vec();
}

Eigen::MatrixXd ChainOperator::block_gram() const {
  const int s = output_blocks();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(s, s);
  for (int a = 0; a < s; ++a) {
    g(a, a) = 2.0;
    if (a + 1 < s && rows_[a + 1] == rows_[a] + 1) {
      g(a, a + 1) = -1.0;
      g(a + 1, a) = -1.0;
    }
  }
  return g;
}

Eigen::MatrixXd ChainOperator::dense() const {
  const long entries = static_cast<long>(output_dim()) * input_dim();
  if (entries > kDenseEntryCap) {
    throw CapacityError("ChainOperator::dense: " + std::to_string(entries) +
                        " entries exceeds desk-scale cap");
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(output_dim(), input_dim());
  for (int k = 0; k < output_blocks(); ++k) {
    const int i = rows_[k];
    for (int j = 0; j < block_dim_; ++j) {
      m(k * block_dim_ + j, (i - 1) * block_dim_ + j) = -scale_;
      m(k * block_dim_ + j, i * block_dim_ + j) = scale_;
    }
  }
  return m;
}

OperatorNorms ChainOperator::norms() const {
  const int s = output_blocks();
  if (s > kDenseRowCap) {
    throw CapacityError("ChainOperator::norms: block gram of size " + std::to_string(s) +
                        " exceeds dense eigensolve cap " + std::to_string(kDenseRowCap));
  }
  OperatorNorms out;
  if (s == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block_gram());
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const double lam_max = ev(s - 1);
  const double tol = 1e-12 * std::max(lam_max, 1.0);
  double lam_min_pos = lam_max;
  for (int i = 0; i < s; ++i) {
    if (ev(i) > tol) {
      lam_min_pos = ev(i);
      break;
    }
  }
  out.spectral_norm = scale_ * std::sqrt(lam_max);
  out.min_pos_gram_eig = scale_ * scale_ * lam_min_pos;
  return out;
}

Eigen::VectorXd ChainOperator::gram_solve(const Eigen::VectorXd& w) const {
  const int s = output_blocks();
  if (s > kDenseRowCap) {
    throw CapacityError("ChainOperator::gram_solve: block gram of size " + std::to_string(s) +
                        " exceeds dense cap");
  }
  if (w.size() != output_dim()) {
    throw DimensionError("ChainOperator::gram_solve: rhs length " + std::to_string(w.size()) +
                         " != output dim " + std::to_string(output_dim()));
  }
  // (M M^T) = scale^2 (J_S J_S^T (x) I_bd): factor the small gram once and
  // back-solve one coordinate slice at a time.
  Eigen::LLT<Eigen::MatrixXd> llt(block_gram());
  Eigen::VectorXd out(w.size());
  Eigen::VectorXd slice(s);
  for (int j = 0; j < block_dim_; ++j) {
    for (int k = 0; k < s; ++k) slice(k) = w(k * block_dim_ + j);
    slice = llt.solve(slice);
    for (int k = 0; k < s; ++k) out(k * block_dim_ + j) = slice(k) / (scale_ * scale_);
  }
  return out;
}

std::vector<double> full_chain_gram_eigs(int m, double lip_f) {
  if (m < 2) throw InvariantError("full_chain_gram_eigs: need m >= 2");
  std::vector<double> eigs(m - 1);
  const double c = 4.0 * m * m * lip_f * lip_f;
  for (int i = 1; i <= m - 1; ++i) {
    const double s = std::sin(i * std::numbers::pi / (2.0 * m));
    eigs[i - 1] = c * s * s;
  }
  return eigs;
}

double stacked_condition_number(int m) {
  if (m < 2) throw InvariantError("stacked_condition_number: need m >= 2");
  const double pi = std::numbers::pi;
  return std::sin((m - 1) * pi / (2.0 * m)) / std::sin(pi / (2.0 * m));
}

ChainOperator stacked_union(const ChainOperator& abar, const ChainOperator& a) {
  if (abar.scale() != a.scale() || abar.source_blocks() != a.source_blocks() ||
      abar.block_dim() != a.block_dim()) {
    throw DimensionError("stacked_union: operands must share scale, source_blocks, block_dim");
  }
  std::vector<int> rows;
  rows.reserve(abar.rows().size() + a.rows().size());
  std::merge(abar.rows().begin(), abar.rows().end(), a.rows().begin(), a.rows().end(),
             std::back_inserter(rows));
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i] == rows[i - 1]) {
      throw InvariantError("stacked_union: row sets overlap at " + std::to_string(rows[i]));
    }
  }
  return ChainOperator(abar.scale(), abar.source_blocks(), abar.block_dim(), std::move(rows));
}

}  // namespace ipg
