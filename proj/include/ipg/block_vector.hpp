#pragma once

#include <Eigen/Core>
#include <string>

#include "ipg/errors.hpp"

namespace ipg {

// A vector of `blocks` stacked blocks, each of dimension `block_dim`.
// Block indices are 1-based in doc comments (matching the usual algebraic
// statement of chain structures) and 0-based in code.
class BlockVector {
 public:
  BlockVector() = default;

  BlockVector(int blocks, int block_dim)
      : blocks_(blocks),
        block_dim_(block_dim),
        data_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(blocks) * block_dim)) {
    check_shape(blocks, block_dim);
  }

  BlockVector(int blocks, int block_dim, Eigen::VectorXd data)
      : blocks_(blocks), block_dim_(block_dim), data_(std::move(data)) {
    check_shape(blocks, block_dim);
    if (data_.size() != static_cast<Eigen::Index>(blocks_) * block_dim_) {
      throw DimensionError("BlockVector: data length " + std::to_string(data_.size()) +
                           " != blocks*block_dim = " +
                           std::to_string(static_cast<long>(blocks_) * block_dim_));
    }
  }

  int blocks() const { return blocks_; }
  int block_dim() const { return block_dim_; }
  Eigen::Index size() const { return data_.size(); }

  // 0-based block accessors.
  Eigen::VectorBlock<Eigen::VectorXd> block(int i) {
    return data_.segment(static_cast<Eigen::Index>(i) * block_dim_, block_dim_);
  }
  Eigen::VectorBlock<const Eigen::VectorXd> block(int i) const {
    return data_.segment(static_cast<Eigen::Index>(i) * block_dim_, block_dim_);
  }

  Eigen::VectorXd& vec() { return data_; }
  const Eigen::VectorXd& vec() const { return data_; }

  double norm() const { return data_.norm(); }

  bool same_shape(const BlockVector& other) const {
    return blocks_ == other.blocks_ && block_dim_ == other.block_dim_;
  }

 private:
  static void check_shape(int blocks, int block_dim) {
    if (blocks <= 0 || block_dim <= 0) {
      throw DimensionError("BlockVector: blocks and block_dim must be positive, got blocks=" +
                           std::to_string(blocks) + " block_dim=" + std::to_string(block_dim));
    }
  }

  int blocks_ = 0;
  int block_dim_ = 0;
  Eigen::VectorXd data_;
};

}  // namespace ipg
