#include "ipg/prox.hpp"

#include <cmath>
#include <string>

#include "ipg/errors.hpp"

namespace ipg {

namespace {
inline double soft(double v, double c) {
  if (v > c) return v - c;
  if (v < -c) return v + c;
  return 0.0;
}
}  // namespace

PairwiseGeometry make_pairwise_geometry(std::vector<int> pairs, int blocks, int block_dim) {
  if (blocks < 2 || block_dim < 1) {
    throw DimensionError("PairwiseGeometry: need blocks >= 2 and block_dim >= 1");
  }
  int prev = -1;
  for (int i : pairs) {
    if (i < 1 || i > blocks - 1) {
      throw InvariantError("PairwiseGeometry: pair index " + std::to_string(i) + " outside [1, " +
                           std::to_string(blocks - 1) + "]");
    }
    if (prev >= 0 && i <= prev + 1) {
      throw InvariantError("PairwiseGeometry: pairs " + std::to_string(prev) + " and " +
                           std::to_string(i) + " overlap");
    }
    prev = i;
  }
  return PairwiseGeometry{std::move(pairs), blocks, block_dim};
}

Eigen::VectorXd prox_weighted_l1(const Eigen::VectorXd& y, double c) {
  if (c < 0.0) throw InvariantError("prox_weighted_l1: threshold must be >= 0");
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out(i) = soft(y(i), c);
  return out;
}

BlockVector prox_pairwise_l1(const BlockVector& x, double eta_beta,
                             const PairwiseGeometry& geom) {
  if (eta_beta < 0.0) throw InvariantError("prox_pairwise_l1: eta*beta must be >= 0");
  if (x.blocks() != geom.blocks || x.block_dim() != geom.block_dim) {
    throw DimensionError("prox_pairwise_l1: expected (p=" + std::to_string(geom.blocks) +
                         ", bd=" + std::to_string(geom.block_dim) + "), got (p=" +
                         std::to_string(x.blocks()) + ", bd=" + std::to_string(x.block_dim()) +
                         ")");
  }
  BlockVector out = x;
  const double c = eta_beta;
  for (int i : geom.pairs) {
    auto lo = out.block(i - 1);  // block i, 1-based
    auto hi = out.block(i);      // block i+1
    for (int j = 0; j < geom.block_dim; ++j) {
      const double a = lo(j), b = hi(j);
      const double diff = a - b;
      if (std::abs(diff) <= 2.0 * c) {
        const double mid = 0.5 * (a + b);
        lo(j) = mid;
        hi(j) = mid;
      } else {
        const double s = diff > 0.0 ? 1.0 : -1.0;
        lo(j) = a - c * s;
        hi(j) = b + c * s;
      }
    }
  }
  return out;
}

Eigen::VectorXd prox_conjugate(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>& prox_of_g,
    const Eigen::VectorXd& z, double eta) {
  if (eta <= 0.0) throw InvariantError("prox_conjugate: eta must be > 0");
  return z - eta * prox_of_g(z / eta, 1.0 / eta);
}

Eigen::VectorXd project_linf_ball(const Eigen::VectorXd& z, double radius) {
  if (radius < 0.0) throw InvariantError("project_linf_ball: radius must be >= 0");
  return z.cwiseMax(-radius).cwiseMin(radius);
}

double subdiff_distance_weighted_l1(const Eigen::VectorXd& y, const Eigen::VectorXd& z,
                                    double c) {
  if (y.size() != z.size()) {
    throw DimensionError("subdiff_distance_weighted_l1: size mismatch " +
                         std::to_string(y.size()) + " vs " + std::to_string(z.size()));
  }
  double sq = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double r;
    if (y(i) != 0.0) {
      r = std::abs(c * (y(i) > 0.0 ? 1.0 : -1.0) - z(i));
    } else {
      r = std::max(std::abs(z(i)) - c, 0.0);
    }
    sq += r * r;
  }
  return std::sqrt(sq);
}

Eigen::VectorXd subdiff_project_weighted_l1(const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                                            double c) {
  if (y.size() != u.size()) {
    throw DimensionError("subdiff_project_weighted_l1: size mismatch");
  }
  Eigen::VectorXd out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (y(i) > 0.0) {
      out(i) = c;
    } else if (y(i) < 0.0) {
      out(i) = -c;
    } else {
      out(i) = std::min(std::max(u(i), -c), c);
    }
  }
  return out;
}

Eigen::VectorXd ProxSpec::apply(const Eigen::VectorXd& v, double eta) const {
  switch (kind) {
    case ProxKind::weighted_l1:
      return prox_weighted_l1(v, eta * weight);
    case ProxKind::pairwise_l1: {
      if (!geometry) throw InvariantError("ProxSpec: pairwise_l1 requires geometry");
      BlockVector xb(geometry->blocks, geometry->block_dim, v);
      return prox_pairwise_l1(xb, eta * weight, *geometry).vec();
    }
    case ProxKind::linf_ball_indicator:
      return project_linf_ball(v, weight);
  }
  throw InvariantError("ProxSpec: unknown kind");
}

}  // namespace ipg
