#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "ipg/block_vector.hpp"

namespace ipg {

// Geometry of the pairwise-difference regularizer
// g(x) = beta * sum_{i in pairs} ||x_i - x_{i+1}||_1 over block-structured x.
// `pairs` holds 1-based first indices i, strictly increasing, each in
// [1, blocks-1], and no two pairs may share a block (consecutive entries
// differ by at least 2).
struct PairwiseGeometry {
  std::vector<int> pairs;
  int blocks = 0;
  int block_dim = 0;
};

PairwiseGeometry make_pairwise_geometry(std::vector<int> pairs, int blocks, int block_dim);

// Coordinatewise soft threshold sign(y_i)(|y_i| - c)_+ with sign(0) = 0.
Eigen::VectorXd prox_weighted_l1(const Eigen::VectorXd& y, double c);

// Exact prox of eta*g for the pairwise regularizer: blocks outside every pair
// pass through; each pair averages per coordinate when |x_i - x_{i+1}| <= 2c
// (c = eta*beta) and otherwise moves both ends by c toward each other. Ties
// use the averaging branch (both branches coincide there).
BlockVector prox_pairwise_l1(const BlockVector& x, double eta_beta, const PairwiseGeometry& geom);

// prox of the convex conjugate via the Moreau identity:
// prox_{eta g*}(z) = z - eta * prox_{(1/eta) g}(z / eta).
Eigen::VectorXd prox_conjugate(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>& prox_of_g,
    const Eigen::VectorXd& z, double eta);

// Coordinatewise clamp to [-radius, radius].
Eigen::VectorXd project_linf_ball(const Eigen::VectorXd& z, double radius);

// dist(z, d(c||.||_1)(y)) in closed form: per coordinate |c*sign(y_i) - z_i|
// where y_i != 0 and (|z_i| - c)_+ where y_i = 0.
double subdiff_distance_weighted_l1(const Eigen::VectorXd& y, const Eigen::VectorXd& z, double c);

// Euclidean projection of u onto d(c||.||_1)(y).
Eigen::VectorXd subdiff_project_weighted_l1(const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                                            double c);

// Dispatcher over the prox kit, mirroring the closed forms above.
enum class ProxKind { weighted_l1, pairwise_l1, linf_ball_indicator };

struct ProxSpec {
  ProxKind kind = ProxKind::weighted_l1;
  double weight = 0.0;  // c
  std::optional<PairwiseGeometry> geometry;

  // prox_{eta * f}(v) for the described f (for the indicator, the projection).
  Eigen::VectorXd apply(const Eigen::VectorXd& v, double eta) const;
};

}  // namespace ipg
