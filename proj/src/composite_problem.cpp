#include "ipg/composite_problem.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "ipg/errors.hpp"
#include "ipg/prox.hpp"

namespace ipg {

RegularizerOracle weighted_l1_regularizer(double weight) {
  if (weight < 0.0) throw InvariantError("weighted_l1_regularizer: weight must be >= 0");
  RegularizerOracle r;
  r.value = [weight](const Eigen::VectorXd& y) { return weight * y.lpNorm<1>(); };
  r.prox = [weight](const Eigen::VectorXd& v, double t) {
    return prox_weighted_l1(v, t * weight);
  };
  r.conjugate = [weight](const Eigen::VectorXd& z) {
    // Indicator of the box ||z||_inf <= weight, with a hair of slack so that
    // freshly clamped points are never rejected.
    const double tol = 1e-12 * std::max(weight, 1.0);
    return z.lpNorm<Eigen::Infinity>() <= weight + tol
               ? 0.0
               : std::numeric_limits<double>::infinity();
  };
  r.subdiff_distance = [weight](const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
    return subdiff_distance_weighted_l1(y, z, weight);
  };
  r.subdiff_project = [weight](const Eigen::VectorXd& y, const Eigen::VectorXd& u) {
    return subdiff_project_weighted_l1(y, u, weight);
  };
  return r;
}

namespace {

void spot_check_gradient(const SmoothOracle& f0, int blocks, int block_dim, double fd_scale) {
  std::mt19937_64 rng(0x1209a3f5u);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double h = 1e-5 * fd_scale;
  const Eigen::Index dim = static_cast<Eigen::Index>(blocks) * block_dim;
  for (int trial = 0; trial < 3; ++trial) {
    BlockVector x(blocks, block_dim);
    for (Eigen::Index i = 0; i < dim; ++i) x.vec()(i) = fd_scale * unif(rng);
    const BlockVector g = f0.grad(x);
    // Probe a handful of coordinates rather than the full Jacobian.
    const int probes = static_cast<int>(std::min<Eigen::Index>(dim, 16));
    double err_sq = 0.0, ref_sq = 0.0;
    for (int t = 0; t < probes; ++t) {
      const Eigen::Index j = static_cast<Eigen::Index>(rng() % dim);
      BlockVector xp = x, xm = x;
      xp.vec()(j) += h;
      xm.vec()(j) -= h;
      const double fd = (f0.value(xp) - f0.value(xm)) / (2.0 * h);
      err_sq += (fd - g.vec()(j)) * (fd - g.vec()(j));
      ref_sq += g.vec()(j) * g.vec()(j);
    }
    const double rel = std::sqrt(err_sq) / std::max(std::sqrt(ref_sq), 1e-12);
    if (rel > 1e-5) {
      throw InvariantError("make_problem: gradient of f0 fails finite-difference spot check, "
                           "relative error " + std::to_string(rel));
    }
  }
}

}  // namespace

CompositeProblem make_problem(int blocks, int block_dim, SmoothOracle f0, double lip_grad,
                              double lip_f0, RegularizerOracle gbar, ChainOperator a,
                              ChainOperator abar, Eigen::VectorXd b, Eigen::VectorXd bbar,
                              double fd_scale) {
  CompositeProblem p;
  p.blocks = blocks;
  p.block_dim = block_dim;
  p.dim_x = static_cast<Eigen::Index>(blocks) * block_dim;
  p.dim_y = abar.output_dim();
  if (a.input_dim() != p.dim_x || abar.input_dim() != p.dim_x) {
    throw DimensionError("make_problem: operator input dims disagree with blocks*block_dim");
  }
  if (b.size() != a.output_dim()) {
    throw DimensionError("make_problem: b has length " + std::to_string(b.size()) +
                         ", expected " + std::to_string(a.output_dim()));
  }
  if (bbar.size() != abar.output_dim()) {
    throw DimensionError("make_problem: bbar has length " + std::to_string(bbar.size()) +
                         ", expected " + std::to_string(abar.output_dim()));
  }
  spot_check_gradient(f0, blocks, block_dim, fd_scale);

  p.f0 = std::move(f0);
  p.lip_grad = lip_grad;
  p.lip_f0 = lip_f0;
  p.gbar = std::move(gbar);
  p.a = std::move(a);
  p.abar = std::move(abar);
  p.b = std::move(b);
  p.bbar = std::move(bbar);

  const OperatorNorms na = p.a.norms();
  const OperatorNorms nabar = p.abar.norms();
  const OperatorNorms ns = stacked_union(p.abar, p.a).norms();
  p.norm_a = na.spectral_norm;
  p.norm_abar = nabar.spectral_norm;
  p.norm_stacked = ns.spectral_norm;
  p.min_pos_gram_stacked = ns.min_pos_gram_eig;
  p.pinv_norm_a = na.min_pos_gram_eig > 0.0 ? 1.0 / std::sqrt(na.min_pos_gram_eig) : 0.0;
  return p;
}

}  // namespace ipg
