#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>

#include "ipg/block_vector.hpp"
#include "ipg/chain_operator.hpp"

namespace ipg {

// Smooth term: value and gradient of f0 over block-structured x.
struct SmoothOracle {
  std::function<double(const BlockVector&)> value;
  std::function<BlockVector(const BlockVector&)> grad;
};

// Regularizer gbar with everything the solver and the auditors need.
// prox(v, t) computes prox_{t*gbar}(v). conjugate(z) evaluates gbar* (may be
// +infinity; an infinite value is a legal return). subdiff_distance(y, z) is
// dist(z, d gbar(y)); subdiff_project(y, u) projects u onto d gbar(y). The
// last two may be empty for custom regularizers, in which case the audits
// that need them raise an error.
struct RegularizerOracle {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> prox;
  std::function<double(const Eigen::VectorXd&)> conjugate;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> subdiff_distance;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> subdiff_project;
  double lip = 0.0;  // l_g
};

// gbar = weight * ||.||_1 with all oracles in closed form.
RegularizerOracle weighted_l1_regularizer(double weight);

// Problem data for  min f0(x) + gbar(y)  s.t.  A x + b = 0,  y = Abar x + bbar.
struct CompositeProblem {
  int blocks = 0;     // block count of x
  int block_dim = 0;  // per-block dimension
  Eigen::Index dim_x = 0;
  Eigen::Index dim_y = 0;  // rows of Abar

  SmoothOracle f0;
  double lip_grad = 0.0;  // L_f, Lipschitz constant of grad f0
  double lip_f0 = 0.0;    // l_f, Lipschitz constant of f0 itself

  RegularizerOracle gbar;

  ChainOperator a;
  ChainOperator abar;
  Eigen::VectorXd b;
  Eigen::VectorXd bbar;

  // Cached operator data (filled by make_problem).
  double norm_a = 0.0;
  double norm_abar = 0.0;
  double norm_stacked = 0.0;        // ||[Abar; A]||
  double min_pos_gram_stacked = 0;  // lambda_min_+([Abar;A][Abar;A]^T)
  double pinv_norm_a = 0.0;         // ||(A A^T)^{-1} A|| = 1/sigma_min(A)
};

// Assembles a CompositeProblem, caches the operator norms, and spot-checks the
// gradient of f0 against central finite differences at a few deterministic
// sample points (relative error <= 1e-5, InvariantError otherwise).
CompositeProblem make_problem(int blocks, int block_dim, SmoothOracle f0, double lip_grad,
                              double lip_f0, RegularizerOracle gbar, ChainOperator a,
                              ChainOperator abar, Eigen::VectorXd b, Eigen::VectorXd bbar,
                              double fd_scale = 1.0);

}  // namespace ipg
