#pragma once

#include <Eigen/Core>
#include <vector>

#include "ipg/block_vector.hpp"
#include "ipg/chain_operator.hpp"
#include "ipg/composite_problem.hpp"

namespace ipg {

// Knobs of the hard instance. m1 >= 2 even, block_dim >= 5 odd, eps > 0,
// lip_f > 0, beta > (50*pi + 1 + ||A||) * sqrt(m) * eps.
struct InstanceParams {
  int m1 = 2;
  int m2 = 1;
  int block_dim = 5;  // dbar
  double eps = 0.1;
  double lip_f = 1.0;
  double beta = 0.0;  // <= 0 requests the default (1.01x the admissibility bound)

  int m() const { return 3 * m1 * m2; }
  Eigen::Index dim_x() const { return static_cast<Eigen::Index>(m()) * block_dim; }
  Eigen::Index dim_n() const { return static_cast<Eigen::Index>(m() - 3 * m2) * block_dim; }
  Eigen::Index dim_nbar() const { return static_cast<Eigen::Index>(3 * m2 - 1) * block_dim; }
};

// Scalar building blocks. psi is 0 on u <= 0 and 1 - exp(-u^2) on u > 0; its
// derivative is exactly 0 on the closed left branch so that gradient
// coordinates proven zero come out bit-exact zero.
double psi(double u);
double psi_prime(double u);
double phi(double v);        // 4*atan(v) + 2*pi
double phi_prime(double v);  // 4/(1+v^2)

// Coupling term, j is 1-based in [1, dbar].
double varphi(const Eigen::VectorXd& z, int j);

// Per-block smooth pieces; i is 1-based in [1, m], m divisible by 3.
double h_value(int i, const Eigen::VectorXd& z, int m);
Eigen::VectorXd h_grad(int i, const Eigen::VectorXd& z, int m);

double f_value(int i, const Eigen::VectorXd& z, const InstanceParams& p);
Eigen::VectorXd f_grad(int i, const Eigen::VectorXd& z, const InstanceParams& p);

double f0_value(const BlockVector& x, const InstanceParams& p);
BlockVector f0_grad(const BlockVector& x, const InstanceParams& p);

double gbar_value(const Eigen::VectorXd& y, const InstanceParams& p);
double g_value(const BlockVector& x, const InstanceParams& p);

// Strict admissibility bound (50*pi + 1 + ||A||) * sqrt(m) * eps with the
// computed spectral norm of A, and the shipped default 1.01x above it.
double beta_lower_bound(int m1, int m2, int block_dim, double eps, double lip_f);
double default_beta(int m1, int m2, int block_dim, double eps, double lip_f);

// Fully assembled instance: row split, operators, norms, problem oracles.
struct Instance {
  InstanceParams params;
  int m = 0;
  Eigen::Index dim_x = 0, dim_n = 0, dim_nbar = 0;
  std::vector<int> rows_m;   // M = {i*m1 : i = 1..3*m2-1}, 1-based
  std::vector<int> rows_mc;  // complement in {1..m-1}
  ChainOperator op_h;        // full chain, scale m*lip_f
  ChainOperator op_a;        // rows M^C
  ChainOperator op_abar;     // rows M
  double gbar_weight = 0.0;  // beta/(m*lip_f)
  double lip_f0 = 0.0;       // l_f = 50*pi*eps*sqrt(m*dbar)
  double lip_gbar = 0.0;     // l_g = sqrt(nbar)*beta/(m*lip_f)
  CompositeProblem problem;

  BlockVector zero_x() const { return BlockVector(m, params.block_dim); }
};

// Validates every invariant (naming the violated inequality) and assembles
// the instance. params.beta <= 0 selects the default beta.
Instance build_instance(InstanceParams params);

}  // namespace ipg
