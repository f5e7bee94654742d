#include "ipg/instance.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ipg/errors.hpp"

namespace ipg {

namespace {
constexpr double kPi = std::numbers::pi;
}

double psi(double u) { return u <= 0.0 ? 0.0 : 1.0 - std::exp(-u * u); }

double psi_prime(double u) { return u <= 0.0 ? 0.0 : 2.0 * u * std::exp(-u * u); }

double phi(double v) { return 4.0 * std::atan(v) + 2.0 * kPi; }

double phi_prime(double v) { return 4.0 / (1.0 + v * v); }

double varphi(const Eigen::VectorXd& z, int j) {
  if (j < 1 || j > z.size()) {
    throw DimensionError("varphi: j = " + std::to_string(j) + " outside [1, " +
                         std::to_string(z.size()) + "]");
  }
  if (j == 1) return -psi(1.0) * phi(z(0));
  return psi(-z(j - 2)) * phi(-z(j - 1)) - psi(z(j - 2)) * phi(z(j - 1));
}

namespace {

enum class Region { low, mid, high };  // i in [1,m/3], (m/3,2m/3], (2m/3,m]

Region region_of(int i, int m) {
  if (m < 3 || m % 3 != 0) {
    throw InvariantError("h: m must be a positive multiple of 3, got " + std::to_string(m));
  }
  if (i < 1 || i > m) {
    throw DimensionError("h: block index i = " + std::to_string(i) + " outside [1, " +
                         std::to_string(m) + "]");
  }
  if (i <= m / 3) return Region::low;
  if (i <= 2 * m / 3) return Region::mid;
  return Region::high;
}

void check_dbar(const Eigen::VectorXd& z) {
  if (z.size() < 5 || z.size() % 2 == 0) {
    throw InvariantError("h: block dimension must be odd and >= 5, got " +
                         std::to_string(z.size()));
  }
}

}  // namespace

double h_value(int i, const Eigen::VectorXd& z, int m) {
  const Region reg = region_of(i, m);
  check_dbar(z);
  const int dbar = static_cast<int>(z.size());
  double v = varphi(z, 1);
  if (reg == Region::low) {
    for (int j = 1; j <= dbar / 2; ++j) v += 3.0 * varphi(z, 2 * j);
  } else if (reg == Region::high) {
    for (int j = 1; j <= dbar / 2; ++j) v += 3.0 * varphi(z, 2 * j + 1);
  }
  return v;
}

Eigen::VectorXd h_grad(int i, const Eigen::VectorXd& z, int m) {
  const Region reg = region_of(i, m);
  check_dbar(z);
  const int dbar = static_cast<int>(z.size());
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dbar);

  // j = 1. Only the low region's even-coupling term touches z_1 beyond phi'.
  g(0) = -psi(1.0) * phi_prime(z(0));
  if (reg == Region::low) {
    g(0) += 3.0 * (-psi_prime(-z(0)) * phi(-z(1)) - psi_prime(z(0)) * phi(z(1)));
  }

  for (int j = 2; j <= dbar; ++j) {
    const double zj = z(j - 1);
    const double zprev = z(j - 2);
    if (j % 2 == 0) {
      if (reg == Region::low) {
        g(j - 1) = 3.0 * (-psi(-zprev) * phi_prime(-zj) - psi(zprev) * phi_prime(zj));
      } else if (reg == Region::high) {
        const double znext = z(j);  // even j <= dbar-1, so j+1 exists
        g(j - 1) = 3.0 * (-psi_prime(-zj) * phi(-znext) - psi_prime(zj) * phi(znext));
      }
    } else {
      if (reg == Region::low) {
        // The low region couples (2j'-1, 2j') pairs only, so z_dbar is absent.
        if (j <= dbar - 2) {
          const double znext = z(j);
          g(j - 1) = 3.0 * (-psi_prime(-zj) * phi(-znext) - psi_prime(zj) * phi(znext));
        }
      } else if (reg == Region::high) {
        g(j - 1) = 3.0 * (-psi(-zprev) * phi_prime(-zj) - psi(zprev) * phi_prime(zj));
      }
    }
  }
  return g;
}

namespace {

void check_params_basic(const InstanceParams& p) {
  if (p.m1 < 2) throw InvariantError("instance: violated m1 >= 2 (got m1 = " +
                                     std::to_string(p.m1) + ")");
  if (p.m1 % 2 != 0) throw InvariantError("instance: violated m1 even (got m1 = " +
                                          std::to_string(p.m1) + ")");
  if (p.m2 < 1) throw InvariantError("instance: violated m2 >= 1");
  if (p.block_dim % 2 == 0) throw InvariantError("instance: violated block_dim odd (got " +
                                                 std::to_string(p.block_dim) + ")");
  if (p.block_dim < 5) throw InvariantError("instance: violated block_dim >= 5 (got " +
                                            std::to_string(p.block_dim) + ")");
  if (!(p.eps > 0.0)) throw InvariantError("instance: violated eps > 0");
  if (!(p.lip_f > 0.0)) throw InvariantError("instance: violated lip_f > 0");
}

double argument_scale(const InstanceParams& p) {
  return std::sqrt(static_cast<double>(p.m())) * p.lip_f / (150.0 * kPi * p.eps);
}

}  // namespace

double f_value(int i, const Eigen::VectorXd& z, const InstanceParams& p) {
  check_params_basic(p);
  const int m = p.m();
  return 300.0 * kPi * p.eps * p.eps / (m * p.lip_f) * h_value(i, argument_scale(p) * z, m);
}

Eigen::VectorXd f_grad(int i, const Eigen::VectorXd& z, const InstanceParams& p) {
  check_params_basic(p);
  const int m = p.m();
  return 2.0 * p.eps / std::sqrt(static_cast<double>(m)) *
         h_grad(i, argument_scale(p) * z, m);
}

double f0_value(const BlockVector& x, const InstanceParams& p) {
  const int m = p.m();
  if (x.blocks() != m || x.block_dim() != p.block_dim) {
    throw DimensionError("f0_value: expected (p=" + std::to_string(m) + ", bd=" +
                         std::to_string(p.block_dim) + "), got (p=" + std::to_string(x.blocks()) +
                         ", bd=" + std::to_string(x.block_dim()) + ")");
  }
  double v = 0.0;
  for (int i = 0; i < m; ++i) v += f_value(i + 1, x.block(i), p);
  return v;
}

BlockVector f0_grad(const BlockVector& x, const InstanceParams& p) {
  const int m = p.m();
  if (x.blocks() != m || x.block_dim() != p.block_dim) {
    throw DimensionError("f0_grad: shape mismatch");
  }
  BlockVector g(m, p.block_dim);
  for (int i = 0; i < m; ++i) g.block(i) = f_grad(i + 1, x.block(i), p);
  return g;
}

double gbar_value(const Eigen::VectorXd& y, const InstanceParams& p) {
  if (!(p.beta > 0.0)) throw InvariantError("gbar_value: beta not resolved");
  if (y.size() != p.dim_nbar()) {
    throw DimensionError("gbar_value: y has length " + std::to_string(y.size()) +
                         ", expected " + std::to_string(p.dim_nbar()));
  }
  return p.beta / (p.m() * p.lip_f) * y.lpNorm<1>();
}

double g_value(const BlockVector& x, const InstanceParams& p) {
  if (!(p.beta > 0.0)) throw InvariantError("g_value: beta not resolved");
  if (x.blocks() != p.m() || x.block_dim() != p.block_dim) {
    throw DimensionError("g_value: shape mismatch");
  }
  double v = 0.0;
  for (int i = 1; i <= 3 * p.m2 - 1; ++i) {
    const int row = i * p.m1;  // 1-based pair (row, row+1)
    v += (x.block(row - 1) - x.block(row)).lpNorm<1>();
  }
  return p.beta * v;
}

double beta_lower_bound(int m1, int m2, int block_dim, double eps, double lip_f) {
  InstanceParams probe{m1, m2, block_dim, eps, lip_f, 1.0};
  check_params_basic(probe);
  const int m = probe.m();
  std::vector<int> rows_mc;
  std::vector<bool> in_m(m, false);
  for (int i = 1; i <= 3 * m2 - 1; ++i) in_m[i * m1] = true;
  for (int r = 1; r <= m - 1; ++r) {
    if (!in_m[r]) rows_mc.push_back(r);
  }
  ChainOperator a(m * lip_f, m, block_dim, rows_mc);
  const double norm_a = a.norms().spectral_norm;
  return (50.0 * kPi + 1.0 + norm_a) * std::sqrt(static_cast<double>(m)) * eps;
}

double default_beta(int m1, int m2, int block_dim, double eps, double lip_f) {
  return 1.01 * beta_lower_bound(m1, m2, block_dim, eps, lip_f);
}

Instance build_instance(InstanceParams params) {
  check_params_basic(params);
  const int m = params.m();

  Instance inst;
  inst.m = m;
  inst.dim_x = params.dim_x();
  inst.dim_n = params.dim_n();
  inst.dim_nbar = params.dim_nbar();

  std::vector<bool> in_m(m, false);
  for (int i = 1; i <= 3 * params.m2 - 1; ++i) {
    inst.rows_m.push_back(i * params.m1);
    in_m[i * params.m1] = true;
  }
  for (int r = 1; r <= m - 1; ++r) {
    if (!in_m[r]) inst.rows_mc.push_back(r);
  }

  const double scale = m * params.lip_f;
  inst.op_h = ChainOperator::full_chain(scale, m, params.block_dim);
  inst.op_a = ChainOperator(scale, m, params.block_dim, inst.rows_mc);
  inst.op_abar = ChainOperator(scale, m, params.block_dim, inst.rows_m);

  const double bound =
      (50.0 * kPi + 1.0 + inst.op_a.norms().spectral_norm) * std::sqrt(double(m)) * params.eps;
  if (params.beta <= 0.0) params.beta = 1.01 * bound;
  if (!(params.beta > bound)) {
    throw InvariantError("instance: violated beta > (50*pi + 1 + ||A||)*sqrt(m)*eps  (beta = " +
                         std::to_string(params.beta) + ", bound = " + std::to_string(bound) + ")");
  }
  inst.params = params;

  inst.gbar_weight = params.beta / (m * params.lip_f);
  inst.lip_f0 = 50.0 * kPi * params.eps * std::sqrt(static_cast<double>(m) * params.block_dim);
  inst.lip_gbar = std::sqrt(static_cast<double>(inst.dim_nbar)) * inst.gbar_weight;

  SmoothOracle f0;
  const InstanceParams cap = params;
  f0.value = [cap](const BlockVector& x) { return f0_value(x, cap); };
  f0.grad = [cap](const BlockVector& x) { return f0_grad(x, cap); };

  RegularizerOracle gbar = weighted_l1_regularizer(inst.gbar_weight);
  gbar.lip = inst.lip_gbar;

  inst.problem = make_problem(m, params.block_dim, std::move(f0), params.lip_f, inst.lip_f0,
                              std::move(gbar), inst.op_a, inst.op_abar,
                              Eigen::VectorXd::Zero(inst.dim_n),
                              Eigen::VectorXd::Zero(inst.dim_nbar),
                              /*fd_scale=*/1.0 / argument_scale(params));
  return inst;
}

}  // namespace ipg
