#include "ipg/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "ipg/chain_operator.hpp"
#include "ipg/errors.hpp"
#include "ipg/prox.hpp"
#include "ipg/rng.hpp"
#include "ipg/span_tracker.hpp"
#include "ipg/stationarity.hpp"

namespace ipg {

namespace {

constexpr double kPi = std::numbers::pi;

struct Checker {
  bool ok = true;
  std::ostringstream detail;

  void fail(const std::string& what) {
    if (ok) detail << what;
    ok = false;
  }
  void expect(bool cond, const std::string& what) {
    if (!cond) fail(what);
  }
};

Eigen::VectorXd random_vec(Rng& rng, int n, double lo, double hi) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

BlockVector random_block(Rng& rng, int blocks, int bd, double lo, double hi) {
  return BlockVector(blocks, bd, random_vec(rng, blocks * bd, lo, hi));
}

double rel_grad_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& fd) {
  return (analytic - fd).norm() / std::max(analytic.norm(), 1e-10);
}

}  // namespace

PropertyResult check_gradient_fd(const Instance& inst, int points, std::uint64_t seed,
                                 bool inject_fault) {
  Checker c;
  Rng rng(seed);
  const int m = inst.m;
  const int dbar = inst.params.block_dim;
  const double scale = 150.0 * kPi * inst.params.eps / (std::sqrt(double(m)) * inst.params.lip_f);

  auto h_grad_fn = [&](int i, const Eigen::VectorXd& z) {
    Eigen::VectorXd g = h_grad(i, z, m);
    if (inject_fault) g(0) = -g(0);  // test-only broken branch
    return g;
  };

  // h_i.
  for (int i = 1; i <= m && c.ok; ++i) {
    for (int p = 0; p < points && c.ok; ++p) {
      const Eigen::VectorXd z = random_vec(rng, dbar, -2.0, 2.0);
      const Eigen::VectorXd g = h_grad_fn(i, z);
      Eigen::VectorXd fd(dbar);
      const double hstep = 1e-6;
      for (int j = 0; j < dbar; ++j) {
        Eigen::VectorXd zp = z, zm = z;
        zp(j) += hstep;
        zm(j) -= hstep;
        fd(j) = (h_value(i, zp, m) - h_value(i, zm, m)) / (2.0 * hstep);
      }
      const double rel = rel_grad_error(g, fd);
      c.expect(rel <= 1e-6, "grad h_" + std::to_string(i) + " fd mismatch, rel=" +
                                std::to_string(rel));
    }
  }

  // f_i.
  for (int i = 1; i <= m && c.ok; ++i) {
    for (int p = 0; p < points && c.ok; ++p) {
      const Eigen::VectorXd z = random_vec(rng, dbar, -2.0 * scale, 2.0 * scale);
      const Eigen::VectorXd g = f_grad(i, z, inst.params);
      Eigen::VectorXd fd(dbar);
      const double hstep = 1e-6 * scale;
      for (int j = 0; j < dbar; ++j) {
        Eigen::VectorXd zp = z, zm = z;
        zp(j) += hstep;
        zm(j) -= hstep;
        fd(j) = (f_value(i, zp, inst.params) - f_value(i, zm, inst.params)) / (2.0 * hstep);
      }
      const double rel = rel_grad_error(g, fd);
      c.expect(rel <= 1e-6, "grad f_" + std::to_string(i) + " fd mismatch, rel=" +
                                std::to_string(rel));
    }
  }

  // f0 over block vectors.
  for (int p = 0; p < points && c.ok; ++p) {
    const BlockVector x = random_block(rng, m, dbar, -2.0 * scale, 2.0 * scale);
    const BlockVector g = f0_grad(x, inst.params);
    Eigen::VectorXd fd(x.size());
    const double hstep = 1e-6 * scale;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      BlockVector xp = x, xm = x;
      xp.vec()(j) += hstep;
      xm.vec()(j) -= hstep;
      fd(j) = (f0_value(xp, inst.params) - f0_value(xm, inst.params)) / (2.0 * hstep);
    }
    const double rel = rel_grad_error(g.vec(), fd);
    c.expect(rel <= 1e-6, "grad f0 fd mismatch, rel=" + std::to_string(rel));
  }

  return {"gradient_fd", c.ok, c.detail.str()};
}

PropertyResult check_bound_suite(const Instance& inst, int samples, int lipschitz_pairs,
                                 long gap_samples, std::uint64_t seed) {
  Checker c;
  Rng rng(seed);
  const int m = inst.m;
  const int dbar = inst.params.block_dim;
  const double scale = 150.0 * kPi * inst.params.eps / (std::sqrt(double(m)) * inst.params.lip_f);
  const double psi_prime_max = std::sqrt(2.0 / std::exp(1.0));

  for (int s = 0; s < samples && c.ok; ++s) {
    const double u = rng.uniform(-10.0, 10.0);
    const double v = rng.uniform(-10.0, 10.0);
    // psi < 1 holds strictly wherever 1 - psi is representable; for u^2 beyond
    // ~36, e^{-u^2} underflows the 1-ulp gap and the correctly rounded value
    // is exactly 1.
    const bool strict_ok = psi(u) < 1.0 || std::exp(-u * u) < 1e-15;
    c.expect(psi(u) >= 0.0 && psi(u) <= 1.0 && strict_ok,
             "psi range violated at u=" + std::to_string(u));
    c.expect(psi_prime(u) >= 0.0 && psi_prime(u) <= psi_prime_max * (1.0 + 1e-12),
             "psi' range violated at u=" + std::to_string(u));
    c.expect(phi(v) > 0.0 && phi(v) < 4.0 * kPi, "phi range violated at v=" + std::to_string(v));
    c.expect(phi_prime(v) > 0.0 && phi_prime(v) <= 4.0,
             "phi' range violated at v=" + std::to_string(v));
    const double u1 = rng.uniform(1.0, 10.0);
    const double v1 = rng.uniform(-1.0, 1.0);
    c.expect(psi(u1) * phi_prime(v1) > 1.0,
             "psi(u)phi'(v) <= 1 at u=" + std::to_string(u1) + " v=" + std::to_string(v1));
  }

  // Sup-norm gradient bound, strict.
  for (int s = 0; s < samples && c.ok; ++s) {
    const Eigen::VectorXd z = random_vec(rng, dbar, -2.0, 2.0);
    for (int i = 1; i <= m; ++i) {
      const double gmax = h_grad(i, z, m).lpNorm<Eigen::Infinity>();
      c.expect(gmax < 25.0 * kPi, "||grad h||_inf = " + std::to_string(gmax) + " >= 25 pi");
    }
    const double fmax = f_grad(1 + rng.index(m), scale * z, inst.params).lpNorm<Eigen::Infinity>();
    c.expect(fmax <= 50.0 * kPi * inst.params.eps / std::sqrt(double(m)) * (1.0 + 1e-12),
             "||grad f||_inf bound violated");
  }

  // Empirical Lipschitz constants.
  for (int s = 0; s < lipschitz_pairs && c.ok; ++s) {
    const int i = 1 + rng.index(m);
    const Eigen::VectorXd z1 = random_vec(rng, dbar, -3.0, 3.0);
    const Eigen::VectorXd z2 = random_vec(rng, dbar, -3.0, 3.0);
    const double lips_h = (h_grad(i, z1, m) - h_grad(i, z2, m)).norm() / (z1 - z2).norm();
    c.expect(lips_h <= 75.0 * kPi * (1.0 + 1e-9),
             "grad h Lipschitz ratio " + std::to_string(lips_h) + " > 75 pi");
    const double lips_f = (f_grad(i, scale * z1, inst.params) - f_grad(i, scale * z2, inst.params))
                              .norm() /
                          (scale * (z1 - z2)).norm();
    c.expect(lips_f <= inst.params.lip_f * (1.0 + 1e-9),
             "grad f Lipschitz ratio " + std::to_string(lips_f) + " > L_f");
  }

  // One-sided objective-gap bound from the sampled minimum.
  const double f0_at_zero = f0_value(inst.zero_x(), inst.params);
  double sampled_min = f0_at_zero;
  for (long s = 0; s < gap_samples; ++s) {
    const BlockVector x = random_block(rng, m, dbar, -2.0 * scale, 4.0 * scale);
    sampled_min = std::min(sampled_min, f0_value(x, inst.params));
  }
  const double gap_bound =
      3000.0 * kPi * kPi * dbar * inst.params.eps * inst.params.eps / inst.params.lip_f;
  c.expect(f0_at_zero - sampled_min <= gap_bound,
           "sampled objective gap " + std::to_string(f0_at_zero - sampled_min) +
               " exceeds bound " + std::to_string(gap_bound));

  return {"bound_suite", c.ok, c.detail.str()};
}

PropertyResult check_spectra(const std::vector<std::pair<int, int>>& m1_m2_pairs, int block_dim,
                             double lip_f) {
  Checker c;
  for (const auto& [m1, m2] : m1_m2_pairs) {
    const int m = 3 * m1 * m2;
    const ChainOperator chain = ChainOperator::full_chain(m * lip_f, m, 1);
    const Eigen::MatrixXd dense = chain.dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense * dense.transpose());
    const std::vector<double> closed = full_chain_gram_eigs(m, lip_f);
    for (int i = 0; i < m - 1; ++i) {
      const double rel = std::abs(closed[i] - es.eigenvalues()(i)) / es.eigenvalues()(m - 2);
      c.expect(rel <= 1e-9, "m=" + std::to_string(m) + " eig " + std::to_string(i) +
                                " closed-form mismatch rel=" + std::to_string(rel));
    }
    const double kappa = stacked_condition_number(m);
    const double kappa_dense =
        std::sqrt(es.eigenvalues()(m - 2) / es.eigenvalues()(0));
    c.expect(std::abs(kappa - kappa_dense) <= 1e-9 * kappa_dense,
             "m=" + std::to_string(m) + " kappa mismatch");
    c.expect(kappa >= m / 4.0 && kappa < m, "m=" + std::to_string(m) + " kappa window violated");

    // Abar Abar^T = 2 m^2 L_f^2 I for the instance row selection.
    std::vector<int> rows_m;
    for (int i = 1; i <= 3 * m2 - 1; ++i) rows_m.push_back(i * m1);
    const ChainOperator abar(m * lip_f, m, block_dim, rows_m);
    const Eigen::MatrixXd ad = abar.dense();
    const Eigen::MatrixXd gram = ad * ad.transpose();
    const double target = 2.0 * m * m * lip_f * lip_f;
    const double err = (gram - target * Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))
                           .cwiseAbs()
                           .maxCoeff();
    c.expect(err <= 1e-10 * target,
             "m=" + std::to_string(m) + " Abar Abar^T deviates from 2 m^2 L_f^2 I");
  }
  return {"spectra", c.ok, c.detail.str()};
}

PropertyResult check_structured_ops(std::uint64_t seed) {
  Checker c;
  Rng rng(seed);

  for (int trial = 0; trial < 50 && c.ok; ++trial) {
    const int p = 3 + rng.index(10);
    const int bd = 1 + rng.index(4);
    std::vector<int> rows;
    for (int r = 1; r <= p - 1; ++r) {
      if (rng.uniform() < 0.6) rows.push_back(r);
    }
    if (rows.empty()) rows.push_back(1 + rng.index(p - 1));
    const double scale = rng.uniform(0.5, 8.0);
    const ChainOperator op(scale, p, bd, rows);

    const BlockVector x = random_block(rng, p, bd, -2.0, 2.0);
    const BlockVector y = random_block(rng, op.output_blocks(), bd, -2.0, 2.0);
    const double lhs = op.apply(x).vec().dot(y.vec());
    const double rhs = x.vec().dot(op.apply_transpose(y).vec());
    const double tol = 1e-12 * (x.norm() * y.norm() * op.norms().spectral_norm + 1.0);
    c.expect(std::abs(lhs - rhs) <= tol, "adjoint identity violated");

    const Eigen::MatrixXd dense = op.dense();
    c.expect((dense * x.vec() - op.apply(x).vec()).lpNorm<Eigen::Infinity>() <= 1e-14 * scale * 4,
             "dense/implicit matvec mismatch");
  }

  // Null space: constant block vectors map to exact zero.
  {
    const int m = 6, bd = 5;
    const ChainOperator chain = ChainOperator::full_chain(6.0, m, bd);
    BlockVector x(m, bd);
    const Eigen::VectorXd u = random_vec(rng, bd, -3.0, 3.0);
    for (int i = 0; i < m; ++i) x.block(i) = u;
    c.expect(chain.apply(x).vec().lpNorm<Eigen::Infinity>() == 0.0,
             "constant vector not exactly in the null space");
  }

  // Row split: H x equals the row-sorted concatenation of Abar x and A x.
  {
    Instance inst = build_instance({2, 1, 5, 0.1, 1.0, 0.0});
    const BlockVector x = random_block(rng, inst.m, 5, -2.0, 2.0);
    const BlockVector hx = inst.op_h.apply(x);
    const BlockVector ax = inst.op_a.apply(x);
    const BlockVector abx = inst.op_abar.apply(x);
    size_t ia = 0, ib = 0;
    for (int r = 1; r <= inst.m - 1; ++r) {
      const bool in_m = ib < inst.rows_m.size() && inst.rows_m[ib] == r;
      const auto expected = in_m ? abx.block(static_cast<int>(ib)) : ax.block(static_cast<int>(ia));
      c.expect((hx.block(r - 1) - expected).lpNorm<Eigen::Infinity>() == 0.0,
               "row split mismatch at row " + std::to_string(r));
      (in_m ? ib : ia) += 1;
    }
  }

  return {"structured_ops", c.ok, c.detail.str()};
}

namespace {

// Independent minimizer of the pairwise prox objective. Cyclic coordinate
// descent on (y1, y2) directly can stall at the |y1 - y2| kink, so the
// descent runs in the rotated coordinates s = y1 + y2, u = y1 - y2, where
//   0.5 (y1-a)^2 + 0.5 (y2-b)^2 + c |y1-y2|
//   = 0.25 (s - (a+b))^2 + 0.25 (u - (a-b))^2 + c |u| + const,
// i.e. the objective is separable and each scalar step is exact.
BlockVector pairwise_prox_bruteforce(const BlockVector& x, double c,
                                     const PairwiseGeometry& geom) {
  auto scalar_soft = [](double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
  };
  BlockVector y = x;
  for (int i : geom.pairs) {
    auto lo = y.block(i - 1);
    auto hi = y.block(i);
    for (int j = 0; j < geom.block_dim; ++j) {
      const double a = x.block(i - 1)(j), b = x.block(i)(j);
      double s = a + b, u = a - b;
      for (int sweep = 0; sweep < 1000; ++sweep) {
        const double s_new = a + b;                  // argmin of the s part
        const double u_new = scalar_soft(a - b, 2.0 * c);  // argmin of the u part
        const double change = std::max(std::abs(s_new - s), std::abs(u_new - u));
        s = s_new;
        u = u_new;
        if (change <= 1e-12) break;
      }
      lo(j) = 0.5 * (s + u);
      hi(j) = 0.5 * (s - u);
    }
  }
  return y;
}

}  // namespace

PropertyResult check_prox_oracles(int pairwise_inputs, std::uint64_t seed) {
  Checker c;
  Rng rng(seed);

  // Pairwise prox vs coordinate descent.
  const PairwiseGeometry geom = make_pairwise_geometry({2, 4}, 6, 5);
  for (int t = 0; t < pairwise_inputs && c.ok; ++t) {
    const BlockVector x = random_block(rng, 6, 5, -5.0, 5.0);
    const double cthr = rng.uniform(0.05, 3.0);
    const BlockVector closed = prox_pairwise_l1(x, cthr, geom);
    const BlockVector brute = pairwise_prox_bruteforce(x, cthr, geom);
    const double err = (closed.vec() - brute.vec()).lpNorm<Eigen::Infinity>();
    c.expect(err <= 1e-8, "pairwise prox vs coordinate descent err=" + std::to_string(err));
    // Pairs {2,4} couple 1-based blocks (2,3) and (4,5); blocks 1 and 6 pass through.
    for (int i : {0, 5}) {
      c.expect((closed.block(i) - x.block(i)).lpNorm<Eigen::Infinity>() == 0.0,
               "untouched block modified");
    }
  }

  // Moreau identity against the closed-form box projection.
  auto prox_l1 = [](const Eigen::VectorXd& v, double t) { return prox_weighted_l1(v, t * 0.7); };
  for (int t = 0; t < 200 && c.ok; ++t) {
    const Eigen::VectorXd z = random_vec(rng, 7, -3.0, 3.0);
    const double eta = rng.uniform(0.2, 4.0);
    const Eigen::VectorXd via_moreau = prox_conjugate(prox_l1, z, eta);
    const Eigen::VectorXd via_clamp = project_linf_ball(z, 0.7);
    c.expect((via_moreau - via_clamp).lpNorm<Eigen::Infinity>() <= 1e-12,
             "Moreau route deviates from the box projection");
  }

  // Subdifferential distance vs an independent per-coordinate grid search.
  for (int t = 0; t < 10 && c.ok; ++t) {
    const double cthr = 0.7;
    Eigen::VectorXd y = random_vec(rng, 3, -1.0, 1.0);
    for (int j = 0; j < 3; ++j) {
      if (rng.uniform() < 0.4) y(j) = 0.0;
    }
    const Eigen::VectorXd z = random_vec(rng, 3, -2.0, 2.0);
    double sq = 0.0;
    const long grid = 6'000'000;
    for (int j = 0; j < 3; ++j) {
      double best = std::numeric_limits<double>::max();
      if (y(j) != 0.0) {
        best = std::abs(cthr * (y(j) > 0 ? 1.0 : -1.0) - z(j));
      } else {
        for (long g = 0; g <= grid; ++g) {
          const double v = -cthr + 2.0 * cthr * static_cast<double>(g) / grid;
          best = std::min(best, std::abs(v - z(j)));
        }
      }
      sq += best * best;
    }
    const double oracle = std::sqrt(sq);
    const double closed = subdiff_distance_weighted_l1(y, z, cthr);
    c.expect(std::abs(oracle - closed) <= 1e-6,
             "subdiff distance grid mismatch " + std::to_string(std::abs(oracle - closed)));
  }

  // Firm nonexpansiveness (1-Lipschitz) of every prox in the kit.
  for (int t = 0; t < 300 && c.ok; ++t) {
    const Eigen::VectorXd a = random_vec(rng, 10, -4.0, 4.0);
    const Eigen::VectorXd b = random_vec(rng, 10, -4.0, 4.0);
    const double cthr = rng.uniform(0.0, 2.0);
    c.expect((prox_weighted_l1(a, cthr) - prox_weighted_l1(b, cthr)).norm() <=
                 (a - b).norm() * (1.0 + 1e-12),
             "soft threshold expansive");
    c.expect((project_linf_ball(a, cthr) - project_linf_ball(b, cthr)).norm() <=
                 (a - b).norm() * (1.0 + 1e-12),
             "clamp expansive");
    const BlockVector xa(2, 5, a), xb(2, 5, b);
    const PairwiseGeometry g2 = make_pairwise_geometry({1}, 2, 5);
    c.expect((prox_pairwise_l1(xa, cthr, g2).vec() - prox_pairwise_l1(xb, cthr, g2).vec())
                     .norm() <= (a - b).norm() * (1.0 + 1e-12),
             "pairwise prox expansive");
  }

  // Prox optimality inclusion for the weighted l1 closed form.
  for (int t = 0; t < 200 && c.ok; ++t) {
    const Eigen::VectorXd v = random_vec(rng, 8, -3.0, 3.0);
    const double eta = rng.uniform(0.2, 2.0);
    const double cthr = rng.uniform(0.1, 1.5);
    const Eigen::VectorXd p = prox_weighted_l1(v, eta * cthr);
    const double dist = subdiff_distance_weighted_l1(p, (v - p) / eta, cthr);
    c.expect(dist <= 1e-10, "prox optimality inclusion violated, dist=" + std::to_string(dist));
  }

  return {"prox_oracles", c.ok, c.detail.str()};
}

namespace {

using Mask = SupportMask;

Mask mask_of_vec(const Eigen::VectorXd& v) {
  Mask m = 0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (v(j) != 0.0) m |= Mask{1} << j;
  }
  return m;
}

Mask prefix(int k) { return k <= 0 ? 0 : (k >= 64 ? ~Mask{0} : (Mask{1} << k) - 1); }

}  // namespace

PropertyResult check_support_combinatorics(const Instance& inst, int sparse_inputs,
                                           std::uint64_t seed) {
  Checker c;
  Rng rng(seed);
  const int m = inst.m;
  const int dbar = inst.params.block_dim;
  const double scale = 150.0 * kPi * inst.params.eps / (std::sqrt(double(m)) * inst.params.lip_f);

  // Gradient support rule, exhaustive over prefixes.
  for (int jbar = 1; jbar <= dbar && c.ok; ++jbar) {
    for (int t = 0; t < sparse_inputs && c.ok; ++t) {
      Eigen::VectorXd z = Eigen::VectorXd::Zero(dbar);
      for (int j = 0; j < jbar - 1; ++j) {
        if (rng.uniform() < 0.7) z(j) = rng.uniform(-2.0 * scale, 2.0 * scale);
      }
      for (int i = 1; i <= m; ++i) {
        const Mask gm = mask_of_vec(f_grad(i, z, inst.params));
        int allowed;
        if (jbar == 1) {
          allowed = 1;
        } else if (jbar % 2 == 0) {
          allowed = (i <= m / 3) ? jbar : jbar - 1;
        } else {
          allowed = (i <= 2 * m / 3) ? jbar - 1 : jbar;
        }
        c.expect((gm & ~prefix(allowed)) == 0,
                 "grad f support table violated at jbar=" + std::to_string(jbar) +
                     " i=" + std::to_string(i));
      }
    }
  }

  auto sparse_block = [&](int blocks) {
    BlockVector x(blocks, dbar);
    for (int i = 0; i < blocks; ++i) {
      for (int j = 0; j < dbar; ++j) {
        if (rng.uniform() < 0.25) x.block(i)(j) = rng.uniform(-2.0, 2.0);
      }
    }
    return x;
  };

  // Matvec and prox propagation with exact zeros.
  for (int t = 0; t < sparse_inputs && c.ok; ++t) {
    const BlockVector x = sparse_block(m);
    std::vector<Mask> in(m), out(m);
    for (int i = 0; i < m; ++i) in[i] = mask_of_vec(x.block(i));

    const BlockVector atax(m, dbar, inst.op_a.apply_transpose(inst.op_a.apply(x.vec())));
    for (int i = 0; i < m; ++i) out[i] = mask_of_vec(atax.block(i));
    for (int i = 0; i < m; ++i) {
      Mask allowed = in[i];
      if (i > 0) allowed |= in[i - 1];
      if (i + 1 < m) allowed |= in[i + 1];
      c.expect((out[i] & ~allowed) == 0, "A^T A support propagation violated");
    }

    const PairwiseGeometry geom = make_pairwise_geometry(inst.rows_m, m, dbar);
    const BlockVector prox = prox_pairwise_l1(x, rng.uniform(0.1, 2.0), geom);
    for (int i = 0; i < m; ++i) {
      Mask allowed = in[i];
      if (i > 0) allowed |= in[i - 1];
      if (i + 1 < m) allowed |= in[i + 1];
      c.expect((mask_of_vec(prox.block(i)) & ~allowed) == 0,
               "pairwise prox support propagation violated");
    }

    // y-side rules.
    const int yblocks = 3 * inst.params.m2 - 1;
    const BlockVector y = sparse_block(yblocks);
    std::vector<Mask> ym(yblocks);
    for (int j = 0; j < yblocks; ++j) ym[j] = mask_of_vec(y.block(j));

    const BlockVector aty(m, dbar, inst.op_abar.apply_transpose(y.vec()));
    for (int i = 1; i <= m; ++i) {
      Mask allowed = 0;
      if (i % inst.params.m1 == 0 && i / inst.params.m1 <= yblocks) {
        allowed |= ym[i / inst.params.m1 - 1];
      }
      if ((i - 1) % inst.params.m1 == 0 && (i - 1) / inst.params.m1 >= 1 &&
          (i - 1) / inst.params.m1 <= yblocks) {
        allowed |= ym[(i - 1) / inst.params.m1 - 1];
      }
      c.expect((mask_of_vec(aty.block(i - 1)) & ~allowed) == 0, "Abar^T y support rule violated");
    }

    const BlockVector abx(yblocks, dbar, inst.op_abar.apply(x.vec()));
    for (int j = 1; j <= yblocks; ++j) {
      const int row = j * inst.params.m1;
      const Mask allowed = in[row - 1] | in[row];
      c.expect((mask_of_vec(abx.block(j - 1)) & ~allowed) == 0, "Abar x support rule violated");
    }

    const BlockVector aaty(yblocks, dbar,
                           inst.op_abar.apply(inst.op_abar.apply_transpose(y.vec())));
    for (int j = 0; j < yblocks; ++j) {
      c.expect(mask_of_vec(aaty.block(j)) == ym[j], "Abar Abar^T support identity violated");
    }

    const Eigen::VectorXd proxy = prox_weighted_l1(y.vec(), rng.uniform(0.05, 1.0));
    const BlockVector proxyb(yblocks, dbar, proxy);
    for (int j = 0; j < yblocks; ++j) {
      c.expect((mask_of_vec(proxyb.block(j)) & ~ym[j]) == 0, "prox gbar support grew");
    }
  }

  return {"support_combinatorics", c.ok, c.detail.str()};
}

PropertyResult check_span_floors(const InstanceParams& params, std::uint64_t seed) {
  Checker c;
  try {
    Instance inst = build_instance(params);
    const int m = inst.m;
    const int dbar = params.block_dim;

    // Greedy A2: the engine itself throws on any floor violation.
    const int t_a2 = 4 + m * (dbar - 2) / 6 + m;
    const SupportTrace a2 = run_tracked_a2(inst, greedy_a2_schedule(t_a2, seed));
    for (int j = 2; j <= dbar; ++j) {
      const long act = a2.first_activation[j - 1];
      if (act >= 0) {
        c.expect(6 * (act - 1) > static_cast<long>(m) * (j - 2),
                 "A2 activation of coordinate " + std::to_string(j) + " too early");
      }
    }
    c.expect(mask_of_vec(Eigen::VectorXd::Zero(1)) == 0, "");  // keep -Wunused quiet

    // t = 1 sanity: only coordinate 1 can be active.
    c.expect(a2.entries.size() > 1, "A2 trace too short");
    for (const Mask msk : a2.entries[1].x_supports) {
      c.expect((msk & ~Mask{1}) == 0, "A2 t=1 support exceeds {1}");
    }

    // Greedy A3.
    const int t_a3 = 4 + m * (dbar - 2) / 3 + m;
    const SupportTrace a3 = run_tracked_a3(inst, greedy_a3_schedule(t_a3, seed + 1));
    for (int j = 2; j <= dbar; ++j) {
      const long act = a3.first_activation[j - 1];
      if (act >= 0) {
        c.expect(3 * (act - 1) > static_cast<long>(m) * (j - 2),
                 "A3 activation of coordinate " + std::to_string(j) + " too early");
      }
    }
    c.expect(a3.entries.size() > 1, "A3 trace too short");
    for (const Mask msk : a3.entries[1].x_supports) {
      c.expect((msk & ~Mask{1}) == 0, "A3 t=1 x support exceeds {1}");
    }
    for (const Mask msk : a3.entries[1].y_supports) {
      c.expect(msk == 0, "A3 t=1 y support nonzero");
    }

    // Zero schedule: supports stay empty.
    A2Schedule zero;
    zero.steps.assign(5, A2Step{});
    const SupportTrace z = run_tracked_a2(inst, zero);
    for (const auto& e : z.entries) {
      for (const Mask msk : e.x_supports) c.expect(msk == 0, "zero schedule grew support");
    }

    // The solver replayed through the tracked oracles.
    TrackedIpgConfig tcfg;
    tcfg.outer_iters = 3;
    run_ipg_tracked_a3(inst, tcfg);
  } catch (const SpanRuleError& e) {
    c.fail(std::string("span rule violation: ") + e.what());
  }
  return {"span_floors", c.ok, c.detail.str()};
}

PropertyResult check_stationarity_bounds(const Instance& inst, int trials, std::uint64_t seed) {
  Checker c;
  Rng rng(seed);
  const int m = inst.m;
  const int dbar = inst.params.block_dim;
  const double scale = 150.0 * kPi * inst.params.eps / (std::sqrt(double(m)) * inst.params.lip_f);

  // Block-average lower bound under the AP measure.
  for (int t = 0; t < trials && c.ok; ++t) {
    const BlockVector x = random_block(rng, m, dbar, -2.0 * scale, 2.0 * scale);
    const auto rep = audit_ap(inst, x, inst.params.eps);
    const double lb = block_average_lower_bound(inst, x);
    c.expect(rep.max_residual() >= lb * (1.0 - 1e-9),
             "AP residual below the block-average lower bound");
  }

  // Small-coordinate certificate: zeroed last coordinate forces bound > eps.
  for (int t = 0; t < trials && c.ok; ++t) {
    BlockVector x = random_block(rng, m, dbar, -2.0 * scale, 2.0 * scale);
    for (int i = 0; i < m; ++i) x.block(i)(dbar - 1) = 0.0;
    const auto cert = small_coordinate_certificate(inst, x);
    c.expect(cert.violating_j.has_value(), "zeroed coordinate not detected");
    c.expect(cert.bound > inst.params.eps, "lower bound not above eps despite zero coordinate");
  }

  {
    const auto cert = small_coordinate_certificate(inst, inst.zero_x());
    c.expect(cert.violating_j.has_value() && *cert.violating_j == 1,
             "certificate at zero should flag coordinate 1");
    c.expect(cert.bound > inst.params.eps, "certificate bound at zero not above eps");
  }

  // Projected-gradient residual vs a dense least-squares oracle.
  {
    const Eigen::MatrixXd hd = inst.op_h.dense();
    for (int t = 0; t < 25 && c.ok; ++t) {
      const BlockVector x = random_block(rng, m, dbar, -2.0 * scale, 2.0 * scale);
      const Eigen::VectorXd g = f0_grad(x, inst.params).vec();
      const Eigen::VectorXd gamma = (hd.transpose()).colPivHouseholderQr().solve(-g);
      const double lsq = (g + hd.transpose() * gamma).norm();
      const auto rep = audit_ap(inst, x, inst.params.eps);
      c.expect(std::abs(rep.residuals.at("projected_grad") - lsq) <= 1e-8 * std::max(1.0, lsq),
               "projected gradient vs dense least squares mismatch");
    }
  }

  return {"stationarity_bounds", c.ok, c.detail.str()};
}

std::vector<PropertyResult> run_verify_suite(const VerifyOptions& opts) {
  std::vector<PropertyResult> out;
  Instance inst = build_instance(opts.params);
  out.push_back(check_gradient_fd(inst, 25, opts.seed, opts.inject_gradient_fault));
  out.push_back(check_bound_suite(inst, 2000, 10000, 100000, opts.seed + 1));
  out.push_back(check_spectra({{2, 1}, {2, 2}, {2, 4}}, opts.params.block_dim, opts.params.lip_f));
  out.push_back(check_structured_ops(opts.seed + 2));
  out.push_back(check_prox_oracles(50, opts.seed + 3));
  out.push_back(check_support_combinatorics(inst, 40, opts.seed + 4));
  out.push_back(check_span_floors({2, 2, 7, 0.1, 1.0, 0.0}, opts.seed + 5));
  out.push_back(check_stationarity_bounds(inst, 300, opts.seed + 6));
  return out;
}

}  // namespace ipg
