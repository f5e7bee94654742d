#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>

#include "ipg/composite_problem.hpp"
#include "ipg/instance.hpp"

namespace ipg {

enum class ProblemKind { P, SP, AP };

// Measurable residuals for one candidate point. Residual names are part of
// the serialized schema:
//   SP: subdiff_dist, grad_residual, split_feas, affine_feas
//   AP: consensus_residual, projected_grad
//   P:  grad_residual, affine_feas
struct StationarityReport {
  ProblemKind kind = ProblemKind::SP;
  double epsilon = 0.0;
  bool certified = false;
  bool converged = true;  // false when an inner minimization hit its cap
  std::map<std::string, double> residuals;
  Eigen::VectorXd z1, z2;  // multipliers used (gamma in z2 for P/AP audits)

  double max_residual() const;
};

// epsilon = 0 audits use this absolute floor for the comparisons.
inline constexpr double kZeroEpsFloor = 1e-12;

// Splitting-problem audit per the four KKT terms:
// dist(z1, d gbar(y)), ||grad f0(x) + Abar^T z1 + A^T z2||,
// ||y - Abar x - bbar||, ||A x + b||.
StationarityReport audit_sp(const CompositeProblem& prob, const BlockVector& x,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& z1,
                            const Eigen::VectorXd& z2, double eps);

// Consensus-problem audit: residuals ||H x|| and the null-space projection of
// the gradient, (1/sqrt(m)) || sum_i grad f_i(x_i) ||.
StationarityReport audit_ap(const Instance& inst, const BlockVector& x, double eps);

// (sqrt(m)/2) || (1/m) sum_i grad f_i(xbar) || with xbar the block average;
// a lower bound on the AP stationarity measure.
double block_average_lower_bound(const Instance& inst, const BlockVector& x);

struct SmallCoordCertificate {
  std::optional<int> violating_j;  // 1-based coordinate below the threshold
  double bound = 0.0;              // block_average_lower_bound at x
  double threshold = 0.0;          // 150 pi eps / (sqrt(m) lip_f)
};

// Finds a block-average coordinate below 150 pi eps/(sqrt(m) L_f); when one
// exists the reported bound exceeds eps.
SmallCoordCertificate small_coordinate_certificate(const Instance& inst, const BlockVector& x);

struct AuditPOptions {
  int max_iter = 10000;
  double tol = 1e-9;
};

// Upper bound on the original-problem stationarity measure at x: minimizes
// ||grad f0(x) + A^T gamma + Abar^T u|| over gamma free and u constrained to
// d gbar(Abar x + bbar), by alternating exact least squares in gamma with
// projected gradient steps in u, starting from the supplied (gamma, u).
// The report's grad_residual is an upper bound on the true distance.
StationarityReport audit_p_relaxed(const CompositeProblem& prob, const BlockVector& x,
                                   Eigen::VectorXd gamma, Eigen::VectorXd u, double eps,
                                   const AuditPOptions& opts = {});

}  // namespace ipg
